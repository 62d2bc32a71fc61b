"""Deterministic synthetic corpora with planted structure.

Three generators:

* :func:`planted_translation_graph` -- a small KG whose tails are exact
  nearest translations of planted unit vectors (TransE sanity checks);
* :func:`feature_fixture` -- feature vectors plus reference lists produced by
  hidden ground-truth weights (GA and recommender checks);
* :func:`write_pipeline_fixture` -- per-source record files, a seed graph,
  reference lists, opinions and a config for the CLI pipeline.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import levenshtein
from .evaluation import OpinionDataset
from .kg import KnowledgeGraph
from .recommender import FEATURES, MovieFeatureVectors, SimilarityTable
from .tfidf import SparseVector


def planted_translation_graph(
    num_entities: int = 30,
    num_relations: int = 3,
    dim: int = 8,
    heads_per_relation: int = 20,
    seed: int = 0,
) -> tuple[KnowledgeGraph, np.ndarray, np.ndarray]:
    """KG whose tail for ``(h, r)`` is the entity nearest to ``e_h + v_r``.

    Returns the graph and the planted entity / relation vectors.
    """
    rng = np.random.default_rng(seed)
    ent = rng.normal(size=(num_entities, dim))
    ent /= np.linalg.norm(ent, axis=1, keepdims=True)
    rel = rng.normal(size=(num_relations, dim))
    rel *= 0.5 / np.linalg.norm(rel, axis=1, keepdims=True)
    g = KnowledgeGraph()
    for i in range(num_entities):
        g.add_entity(f"ex:e{i}")
    for r in range(num_relations):
        g.add_relation(f"ex:r{r}")
    for r in range(num_relations):
        heads = rng.choice(num_entities, size=min(heads_per_relation, num_entities), replace=False)
        for h in sorted(int(x) for x in heads):
            d = np.linalg.norm(ent[h] + rel[r] - ent, axis=1)
            d[h] = np.inf
            g.add_triple(h, r, int(np.argmin(d)))
    return g, ent, rel


def feature_fixture(
    n_movies: int = 50,
    true_weights: Sequence[float] = (1.0, 0.05, 0.0, 0.15, 0.7),
    dim: int = 8,
    n_clusters: int = 6,
    vocab_size: int = 60,
    k_range: tuple[int, int] = (3, 8),
    missing_rate: float = 0.1,
    seed: int = 0,
) -> tuple[dict[str, MovieFeatureVectors], dict[str, list[str]]]:
    """Feature vectors with an independent cluster structure per feature.

    Reference lists are the top-k movies under ``true_weights``, so only the
    features those weights emphasise carry signal.
    """
    rng = np.random.default_rng(seed)
    ids = [f"m{i:03d}" for i in range(n_movies)]
    vectors: dict[str, MovieFeatureVectors] = {}
    text_topics = rng.integers(0, n_clusters, size=n_movies)
    topic_words = [rng.choice(vocab_size, size=vocab_size // n_clusters + 4, replace=False) for _ in range(n_clusters)]
    dense: dict[str, np.ndarray] = {}
    for name in FEATURES[1:]:
        centers = rng.normal(size=(n_clusters, dim))
        labels = rng.integers(0, n_clusters, size=n_movies)
        dense[name] = centers[labels] + 0.35 * rng.normal(size=(n_movies, dim))
    for i, mid in enumerate(ids):
        words = rng.choice(topic_words[text_topics[i]], size=6, replace=False)
        noise = rng.choice(vocab_size, size=2, replace=False)
        counts: dict[int, float] = {}
        for w in list(words) + list(noise):
            counts[int(w)] = counts.get(int(w), 0.0) + float(rng.uniform(0.2, 1.0))
        feats = {}
        for name in FEATURES[1:]:
            feats[name] = None if rng.random() < missing_rate else dense[name][i].copy()
        vectors[mid] = MovieFeatureVectors(
            mid,
            SparseVector.from_dict(counts),
            feats["director"],
            feats["producer"],
            feats["actors"],
            feats["genre"],
        )
    table = SimilarityTable(vectors, ids)
    ref: dict[str, list[str]] = {}
    for mid in ids:
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        ref[mid] = table.recommend(mid, k, np.asarray(true_weights, dtype=float)).movies
    return vectors, ref


def random_feature_vectors(
    n_movies: int,
    rng: np.random.Generator,
    dim: int = 6,
    vocab_size: int = 40,
    missing_rate: float = 0.2,
    clones: int = 3,
) -> dict[str, MovieFeatureVectors]:
    """Unstructured random corpus; the first ``clones`` movies get exact copies (ties)."""
    out: dict[str, MovieFeatureVectors] = {}
    for i in range(n_movies - clones):
        nnz = int(rng.integers(0, 8))
        idx = rng.choice(vocab_size, size=nnz, replace=False)
        text = SparseVector.from_dict({int(j): float(rng.normal()) for j in idx})
        feats = [None if rng.random() < missing_rate else rng.normal(size=dim) for _ in FEATURES[1:]]
        mid = f"m{int(rng.integers(0, 10**6)):06d}-{i}"
        out[mid] = MovieFeatureVectors(mid, text, *feats)
    originals = list(out.values())
    for c in range(clones):
        src = originals[c % len(originals)]
        mid = f"clone{c}-{src.movie_id}"
        out[mid] = MovieFeatureVectors(
            mid, src.text_vec, src.director_vec, src.producer_vec, src.actors_vec, src.genre_vec
        )
    return out


# --- record-level fixture for the CLI pipeline -----------------------------

_GIVEN = ["علی", "رضا", "مریم", "سارا", "حسین", "نرگس", "مهدی", "لیلا", "پرویز", "بهرام", "شیرین", "کاوه"]
_FAMILY = ["احمدی", "کریمی", "رضایی", "حسینی", "تهرانی", "فرهادی", "مجیدی", "نوری", "بیضایی", "صدری", "امینی", "پاکدل"]
_GENRES = ["درام", "کمدی", "جنایی", "عاشقانه", "اجتماعی", "جنگی", "خانوادگی", "معمایی"]
_TITLE_WORDS = [
    "شب", "باران", "خانه", "دریا", "کوه", "سفر", "راز", "آینه", "پنجره", "باغ", "ستاره", "جاده",
    "سکوت", "فریاد", "نقاب", "پرواز", "سایه", "آتش", "برف", "خاک", "ماه", "قهرمان", "شهر", "رود",
]
_STORY_WORDS = [
    ["خانواده", "پدر", "مادر", "کودکی", "خاطره", "روستا", "مهاجرت", "ازدواج"],
    ["پلیس", "سرقت", "قاتل", "تعقیب", "زندان", "شاهد", "دادگاه", "انتقام"],
    ["عشق", "دیدار", "نامه", "جدایی", "دانشگاه", "باران", "رویا", "وعده"],
    ["جنگ", "سرباز", "جبهه", "شهادت", "مرز", "اسارت", "بازگشت", "امید"],
    ["خنده", "اشتباه", "همسایه", "مهمانی", "عروسی", "دردسر", "شانس", "ماجرا"],
]
_COMMON_WORDS = ["داستان", "زندگی", "مردی", "زنی", "تهران", "سال"]


def _person(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        name = f"{_GIVEN[rng.integers(len(_GIVEN))]} {_FAMILY[rng.integers(len(_FAMILY))]}"
        if name not in used:
            used.add(name)
            return name


def _titles(n: int, rng: np.random.Generator, min_distance: float = 0.45) -> list[str]:
    out: list[str] = []
    while len(out) < n:
        words = rng.choice(_TITLE_WORDS, size=int(rng.integers(2, 4)), replace=False)
        title = " ".join(words)
        if all(levenshtein(title, t) / max(len(title), len(t)) > min_distance for t in out):
            out.append(title)
    return out


def pipeline_movies(n_movies: int = 40, n_clusters: int = 5, seed: int = 7) -> tuple[list[dict], list[int]]:
    """Movie attribute dicts with a hidden cluster label each."""
    rng = np.random.default_rng(seed)
    used: set[str] = set()
    clusters = []
    for c in range(n_clusters):
        clusters.append(
            {
                "directors": [_person(rng, used) for _ in range(2)],
                "producers": [_person(rng, used) for _ in range(2)],
                "actors": [_person(rng, used) for _ in range(5)],
                "genres": list(rng.choice(_GENRES, size=2, replace=False)),
                "words": _STORY_WORDS[c % len(_STORY_WORDS)],
            }
        )
    titles = _titles(n_movies, rng)
    movies, labels = [], []
    for i in range(n_movies):
        c = int(rng.integers(n_clusters))
        cl = clusters[c]
        words = list(rng.choice(cl["words"], size=5)) + list(rng.choice(_COMMON_WORDS, size=2))
        movie = {
            "title": titles[i],
            "english_title": f"Movie {i:02d}",
            "storyline": " ".join(str(w) for w in words),
            "release_year": int(rng.integers(1985, 2022)),
            "duration": int(rng.integers(80, 140)),
            "genres": [str(g) for g in rng.choice(cl["genres"], size=int(rng.integers(1, 3)), replace=False)],
            "directors": [str(rng.choice(cl["directors"]))],
            "actors": [str(a) for a in rng.choice(cl["actors"], size=3, replace=False)],
        }
        if rng.random() < 0.8:
            movie["producers"] = [str(rng.choice(cl["producers"]))]
        movies.append(movie)
        labels.append(c)
    return movies, labels


def write_pipeline_fixture(directory: str | Path, n_movies: int = 40, seed: int = 7) -> Path:
    """Write source files, seed graph, reference, opinions and ``config.json``; returns the config path."""
    directory = Path(directory)
    (directory / "sources").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed + 1)
    movies, labels = pipeline_movies(n_movies, seed=seed)
    source_names = ["filimo", "namava", "cinematicket"]
    per_source: dict[str, list[dict]] = {s: [] for s in source_names}
    fused_id: list[str] = []
    for i, movie in enumerate(movies):
        present = [s for s in source_names if rng.random() < 0.6] or [source_names[i % 3]]
        fused_id.append(f"{present[0]}-{i:03d}")
        for s in present:
            rec = dict(movie)
            rec["id"] = f"{s}-{i:03d}"
            if s != present[0]:
                variant = rng.integers(3)
                if variant == 0:
                    rec["title"] = movie["title"] + "!"
                elif variant == 1:
                    rec["english_title"] = movie["english_title"].upper()
                # drop some attributes so fusion has to union them back
                if rng.random() < 0.3:
                    del rec["storyline"]
                rec["actors"] = movie["actors"][:2]
            rec["rates"] = [{"source": s, "score": round(float(rng.uniform(4, 9)), 1)}]
            per_source[s].append(rec)
    for s, recs in per_source.items():
        (directory / "sources" / f"{s}.json").write_text(
            json.dumps(recs, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )

    # seed graph: some known people with extra facts, plus an unrelated far component
    seed_lines = []
    people = sorted({p for m in movies for p in m["directors"]})[:4]
    for j, person in enumerate(people):
        uri = f"fb:person{j}"
        seed_lines.append({"h": uri, "r": "rdfs:label", "lit": person})
        seed_lines.append({"h": uri, "r": "fb:birthPlace", "t": f"fb:city{j % 2}"})
        seed_lines.append({"h": f"fb:city{j % 2}", "r": "fb:country", "t": "fb:iran"})
    for j in range(5):
        seed_lines.append({"h": f"fb:poet{j}", "r": "fb:influencedBy", "t": f"fb:poet{j + 1}"})
    (directory / "seed_graph.ndjson").write_text(
        "".join(json.dumps(o, ensure_ascii=False) + "\n" for o in seed_lines), encoding="utf-8"
    )

    ref = {}
    for i in range(n_movies):
        same = [fused_id[j] for j in range(n_movies) if j != i and labels[j] == labels[i]]
        if same:
            picks = rng.choice(len(same), size=min(len(same), int(rng.integers(2, 6))), replace=False)
            ref[fused_id[i]] = [same[p] for p in sorted(picks)]
    (directory / "reference.json").write_text(json.dumps(ref, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")

    users = [f"u{j:02d}" for j in range(6)]
    queries, opinions = [], []
    for i in range(0, n_movies, 3):
        shown_idx = [j for j in rng.choice(n_movies, size=6, replace=False) if j != i]
        queries.append((fused_id[i], [fused_id[j] for j in shown_idx]))
        for u in users:
            for j in shown_idx:
                p = 0.85 if labels[j] == labels[i] else 0.15
                opinions.append((u, fused_id[i], fused_id[j], bool(rng.random() < p)))
    ds = OpinionDataset(users, queries, opinions)
    (directory / "opinions.json").write_text(ds.to_json(), encoding="utf-8")

    config = {
        "workdir": "work",
        "sources": [{"name": s, "path": f"sources/{s}.json"} for s in source_names],
        "seed_graph": "seed_graph.ndjson",
        "reference": "reference.json",
        "opinions": "opinions.json",
        "fusion": {"title_distance_threshold": 0.2, "source_precedence": source_names},
        "detach": {"hops": 2},
        "transe": {"dim": 16, "margin": 1.0, "norm": "L1", "learning_rate": 0.01, "epochs": 60,
                   "batch_size": 64, "seed": 11},
        "tfidf": {"tf_mode": "max_freq"},
        "ga": {"population_size": 8, "crossover_rate": 0.5, "mutation_rate": 0.2, "generations": 20,
               "tournament_size": 2, "elitism_count": 1, "mutation_sigma": 0.1, "seed": 5, "parallelism": 8},
        "recommend": {"k": 10},
        "evaluate": {"opinion_threshold": 0.5},
    }
    path = directory / "config.json"
    path.write_text(json.dumps(config, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path

