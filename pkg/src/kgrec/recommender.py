"""Per-feature cosine similarity, weighted combination and top-k ranking."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._backend import kernels
from .corpus import MovieRecord
from .kg import KnowledgeGraph, Literal, movie_uri
from .tfidf import SparseVector, TfidfModel, tokenize
from .transe import TransEModel

FEATURES = ("text", "director", "producer", "actors", "genre")
FEATURE_RELATIONS = {
    "director": "mfb:director",
    "producer": "mfb:producer",
    "actors": "mfb:actor",
    "genre": "mfb:genre",
}


@dataclass(frozen=True)
class FeatureWeights:
    text: float = 1.0
    director: float = 1.0
    producer: float = 1.0
    actors: float = 1.0
    genre: float = 1.0

    def __post_init__(self) -> None:
        values = tuple(self)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"feature weights must lie in [0, 1], got {values}")
        if not any(v > 0 for v in values):
            raise ValueError("at least one feature weight must be positive")

    def __iter__(self):
        return iter((self.text, self.director, self.producer, self.actors, self.genre))

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "FeatureWeights":
        values = [float(v) for v in values]
        if len(values) != len(FEATURES):
            raise ValueError(f"expected {len(FEATURES)} weights, got {len(values)}")
        return cls(*values)

    def as_array(self) -> np.ndarray:
        return np.array(tuple(self), dtype=np.float64)

    def to_dict(self) -> dict[str, float]:
        return dict(zip(FEATURES, self))


def _weights_array(w) -> np.ndarray:
    arr = np.asarray(tuple(w), dtype=np.float64)
    if arr.shape != (len(FEATURES),):
        raise ValueError(f"expected {len(FEATURES)} weights, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("weights must be finite and non-negative")
    return arr


@dataclass(eq=False)
class MovieFeatureVectors:
    movie_id: str
    text_vec: SparseVector
    director_vec: np.ndarray | None = None
    producer_vec: np.ndarray | None = None
    actors_vec: np.ndarray | None = None
    genre_vec: np.ndarray | None = None

    def feature(self, name: str):
        return getattr(self, f"{name}_vec")


def _csr(vecs: Sequence[SparseVector]):
    indptr = np.zeros(len(vecs) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v) for v in vecs])
    indices = np.fromiter((i for v in vecs for i in v.indices), dtype=np.int64, count=int(indptr[-1]))
    data = np.fromiter((x for v in vecs for x in v.weights), dtype=np.float64, count=int(indptr[-1]))
    return indptr, indices, data


def _sparse_width(vecs: Sequence[SparseVector]) -> int:
    return max((v.indices[-1] + 1 for v in vecs if len(v)), default=0)


def cosine(a, b) -> float:
    """Cosine of the angle between two vectors (dense arrays or :class:`SparseVector`).

    Zero-norm inputs give 0.
    """
    if isinstance(a, SparseVector) or isinstance(b, SparseVector):
        if not (isinstance(a, SparseVector) and isinstance(b, SparseVector)):
            raise TypeError("cannot mix sparse and dense vectors")
        width = _sparse_width([a, b])
        return float(kernels.sparse_cosine_rows(*_csr([a]), *_csr([b]), width)[0, 0])
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(1, -1)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(1, -1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return float(kernels.dense_cosine_rows(a, b)[0, 0])


def weighted_similarity(a: MovieFeatureVectors, b: MovieFeatureVectors, w) -> float:
    """Weighted mean of per-feature cosines over features present in both movies.

    Returns 0 when no positively weighted feature is shared; use
    :func:`similarity_breakdown` to tell that case apart.
    """
    return similarity_breakdown(a, b, w).score


@dataclass(frozen=True)
class SimilarityBreakdown:
    score: float
    cosines: dict[str, float]
    # False when no positively weighted feature was present in both movies
    defined: bool


def similarity_breakdown(a: MovieFeatureVectors, b: MovieFeatureVectors, w) -> SimilarityBreakdown:
    weights = _weights_array(w)
    num = 0.0
    den = 0.0
    cosines = {}
    for name, wf in zip(FEATURES, weights):
        va, vb = a.feature(name), b.feature(name)
        if va is None or vb is None:
            continue
        c = cosine(va, vb)
        cosines[name] = c
        num += wf * c
        den += wf * 1.0
    if den > 0:
        return SimilarityBreakdown(num / den, cosines, True)
    return SimilarityBreakdown(0.0, cosines, False)


@dataclass
class RecommendationList:
    target: str
    entries: list[tuple[str, float]]

    @property
    def movies(self) -> list[str]:
        return [m for m, _ in self.entries]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "recommendations": [{"movie": m, "score": s} for m, s in self.entries],
        }


class SimilarityTable:
    """Precomputed per-feature cosine rows for a set of query movies.

    Scoring a query under new weights is then a handful of vector ops, which
    is what makes the genetic search affordable. Rows for queries not listed
    up front are computed on first use.
    """

    def __init__(self, vectors: Mapping[str, MovieFeatureVectors], queries: Iterable[str] | None = None):
        self.ids = list(vectors)
        if not self.ids:
            raise ValueError("no feature vectors")
        self.index = {m: i for i, m in enumerate(self.ids)}
        self.id_rank = np.empty(len(self.ids), dtype=np.int64)
        self.id_rank[np.argsort(np.array(self.ids, dtype=object), kind="stable")] = np.arange(len(self.ids))
        vecs = [vectors[m] for m in self.ids]
        self.masks = np.zeros((len(FEATURES), len(self.ids)), dtype=np.float64)
        self._text = [v.text_vec for v in vecs]
        self._text_csr = _csr(self._text)
        self._width = _sparse_width(self._text)
        self.masks[0] = 1.0
        self._dense: dict[str, np.ndarray] = {}
        for f, name in enumerate(FEATURES[1:], start=1):
            present = [v.feature(name) for v in vecs]
            dims = {len(p) for p in present if p is not None}
            if len(dims) > 1:
                raise ValueError(f"feature {name!r} has vectors of differing dimension {sorted(dims)}")
            dim = dims.pop() if dims else 1
            mat = np.zeros((len(vecs), dim), dtype=np.float64)
            for i, p in enumerate(present):
                if p is not None:
                    mat[i] = p
                    self.masks[f, i] = 1.0
            self._dense[name] = mat
        self._rows: dict[int, np.ndarray] = {}
        if queries is not None:
            self.precompute(queries)

    def __contains__(self, movie_id: str) -> bool:
        return movie_id in self.index

    def __len__(self) -> int:
        return len(self.ids)

    def precompute(self, queries: Iterable[str]) -> None:
        qidx = [self._lookup(q) for q in dict.fromkeys(queries)]
        qidx = [q for q in qidx if q not in self._rows]
        if not qidx:
            return
        rows = np.zeros((len(qidx), len(FEATURES), len(self.ids)))
        qtext = _csr([self._text[q] for q in qidx])
        rows[:, 0, :] = kernels.sparse_cosine_rows(*qtext, *self._text_csr, self._width)
        for f, name in enumerate(FEATURES[1:], start=1):
            mat = self._dense[name]
            rows[:, f, :] = kernels.dense_cosine_rows(np.ascontiguousarray(mat[qidx]), mat)
        for j, q in enumerate(qidx):
            self._rows[q] = rows[j]

    def _lookup(self, movie_id: str) -> int:
        try:
            return self.index[movie_id]
        except KeyError:
            raise KeyError(f"unknown movie {movie_id!r}") from None

    def cosine_rows(self, movie_id: str) -> np.ndarray:
        q = self._lookup(movie_id)
        if q not in self._rows:
            self.precompute([movie_id])
        return self._rows[q]

    def scores(self, movie_id: str, w) -> tuple[np.ndarray, np.ndarray]:
        """Weighted similarity of ``movie_id`` to every movie, and the defined-flags."""
        weights = _weights_array(w)
        q = self._lookup(movie_id)
        rows = self.cosine_rows(movie_id)
        num = np.zeros(len(self.ids))
        den = np.zeros(len(self.ids))
        for f in range(len(FEATURES)):
            shared = self.masks[f] * self.masks[f, q]
            # accumulate in feature order, matching similarity_breakdown
            num += np.where(shared > 0, weights[f] * rows[f], 0.0)
            den += np.where(shared > 0, weights[f] * 1.0, 0.0)
        out = np.zeros_like(num)
        np.divide(num, den, out=out, where=den > 0)
        return out, den > 0

    def recommend(self, movie_id: str, k: int, w) -> RecommendationList:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q = self._lookup(movie_id)
        scores, _ = self.scores(movie_id, w)
        cand = np.delete(np.arange(len(self.ids)), q)
        order = np.lexsort((self.id_rank[cand], -scores[cand]))[:k]
        picked = cand[order]
        return RecommendationList(movie_id, [(self.ids[i], float(scores[i])) for i in picked])


def recommend(target: str, k: int, w, vectors) -> RecommendationList:
    """Top-``k`` most similar movies to ``target``.

    Ties are broken by ascending movie id. ``vectors`` is either a mapping of
    movie id to :class:`MovieFeatureVectors` or a :class:`SimilarityTable`.
    """
    if isinstance(vectors, SimilarityTable):
        return vectors.recommend(target, k, w)
    if target not in vectors:
        raise KeyError(f"unknown movie {target!r}")
    return SimilarityTable(vectors, [target]).recommend(target, k, w)


def record_text(rec: MovieRecord) -> str:
    return f"{rec.title} {rec.storyline or ''}"


def build_feature_vectors(
    records: Iterable[MovieRecord],
    tfidf_model: TfidfModel,
    transe_model: TransEModel,
    kg: KnowledgeGraph,
) -> dict[str, MovieFeatureVectors]:
    """Text vector from title + storyline; entity features as mean TransE vectors."""
    by_uri = bool(transe_model.entity_uris)
    out: dict[str, MovieFeatureVectors] = {}
    for rec in records:
        uri = movie_uri(rec.id)
        if not kg.has_entity(uri):
            raise KeyError(f"movie {rec.id!r} is not in the knowledge graph")
        movie = kg.entity_id(uri)
        dense = {}
        for name, rel in FEATURE_RELATIONS.items():
            ents = [e for e in kg.objects(movie, rel) if not isinstance(e, Literal)]
            if not ents:
                dense[name] = None
                continue
            rows = [transe_model.entity_index(kg.entities[e]) if by_uri else e for e in ents]
            dense[name] = transe_model.entity_embeddings[rows].mean(axis=0)
        out[rec.id] = MovieFeatureVectors(
            movie_id=rec.id,
            text_vec=tfidf_model.vectorize(tokenize(record_text(rec))),
            director_vec=dense["director"],
            producer_vec=dense["producer"],
            actors_vec=dense["actors"],
            genre_vec=dense["genre"],
        )
    return out


def dump_recommendations(lists: Iterable[RecommendationList]) -> str:
    return json.dumps([r.to_dict() for r in lists], ensure_ascii=False, indent=2) + "\n"
