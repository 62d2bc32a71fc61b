"""Coverage, precision@k, recall and F1, plus relevance labels from user opinions."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Collection, Iterable, Mapping, Sequence


def precision_at_k(recommended: Sequence, relevant: Collection, k: int) -> float:
    """Relevant share of the top-k list; the denominator is the list length if shorter than k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    top = list(recommended)[:k]
    if not top:
        return 0.0
    relevant = set(relevant)
    return sum(1 for m in top if m in relevant) / len(top)


def recall(recommended: Iterable, relevant: Collection) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("recall is undefined for an empty relevant set")
    return len(set(recommended) & relevant) / len(relevant)


def f1(p: float, r: float) -> float:
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def coverage(recommended_ever: Collection, catalog_size: int) -> float:
    """Percentage of the catalog that was recommended at least once."""
    if catalog_size < 1:
        raise ValueError("catalog_size must be >= 1")
    return 100 * len(set(recommended_ever)) / catalog_size


@dataclass
class OpinionDataset:
    users: list[str]
    queries: list[tuple[str, list[str]]]
    opinions: list[tuple[str, str, str, bool]]
    version: str = "v1.0"

    def __post_init__(self) -> None:
        users = set(self.users)
        shown = {(q, c) for q, cands in self.queries for c in cands}
        for i, (user, movie, cand, _) in enumerate(self.opinions):
            if user not in users:
                raise ValueError(f"opinion {i}: unknown user {user!r}")
            if (movie, cand) not in shown:
                raise ValueError(f"opinion {i}: candidate {cand!r} was not shown for {movie!r}")

    @classmethod
    def from_json(cls, text: str) -> "OpinionDataset":
        obj = json.loads(text)
        try:
            return cls(
                users=[str(u) for u in obj["users"]],
                queries=[(str(q["movie"]), [str(c) for c in q["shown"]]) for q in obj["queries"]],
                opinions=[
                    (str(o["user"]), str(o["movie"]), str(o["candidate"]), bool(o["similar"]))
                    for o in obj["opinions"]
                ],
                version=str(obj.get("version", "v1.0")),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed opinion dataset: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "users": self.users,
                "queries": [{"movie": q, "shown": c} for q, c in self.queries],
                "opinions": [
                    {"user": u, "movie": m, "candidate": c, "similar": s} for u, m, c, s in self.opinions
                ],
            },
            ensure_ascii=False,
            indent=2,
        ) + "\n"


def relevance_from_opinions(ds: OpinionDataset, threshold: float = 0.5) -> dict[str, list[str]]:
    """Candidate ``c`` is relevant to query ``q`` when its share of "similar" votes reaches ``threshold``.

    A user's last opinion on a pair counts. Queries with nothing relevant are dropped.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    votes: dict[tuple[str, str], dict[str, bool]] = {}
    for user, movie, cand, similar in ds.opinions:
        votes.setdefault((movie, cand), {})[user] = similar
    out: dict[str, list[str]] = {}
    for movie, shown in ds.queries:
        relevant = []
        for cand in dict.fromkeys(shown):
            ballot = votes.get((movie, cand))
            if ballot and sum(ballot.values()) / len(ballot) >= threshold and cand != movie:
                relevant.append(cand)
        if relevant:
            out[movie] = relevant
    return out


@dataclass
class MovieMetrics:
    precision: float
    recall: float
    f1: float
    k: int
    recommended: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    per_movie: dict[str, MovieMetrics]
    mean_precision: float
    mean_recall: float
    mean_f1: float
    coverage: float
    movies_evaluated: int
    recommended_distinct: int
    catalog_size: int

    def to_dict(self) -> dict:
        return {
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "coverage": self.coverage,
            "movies_evaluated": self.movies_evaluated,
            "recommended_distinct": self.recommended_distinct,
            "catalog_size": self.catalog_size,
            "per_movie": {
                m: {"precision": v.precision, "recall": v.recall, "f1": v.f1, "k": v.k, "recommended": v.recommended}
                for m, v in self.per_movie.items()
            },
        }


def evaluate_system(
    vectors,
    weights,
    ref: Mapping[str, Sequence[str]],
    catalog: int | Collection[str] | None = None,
) -> EvalReport:
    """Score the recommender against reference lists, one query per reference entry.

    ``catalog`` is the item universe for coverage: a size, a collection of
    ids (only recommendations inside it count), or ``None`` for every movie
    that has feature vectors.
    """
    from .recommender import SimilarityTable

    queries = list(ref)
    missing = [m for m in queries if m not in vectors]
    if missing:
        raise KeyError(f"reference movies without feature vectors: {missing}")
    table = vectors if isinstance(vectors, SimilarityTable) else SimilarityTable(vectors, queries)
    table.precompute(queries)

    per_movie: dict[str, MovieMetrics] = {}
    seen: set[str] = set()
    for m in queries:
        relevant = list(ref[m])
        k = len(relevant)
        recs = table.recommend(m, k, weights).movies
        p = precision_at_k(recs, relevant, k)
        r = recall(recs, relevant)
        per_movie[m] = MovieMetrics(p, r, f1(p, r), k, recs)
        seen.update(recs)

    if catalog is None:
        n_catalog = len(table)
    elif isinstance(catalog, int):
        n_catalog = catalog
    else:
        universe = set(catalog)
        seen &= universe
        n_catalog = len(universe)
    if len(seen) > n_catalog:
        raise ValueError(f"{len(seen)} distinct items recommended but catalog size is {n_catalog}")

    count = len(per_movie)
    mean = (lambda xs: sum(xs) / count) if count else (lambda xs: 0.0)
    return EvalReport(
        per_movie=per_movie,
        mean_precision=mean([v.precision for v in per_movie.values()]),
        mean_recall=mean([v.recall for v in per_movie.values()]),
        mean_f1=mean([v.f1 for v in per_movie.values()]),
        coverage=coverage(seen, n_catalog) if n_catalog else 0.0,
        movies_evaluated=count,
        recommended_distinct=len(seen),
        catalog_size=n_catalog,
    )
