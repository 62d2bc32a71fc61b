"""Real-coded genetic search over the five feature weights.

Fitness of a chromosome is the mean precision@k of its recommendations
against reference lists, with k set per movie to the reference length.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .evaluation import precision_at_k
from .recommender import FEATURES, FeatureWeights, SimilarityTable

ReferenceRecommendations = Mapping[str, Sequence[str]]


@dataclass
class GaConfig:
    population_size: int = 8
    crossover_rate: float = 0.5
    mutation_rate: float = 0.2
    generations: int = 50
    tournament_size: int = 2
    elitism_count: int = 1
    mutation_sigma: float = 0.1
    seed: int = 0
    parallelism: int = 8

    def validate(self) -> list[str]:
        errors = []
        for name in ("population_size", "generations", "tournament_size", "parallelism"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                errors.append(f"{name}: must be a positive integer, got {v!r}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                errors.append(f"{name}: must be in [0, 1], got {v!r}")
        if not isinstance(self.mutation_sigma, (int, float)) or not self.mutation_sigma > 0:
            errors.append(f"mutation_sigma: must be > 0, got {self.mutation_sigma!r}")
        if not isinstance(self.elitism_count, int) or self.elitism_count < 0:
            errors.append(f"elitism_count: must be a non-negative integer, got {self.elitism_count!r}")
        elif isinstance(self.population_size, int) and self.elitism_count > self.population_size:
            errors.append("elitism_count: must not exceed population_size")
        if not isinstance(self.seed, int):
            errors.append(f"seed: must be an integer, got {self.seed!r}")
        return errors


def validate_reference(ref: ReferenceRecommendations) -> None:
    for movie, items in ref.items():
        if not items:
            raise ValueError(f"reference list for {movie!r} is empty")
        if movie in items:
            raise ValueError(f"reference list for {movie!r} contains the movie itself")


def _as_table(vectors, queries) -> SimilarityTable:
    if isinstance(vectors, SimilarityTable):
        vectors.precompute(queries)
        return vectors
    return SimilarityTable(vectors, queries)


def fitness(w, training: Iterable[str], ref: ReferenceRecommendations, vectors) -> float:
    training = list(training)
    missing = [m for m in training if m not in ref]
    if missing:
        raise KeyError(f"training movies without reference lists: {missing}")
    if not training:
        raise ValueError("empty training set")
    table = _as_table(vectors, training)
    weights = np.asarray(tuple(w), dtype=np.float64)
    total = 0.0
    for m in training:
        relevant = ref[m]
        k = len(relevant)
        recs = table.recommend(m, k, weights)
        total += precision_at_k(recs.movies, set(relevant), k)
    return total / len(training)


def _tournament(fitnesses: np.ndarray, size: int, rng: np.random.Generator) -> int:
    picks = rng.integers(0, len(fitnesses), size=size)
    best = int(picks[0])
    for p in picks[1:]:
        if fitnesses[p] > fitnesses[best]:
            best = int(p)
    return best


def ga_step(population: np.ndarray, fitnesses: Sequence[float], cfg: GaConfig, rng: np.random.Generator) -> np.ndarray:
    """Next generation: elites, then tournament parents, arithmetic crossover, clamped Gaussian mutation."""
    population = np.asarray(population, dtype=np.float64)
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    size, genes = population.shape
    if size != cfg.population_size:
        raise ValueError(f"population has {size} chromosomes, config says {cfg.population_size}")
    ranked = np.argsort(-fitnesses, kind="stable")
    nxt = [population[i].copy() for i in ranked[: cfg.elitism_count]]
    while len(nxt) < size:
        p1 = population[_tournament(fitnesses, cfg.tournament_size, rng)]
        p2 = population[_tournament(fitnesses, cfg.tournament_size, rng)]
        if rng.random() < cfg.crossover_rate:
            beta = rng.random()
            child = beta * p1 + (1.0 - beta) * p2
        else:
            child = p1.copy()
        mutate = rng.random(genes) < cfg.mutation_rate
        noise = rng.normal(0.0, cfg.mutation_sigma, size=genes)
        child = np.clip(np.where(mutate, child + noise, child), 0.0, 1.0)
        nxt.append(child)
    return np.stack(nxt)


@dataclass
class GaResult:
    best_weights: FeatureWeights
    best_fitness: float
    trace: list[tuple[int, float]]
    # every generation's population, for invariant checks and plots
    history: list[np.ndarray]

    def to_dict(self, cfg: GaConfig | None = None) -> dict:
        out = {
            "best_weights": self.best_weights.to_dict(),
            "best_fitness": self.best_fitness,
            "trace": [{"generation": g, "best_fitness": f} for g, f in self.trace],
        }
        if cfg is not None:
            out["config"] = asdict(cfg)
        return out


def _safe_weights(chrom: np.ndarray) -> FeatureWeights:
    # an all-zero chromosome scores every pair 0; keep it representable
    if not np.any(chrom > 0):
        chrom = np.full_like(chrom, 1.0)
    return FeatureWeights.from_sequence(chrom)


def optimize(
    training: Iterable[str],
    ref: ReferenceRecommendations,
    vectors,
    cfg: GaConfig | None = None,
    on_generation: Callable[[int, float], None] | None = None,
) -> GaResult:
    cfg = cfg or GaConfig()
    errors = cfg.validate()
    if errors:
        raise ValueError("; ".join(errors))
    training = list(training)
    missing = [m for m in training if m not in ref]
    if missing:
        raise KeyError(f"training movies without reference lists: {missing}")
    table = _as_table(vectors, training)
    rng = np.random.default_rng(cfg.seed)
    population = rng.random((cfg.population_size, len(FEATURES)))

    def evaluate(chrom: np.ndarray) -> float:
        return fitness(chrom, training, ref, table)

    pool = ThreadPoolExecutor(max_workers=cfg.parallelism) if cfg.parallelism > 1 else None
    best_chrom, best_fit = population[0].copy(), -1.0
    trace: list[tuple[int, float]] = []
    history: list[np.ndarray] = []
    try:
        for gen in range(cfg.generations):
            history.append(population.copy())
            if pool is not None:
                fits = np.array(list(pool.map(evaluate, population)))
            else:
                fits = np.array([evaluate(c) for c in population])
            top = int(np.argmax(fits))
            if fits[top] > best_fit:
                best_fit, best_chrom = float(fits[top]), population[top].copy()
            trace.append((gen, float(fits[top])))
            if on_generation is not None:
                on_generation(gen, float(fits[top]))
            if gen + 1 < cfg.generations:
                population = ga_step(population, fits, cfg, rng)
    finally:
        if pool is not None:
            pool.shutdown()
    return GaResult(_safe_weights(best_chrom), best_fit, trace, history)


def load_reference(text: str) -> dict[str, list[str]]:
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("reference file must be a JSON object of movie id -> list of ids")
    ref = {str(k): [str(x) for x in v] for k, v in obj.items()}
    validate_reference(ref)
    return ref
