"""TransE embeddings trained with a margin ranking loss and filtered negative sampling.

A triple ``(h, r, t)`` is scored by the distance ``||h + r - t||`` under L1
or L2; training pushes every true triple at least ``margin`` closer than a
corrupted copy of it. Entity rows are kept at unit L2 norm.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._backend import kernels
from .kg import KnowledgeGraph, Literal

NORMS = ("L1", "L2")


@dataclass
class TransEConfig:
    dim: int = 50
    margin: float = 1.0
    norm: str = "L1"
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 128
    seed: int = 0

    def validate(self) -> list[str]:
        errors = []
        if not isinstance(self.dim, int) or self.dim < 1:
            errors.append(f"dim: must be a positive integer, got {self.dim!r}")
        if not self.margin > 0:
            errors.append(f"margin: must be > 0, got {self.margin!r}")
        if self.norm not in NORMS:
            errors.append(f"norm: must be one of {NORMS}, got {self.norm!r}")
        if not self.learning_rate > 0:
            errors.append(f"learning_rate: must be > 0, got {self.learning_rate!r}")
        if not isinstance(self.epochs, int) or self.epochs < 0:
            errors.append(f"epochs: must be a non-negative integer, got {self.epochs!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            errors.append(f"batch_size: must be a positive integer, got {self.batch_size!r}")
        if not isinstance(self.seed, int):
            errors.append(f"seed: must be an integer, got {self.seed!r}")
        return errors


@dataclass(eq=False)
class TransEModel:
    entity_embeddings: np.ndarray
    relation_embeddings: np.ndarray
    config: TransEConfig
    entity_uris: list[str] = field(default_factory=list)
    relation_uris: list[str] = field(default_factory=list)

    @property
    def num_entities(self) -> int:
        return self.entity_embeddings.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation_embeddings.shape[0]

    def _check(self, kind: str, idx: int, bound: int) -> None:
        if not 0 <= idx < bound:
            raise IndexError(f"{kind} id {idx} out of range [0, {bound})")

    def score(self, h: int, r: int, t: int) -> float:
        self._check("entity", h, self.num_entities)
        self._check("relation", r, self.num_relations)
        self._check("entity", t, self.num_entities)
        diff = self.entity_embeddings[h] + self.relation_embeddings[r] - self.entity_embeddings[t]
        return distance(diff, self.config.norm)

    def entity_vector(self, e: int) -> np.ndarray:
        self._check("entity", e, self.num_entities)
        return self.entity_embeddings[e].copy()

    def entity_index(self, uri: str) -> int:
        if not hasattr(self, "_uri_index"):
            self._uri_index = {u: i for i, u in enumerate(self.entity_uris)}
        return self._uri_index[uri]

    # persistence: JSON manifest + little-endian float32 payload

    def save(self, manifest_path: str | Path) -> Path:
        manifest_path = Path(manifest_path)
        payload_path = manifest_path.with_suffix(".bin")
        manifest = {
            "dim": self.config.dim,
            "norm": self.config.norm,
            "margin": self.config.margin,
            "num_entities": self.num_entities,
            "num_relations": self.num_relations,
            "seed": self.config.seed,
            "config": asdict(self.config),
            "payload": payload_path.name,
            "entities": self.entity_uris,
            "relations": self.relation_uris,
        }
        manifest_path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        payload = np.concatenate([self.entity_embeddings, self.relation_embeddings]).astype("<f4")
        payload_path.write_bytes(payload.tobytes(order="C"))
        return payload_path

    @classmethod
    def load(cls, manifest_path: str | Path) -> "TransEModel":
        manifest_path = Path(manifest_path)
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        cfg = TransEConfig(**manifest["config"])
        ne, nr, dim = manifest["num_entities"], manifest["num_relations"], manifest["dim"]
        raw = np.frombuffer((manifest_path.parent / manifest["payload"]).read_bytes(), dtype="<f4")
        if raw.size != (ne + nr) * dim:
            raise ValueError(f"payload holds {raw.size} floats, expected {(ne + nr) * dim}")
        mat = raw.reshape(ne + nr, dim).astype(np.float64)
        return cls(mat[:ne].copy(), mat[ne:].copy(), cfg, list(manifest["entities"]), list(manifest["relations"]))


def distance(diff: np.ndarray, norm: str) -> float:
    if norm == "L1":
        return float(np.abs(diff).sum())
    return float(math.sqrt(float(np.dot(diff, diff))))


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.sqrt((m * m).sum(axis=1, keepdims=True))
    norms[norms == 0] = 1.0
    return m / norms


def init_model(num_entities: int, num_relations: int, cfg: TransEConfig) -> TransEModel:
    if num_entities < 1 or num_relations < 1:
        raise ValueError("need at least one entity and one relation")
    rng = np.random.default_rng(cfg.seed)
    bound = 6.0 / math.sqrt(cfg.dim)
    ent = rng.uniform(-bound, bound, size=(num_entities, cfg.dim))
    rel = rng.uniform(-bound, bound, size=(num_relations, cfg.dim))
    return TransEModel(_normalize_rows(ent), _normalize_rows(rel), cfg)


def score(m: TransEModel, h: int, r: int, t: int) -> float:
    return m.score(h, r, t)


def entity_vector(m: TransEModel, e: int) -> np.ndarray:
    return m.entity_vector(e)


def margin_loss(d_pos: float, d_neg: float, margin: float) -> float:
    return max(0.0, d_pos - d_neg + margin)


def loss_and_grads(h, r, t, h_neg, t_neg, margin: float, norm: str):
    """Hinge loss for one positive/negative pair and its subgradients.

    Returns ``(loss, grads)`` with ``grads`` keyed by ``h, r, t, h_neg, t_neg``.
    The L1 subgradient at a zero coordinate is taken as 0.
    """
    dpos = h + r - t
    dneg = h_neg + r - t_neg
    loss = margin_loss(distance(dpos, norm), distance(dneg, norm), margin)
    zero = np.zeros_like(dpos)
    if loss <= 0.0:
        return loss, {k: zero.copy() for k in ("h", "r", "t", "h_neg", "t_neg")}
    if norm == "L1":
        gp, gn = np.sign(dpos), np.sign(dneg)
    else:
        npos, nneg = np.linalg.norm(dpos), np.linalg.norm(dneg)
        gp = dpos / npos if npos > 0 else zero
        gn = dneg / nneg if nneg > 0 else zero
    return loss, {"h": gp, "r": gp - gn, "t": -gp, "h_neg": -gn, "t_neg": gn}


def entity_triples(g: KnowledgeGraph) -> np.ndarray:
    """``(n, 3)`` int64 array of the entity-entity triples; literals are skipped."""
    rows = [(t.head, t.relation, t.tail) for t in g.triples if not isinstance(t.tail, Literal)]
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def corrupt_batch(
    triples: np.ndarray,
    num_entities: int,
    rng: np.random.Generator,
    known: set[tuple[int, int, int]] | None = None,
) -> np.ndarray:
    """Replace head or tail (probability 1/2 each) by a uniform random entity.

    Re-draws until the corrupted triple differs from its source and is not in
    ``known``. If every replacement on the chosen side is excluded the other
    side is used; if both are exhausted a ``ValueError`` is raised.
    """
    if num_entities < 2:
        raise ValueError("corruption needs at least two entities")
    known = known or set()
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    n = len(triples)
    out = triples.copy()
    replace_head = rng.random(n) < 0.5
    draws = rng.integers(0, num_entities, size=n)
    for i in range(n):
        h, r, t = (int(x) for x in triples[i])
        head_side = bool(replace_head[i])
        e = int(draws[i])
        cand = (e, r, t) if head_side else (h, r, e)
        attempts = 0
        while cand == (h, r, t) or cand in known:
            attempts += 1
            if attempts > 64:
                cand = _exhaustive_corruption(h, r, t, num_entities, known, head_side, rng)
                break
            e = int(rng.integers(0, num_entities))
            cand = (e, r, t) if head_side else (h, r, e)
        out[i] = cand
    return out


def _exhaustive_corruption(h, r, t, num_entities, known, head_side, rng):
    for side in (head_side, not head_side):
        options = [
            c
            for e in range(num_entities)
            for c in [((e, r, t) if side else (h, r, e))]
            if c != (h, r, t) and c not in known
        ]
        if options:
            return options[int(rng.integers(0, len(options)))]
    raise ValueError(f"no valid corruption exists for triple {(h, r, t)}")


def corrupt(triple, num_entities: int, rng: np.random.Generator, known=None) -> tuple[int, int, int]:
    return tuple(int(x) for x in corrupt_batch(np.asarray([triple]), num_entities, rng, known)[0])


def train(g: KnowledgeGraph, cfg: TransEConfig, on_epoch=None) -> tuple[TransEModel, list[float]]:
    """Mini-batch SGD over the entity-entity triples of ``g``.

    Batches are visited sequentially in a seeded shuffled order, so the same
    config always yields the same model on a given backend.
    """
    errors = cfg.validate()
    if errors:
        raise ValueError("; ".join(errors))
    pos = entity_triples(g)
    if len(pos) == 0:
        raise ValueError("nothing to train: graph has no entity-entity triples")
    model = init_model(len(g.entities), len(g.relations), cfg)
    model.entity_uris = list(g.entities)
    model.relation_uris = list(g.relations)
    known = {tuple(int(x) for x in row) for row in pos}
    rng = np.random.default_rng([cfg.seed, 1])
    E, R = model.entity_embeddings, model.relation_embeddings
    l1 = cfg.norm == "L1"
    history: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pos))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = pos[order[start:start + cfg.batch_size]]
            neg = corrupt_batch(batch, len(g.entities), rng, known)
            total += kernels.transe_sgd_step(
                E, R,
                np.ascontiguousarray(batch[:, 0]), np.ascontiguousarray(batch[:, 1]),
                np.ascontiguousarray(batch[:, 2]), np.ascontiguousarray(neg[:, 0]),
                np.ascontiguousarray(neg[:, 2]),
                float(cfg.learning_rate), float(cfg.margin), l1,
            )
        history.append(total / len(pos))
        if on_epoch is not None:
            on_epoch(epoch, history[-1])
    return model, history


def mean_loss(model: TransEModel, pos: np.ndarray, neg: np.ndarray) -> float:
    """Mean hinge loss of fixed positive/negative pairs under ``model``."""
    E, R, norm = model.entity_embeddings, model.relation_embeddings, model.config.norm
    total = 0.0
    for (h, r, t), (hn, _, tn) in zip(pos, neg):
        total += margin_loss(distance(E[h] + R[r] - E[t], norm), distance(E[hn] + R[r] - E[tn], norm), model.config.margin)
    return total / len(pos)


def tail_ranks(model: TransEModel, triples: np.ndarray) -> np.ndarray:
    """Raw rank (1 = best) of the true tail among all entities, per triple."""
    E, R = model.entity_embeddings, model.relation_embeddings
    ranks = []
    for h, r, t in np.asarray(triples).reshape(-1, 3):
        diff = (E[h] + R[r])[None, :] - E
        if model.config.norm == "L1":
            d = np.abs(diff).sum(axis=1)
        else:
            d = np.sqrt((diff * diff).sum(axis=1))
        ranks.append(1 + int((d < d[t]).sum()))
    return np.asarray(ranks)
