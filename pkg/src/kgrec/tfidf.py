"""TF-IDF vectors over a shared vocabulary.

Inverse document frequency is ``ln(D / (D_t + 1))`` verbatim, so a term that
occurs in every document gets a *negative* weight. This is deliberate; do
not clamp it.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

TF_MODES = ("max_freq", "by_length")

_WORD = re.compile(r"\w+")
_ASCII_LOWER = str.maketrans("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz")


def tokenize(text: str) -> list[str]:
    """Unicode word segmentation, ASCII lower-casing, tokens shorter than 2 dropped."""
    return [tok for tok in _WORD.findall(text.translate(_ASCII_LOWER)) if len(tok) >= 2]


@dataclass(frozen=True)
class SparseVector:
    indices: tuple[int, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(w == 0.0 for w in self.weights):
            raise ValueError("zero weights must not be stored")

    @classmethod
    def from_dict(cls, items: dict[int, float]) -> "SparseVector":
        pairs = sorted((i, w) for i, w in items.items() if w != 0.0)
        return cls(tuple(i for i, _ in pairs), tuple(w for _, w in pairs))

    def __len__(self) -> int:
        return len(self.indices)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices, self.weights))


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    doc_freq: list[int]
    num_docs: int
    tf_mode: str = "max_freq"
    idf: list[float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.tf_mode not in TF_MODES:
            raise ValueError(f"tf_mode must be one of {TF_MODES}, got {self.tf_mode!r}")
        if len(self.doc_freq) != len(self.vocabulary):
            raise ValueError("doc_freq length does not match the vocabulary")
        self.idf = [math.log(self.num_docs / (df + 1)) for df in self.doc_freq]

    @property
    def num_terms(self) -> int:
        return len(self.vocabulary)

    def term_frequencies(self, doc: Sequence[str]) -> dict[str, float]:
        counts: dict[str, int] = {}
        for term in doc:
            counts[term] = counts.get(term, 0) + 1
        if not counts:
            return {}
        denom = max(counts.values()) if self.tf_mode == "max_freq" else len(counts)
        return {term: c / denom for term, c in counts.items()}

    def vectorize(self, doc: Sequence[str]) -> SparseVector:
        weights = {}
        for term, tf in self.term_frequencies(doc).items():
            idx = self.vocabulary.get(term)
            if idx is not None:
                weights[idx] = tf * self.idf[idx]
        return SparseVector.from_dict(weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "vocabulary": self.vocabulary,
                "doc_freq": self.doc_freq,
                "num_docs": self.num_docs,
                "tf_mode": self.tf_mode,
            },
            ensure_ascii=False,
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TfidfModel":
        obj = json.loads(text)
        return cls(dict(obj["vocabulary"]), list(obj["doc_freq"]), int(obj["num_docs"]), obj["tf_mode"])


def fit(docs: Iterable[Sequence[str]], tf_mode: str = "max_freq") -> TfidfModel:
    vocabulary: dict[str, int] = {}
    doc_freq: list[int] = []
    num_docs = 0
    for doc in docs:
        num_docs += 1
        for term in dict.fromkeys(doc):
            idx = vocabulary.get(term)
            if idx is None:
                vocabulary[term] = len(doc_freq)
                doc_freq.append(1)
            else:
                doc_freq[idx] += 1
    if num_docs == 0:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    return TfidfModel(vocabulary, doc_freq, num_docs, tf_mode)


def vectorize(m: TfidfModel, doc: Sequence[str]) -> SparseVector:
    return m.vectorize(doc)
