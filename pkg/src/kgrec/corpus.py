"""Per-source movie record ingestion and Levenshtein-based record fusion."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from typing import Any, Iterable, Sequence

from ._backend import kernels

SCALAR_FIELDS = (
    "english_title",
    "storyline",
    "poster_url",
    "release_year",
    "duration",
    "total_sale",
)
LIST_FIELDS = ("genres", "directors", "producers", "actors")


class RecordParseError(ValueError):
    """Raised for malformed source files. ``offset`` is a UTF-8 byte offset when known."""

    def __init__(self, message: str, offset: int | None = None, index: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.index = index


def _dedup(items: Iterable) -> list:
    seen = set()
    out = []
    for it in items:
        key = tuple(it) if isinstance(it, list) else it
        if key not in seen:
            seen.add(key)
            out.append(it)
    return out


@dataclass
class MovieRecord:
    id: str
    title: str
    sources: list[str]
    english_title: str | None = None
    storyline: str | None = None
    poster_url: str | None = None
    release_year: int | None = None
    rates: list[tuple[str, float]] = field(default_factory=list)
    genres: list[str] = field(default_factory=list)
    directors: list[str] = field(default_factory=list)
    producers: list[str] = field(default_factory=list)
    actors: list[str] = field(default_factory=list)
    duration: int | None = None
    total_sale: int | None = None

    def __post_init__(self) -> None:
        self.title = self.title.strip()
        if not self.title:
            raise ValueError("title is empty")
        if not self.sources:
            raise ValueError("sources is empty")
        self.sources = _dedup(self.sources)
        self.rates = _dedup((str(s), float(v)) for s, v in self.rates)
        for name in LIST_FIELDS:
            setattr(self, name, _dedup(getattr(self, name)))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "rates":
                value = [{"source": s, "score": v} for s, v in value]
            elif isinstance(value, list):
                value = list(value)
            out[f.name] = value
        return out


def _record_id(title: str, source: str) -> str:
    return hashlib.sha1(f"{source}\x00{title}".encode("utf-8")).hexdigest()[:12]


def _opt_int(obj: dict, key: str, index: int) -> int | None:
    value = obj.get(key)
    if value is None or value == "":
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        raise RecordParseError(f"record {index}: {key} is not an integer", index=index) from None


def _opt_str(obj: dict, key: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    value = str(value).strip()
    return value or None


def _str_list(obj: dict, key: str, index: int) -> list[str]:
    value = obj.get(key) or []
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list):
        raise RecordParseError(f"record {index}: {key} must be a list", index=index)
    return [s for s in (str(v).strip() for v in value) if s]


def _parse_rates(obj: dict, index: int) -> list[tuple[str, float]]:
    out = []
    for item in obj.get("rates") or []:
        if isinstance(item, dict):
            src, score = item.get("source"), item.get("score")
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            src, score = item
        else:
            raise RecordParseError(f"record {index}: malformed rate {item!r}", index=index)
        score = float(score)
        if not 0.0 <= score <= 10.0:
            raise RecordParseError(f"record {index}: rate {score} outside [0, 10]", index=index)
        out.append((str(src), score))
    return out


def record_from_dict(obj: dict, index: int = 0, source: str | None = None) -> MovieRecord:
    if not isinstance(obj, dict):
        raise RecordParseError(f"record {index}: not an object", index=index)
    title = obj.get("title")
    if not isinstance(title, str) or not title.strip():
        raise RecordParseError(f"record {index}: missing title", index=index)
    sources = _str_list(obj, "sources", index)
    if not sources:
        if source is None:
            raise RecordParseError(f"record {index}: missing sources", index=index)
        sources = [source]
    rid = obj.get("id")
    rid = str(rid) if rid not in (None, "") else _record_id(title.strip(), sources[0])
    total_sale = _opt_int(obj, "total_sale", index)
    if total_sale is not None and total_sale < 0:
        raise RecordParseError(f"record {index}: negative total_sale", index=index)
    return MovieRecord(
        id=rid,
        title=title,
        sources=sources,
        english_title=_opt_str(obj, "english_title"),
        storyline=_opt_str(obj, "storyline"),
        poster_url=_opt_str(obj, "poster_url"),
        release_year=_opt_int(obj, "release_year", index),
        rates=_parse_rates(obj, index),
        genres=_str_list(obj, "genres", index),
        directors=_str_list(obj, "directors", index),
        producers=_str_list(obj, "producers", index),
        actors=_str_list(obj, "actors", index),
        duration=_opt_int(obj, "duration", index),
        total_sale=total_sale,
    )


def parse_records(data: bytes | str, source: str | None = None) -> list[MovieRecord]:
    """Parse a JSON array of record objects.

    ``source`` fills in ``sources`` for records that do not list their own.
    Unknown keys are ignored.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise RecordParseError(f"malformed JSON at byte {offset}: {exc.msg}", offset=offset) from None
    if not isinstance(doc, list):
        raise RecordParseError("top-level JSON value must be an array", offset=0)
    return [record_from_dict(obj, i, source) for i, obj in enumerate(doc)]


def dump_records(records: Sequence[MovieRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], ensure_ascii=False, indent=2) + "\n"


def levenshtein(a: str, b: str) -> int:
    """Edit distance over Unicode code points."""
    return kernels.levenshtein(a, b)


def normalize_title(title: str) -> str:
    """Trim and lower-case ASCII letters only; Persian script is left as is."""
    return title.strip().translate(_ASCII_LOWER)


_ASCII_LOWER = str.maketrans("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz")


def title_distance(a: str, b: str) -> float:
    m = max(len(a), len(b))
    return levenshtein(a, b) / m if m else 0.0


@dataclass
class FusionConfig:
    title_distance_threshold: float = 0.2
    source_precedence: list[str] = field(default_factory=list)
    # off: compare raw titles exactly as stored
    normalize_titles: bool = True

    def validate(self) -> list[str]:
        errors = []
        t = self.title_distance_threshold
        if not isinstance(t, (int, float)) or not 0.0 <= t <= 1.0:
            errors.append(f"title_distance_threshold: must be in [0, 1], got {t!r}")
        if len(set(self.source_precedence)) != len(self.source_precedence):
            errors.append("source_precedence: duplicate source names")
        return errors


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller root wins so group identity is order-independent
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _merge(group: list[MovieRecord], rank: dict[str, int]) -> MovieRecord:
    ordered = sorted(group, key=lambda r: min(rank[s] for s in r.sources))
    head = ordered[0]
    kwargs: dict[str, Any] = {"id": head.id, "title": head.title}
    for name in SCALAR_FIELDS:
        kwargs[name] = next((getattr(r, name) for r in ordered if getattr(r, name) is not None), None)
    for name in LIST_FIELDS + ("rates",):
        kwargs[name] = [v for r in ordered for v in getattr(r, name)]
    kwargs["sources"] = sorted({s for r in ordered for s in r.sources}, key=rank.__getitem__)
    return MovieRecord(**kwargs)


def fuse(sources: Sequence[Sequence[MovieRecord]], cfg: FusionConfig | None = None) -> list[MovieRecord]:
    """Merge duplicate movies across (and within) source lists.

    Two records match when their normalized title distance is within the
    threshold; groups are the transitive closure of that relation. Scalars
    come from the highest-precedence record that has them, lists are unioned.
    """
    cfg = cfg or FusionConfig()
    errors = cfg.validate()
    if errors:
        raise ValueError("; ".join(errors))
    flat = [rec for src in sources for rec in src]
    if not flat:
        return []

    present = []
    for rec in flat:
        for s in rec.sources:
            if s not in present:
                present.append(s)
    if cfg.source_precedence:
        missing = [s for s in present if s not in cfg.source_precedence]
        if missing:
            raise ValueError(f"source_precedence does not cover: {', '.join(missing)}")
        rank = {s: i for i, s in enumerate(cfg.source_precedence)}
    else:
        rank = {s: i for i, s in enumerate(present)}

    keyed = [normalize_title(r.title) if cfg.normalize_titles else r.title for r in flat]
    uf = _UnionFind(len(flat))
    for i, j in kernels.title_match_pairs(keyed, float(cfg.title_distance_threshold)):
        uf.union(i, j)

    groups: dict[int, list[MovieRecord]] = {}
    for i, rec in enumerate(flat):
        groups.setdefault(uf.find(i), []).append(rec)
    return [_merge(g, rank) for _, g in sorted(groups.items())]
