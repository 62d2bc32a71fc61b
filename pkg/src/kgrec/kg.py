"""In-memory triple store with entity matching, record insertion and k-hop detachment.

Triples are ``(head, relation, tail)`` where ``head`` is an entity id,
``relation`` a relation id and ``tail`` either an entity id or a
:class:`Literal`. Ids are dense indexes into the URI catalogs.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .corpus import MovieRecord

PREFIX = "mfb:"
ENTITY_RELATIONS = {
    "directors": "mfb:director",
    "producers": "mfb:producer",
    "actors": "mfb:actor",
    "genres": "mfb:genre",
}
LITERAL_RELATIONS = {
    "title": "mfb:title",
    "english_title": "mfb:english_title",
    "storyline": "mfb:storyline",
    "release_year": "mfb:release_year",
    "duration": "mfb:duration",
}
# literal relations whose value names the head entity
LABEL_RELATIONS = ("rdfs:label", "mfb:title", "mfb:label")

_ENTITY_KIND = {"directors": "person", "producers": "person", "actors": "person", "genres": "genre"}


@dataclass(frozen=True, order=True)
class Literal:
    value: str


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int | Literal

    @property
    def is_literal(self) -> bool:
        return isinstance(self.tail, Literal)


def canonical_label(label: str) -> str:
    return label.strip().casefold()


def _slug(label: str) -> str:
    return (
        canonical_label(label)
        .replace("%", "%25")
        .replace("/", "%2F")
        .replace("_", "%5F")
        .replace(" ", "_")
    )


def _unslug(slug: str) -> str:
    return slug.replace("_", " ").replace("%5F", "_").replace("%2F", "/").replace("%25", "%")


def movie_uri(record_id: str) -> str:
    return f"{PREFIX}movie/{record_id}"


def entity_uri(kind: str, label: str) -> str:
    return f"{PREFIX}{kind}/{_slug(label)}"


def _kind_of(uri: str) -> str | None:
    if uri.startswith(PREFIX) and "/" in uri:
        return uri[len(PREFIX):].split("/", 1)[0]
    return None


class KnowledgeGraph:
    def __init__(self) -> None:
        self.entities: list[str] = []
        self.relations: list[str] = []
        self.triples: list[Triple] = []
        self._entity_ids: dict[str, int] = {}
        self._relation_ids: dict[str, int] = {}
        self._triple_set: set[Triple] = set()
        self._adjacency: list[set[int]] = []
        self._outgoing: list[list[Triple]] = []
        self._labels: dict[str, list[int]] = {}

    # catalogs

    def entity_id(self, uri: str) -> int:
        return self._entity_ids[uri]

    def relation_id(self, uri: str) -> int:
        return self._relation_ids[uri]

    def has_entity(self, uri: str) -> bool:
        return uri in self._entity_ids

    def add_entity(self, uri: str, label: str | None = None) -> int:
        eid = self._entity_ids.get(uri)
        if eid is None:
            eid = len(self.entities)
            self.entities.append(uri)
            self._entity_ids[uri] = eid
            self._adjacency.append(set())
            self._outgoing.append([])
            kind = _kind_of(uri)
            if kind in ("person", "genre"):
                self._register_label(_unslug(uri.split("/", 1)[1]), eid)
        if label is not None:
            self._register_label(label, eid)
        return eid

    def add_relation(self, uri: str) -> int:
        rid = self._relation_ids.get(uri)
        if rid is None:
            rid = len(self.relations)
            self.relations.append(uri)
            self._relation_ids[uri] = rid
        return rid

    def _register_label(self, label: str, eid: int) -> None:
        ids = self._labels.setdefault(canonical_label(label), [])
        if eid not in ids:
            ids.append(eid)

    def add_triple(self, head: int, relation: int, tail: int | Literal) -> Triple | None:
        """Add a triple by ids; returns it, or ``None`` if it was already present."""
        t = Triple(head, relation, tail)
        if t in self._triple_set:
            return None
        self._triple_set.add(t)
        self.triples.append(t)
        self._outgoing[head].append(t)
        if isinstance(tail, Literal):
            if self.relations[relation] in LABEL_RELATIONS:
                self._register_label(tail.value, head)
        else:
            self._adjacency[head].add(tail)
            self._adjacency[tail].add(head)
        return t

    def add_uri_triple(self, h: str, r: str, t: str | Literal) -> Triple | None:
        hid = self.add_entity(h)
        rid = self.add_relation(r)
        tail = t if isinstance(t, Literal) else self.add_entity(t)
        return self.add_triple(hid, rid, tail)

    # queries

    def neighbors(self, eid: int) -> set[int]:
        return self._adjacency[eid]

    def match_entity(self, label: str, kind: str | None = None) -> int | None:
        """Id of the entity whose label equals ``label`` (trimmed, case-folded).

        ``kind`` restricts matches to URIs minted for that kind; entities of
        unknown kind (e.g. from a seed graph) match any kind.
        """
        for eid in self._labels.get(canonical_label(label), ()):
            ekind = _kind_of(self.entities[eid])
            if kind is None or ekind is None or ekind == kind:
                return eid
        return None

    def objects(self, head: int, relation: str) -> list[int | Literal]:
        rid = self._relation_ids.get(relation)
        if rid is None:
            return []
        return [t.tail for t in self._outgoing[head] if t.relation == rid]

    def uri_triples(self) -> set[tuple[str, str, str | Literal]]:
        return {self.to_uris(t) for t in self.triples}

    def to_uris(self, t: Triple) -> tuple[str, str, str | Literal]:
        tail = t.tail if isinstance(t.tail, Literal) else self.entities[t.tail]
        return (self.entities[t.head], self.relations[t.relation], tail)

    def stats(self) -> tuple[int, int, int]:
        return graph_stats(self)

    # serialization

    def to_ndjson(self) -> str:
        lines = []
        for t in self.triples:
            h, r, tail = self.to_uris(t)
            obj = {"h": h, "r": r}
            if isinstance(tail, Literal):
                obj["lit"] = tail.value
            else:
                obj["t"] = tail
            lines.append(json.dumps(obj, ensure_ascii=False))
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_ndjson(cls, text: str) -> "KnowledgeGraph":
        g = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                h, r = obj["h"], obj["r"]
                tail = Literal(str(obj["lit"])) if "lit" in obj else obj["t"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: malformed triple ({exc})") from None
            g.add_uri_triple(h, r, tail)
        return g


def match_entity(g: KnowledgeGraph, label: str, kind: str | None = None) -> int | None:
    return g.match_entity(label, kind)


def _literal(value) -> Literal:
    return Literal(str(value))


def insert_record(g: KnowledgeGraph, m: MovieRecord) -> set[Triple]:
    """Add the triples describing ``m``; returns only those that were new."""
    added: set[Triple] = set()
    movie = g.add_entity(movie_uri(m.id))

    def add(rel: str, tail: int | Literal) -> None:
        t = g.add_triple(movie, g.add_relation(rel), tail)
        if t is not None:
            added.add(t)

    for attr, rel in ENTITY_RELATIONS.items():
        kind = _ENTITY_KIND[attr]
        for label in getattr(m, attr):
            eid = g.match_entity(label, kind)
            if eid is None:
                eid = g.add_entity(entity_uri(kind, label), label)
            add(rel, eid)
    for attr, rel in LITERAL_RELATIONS.items():
        value = getattr(m, attr)
        if value is not None:
            add(rel, _literal(value))
    return added


def build_graph(records: Iterable[MovieRecord], seed: KnowledgeGraph | None = None) -> KnowledgeGraph:
    g = seed if seed is not None else KnowledgeGraph()
    for rec in records:
        insert_record(g, rec)
    return g


def reachable(g: KnowledgeGraph, seeds: Iterable[int], hops: int) -> dict[int, int]:
    """Entity id -> undirected hop distance, for every entity within ``hops``."""
    dist: dict[int, int] = {}
    queue: deque[int] = deque()
    for s in seeds:
        if s not in dist:
            dist[s] = 0
            queue.append(s)
    while queue:
        e = queue.popleft()
        if dist[e] == hops:
            continue
        for n in g.neighbors(e):
            if n not in dist:
                dist[n] = dist[e] + 1
                queue.append(n)
    return dist


def extract_subgraph(g: KnowledgeGraph, seeds: Iterable[int], hops: int = 2) -> KnowledgeGraph:
    """Induced subgraph on all entities within ``hops`` undirected hops of a seed."""
    seeds = list(seeds)
    if hops < 0:
        raise ValueError(f"hops must be non-negative, got {hops}")
    for s in seeds:
        if not (isinstance(s, int) and 0 <= s < len(g.entities)):
            raise KeyError(f"unknown seed entity id {s!r}")
    keep = reachable(g, seeds, hops)
    sub = KnowledgeGraph()
    for eid in sorted(keep):
        sub.add_entity(g.entities[eid])
    for t in g.triples:
        if t.head not in keep:
            continue
        if not isinstance(t.tail, Literal) and t.tail not in keep:
            continue
        sub.add_uri_triple(*g.to_uris(t))
    # carry over labels that were not derivable from the triples
    for label, ids in g._labels.items():
        for eid in ids:
            if eid in keep:
                sub._register_label(label, sub.entity_id(g.entities[eid]))
    return sub


def movie_entities(g: KnowledgeGraph) -> list[int]:
    return [i for i, uri in enumerate(g.entities) if uri.startswith(f"{PREFIX}movie/")]


def graph_stats(g: KnowledgeGraph) -> tuple[int, int, int]:
    return len(g.triples), len(g.entities), len(g.relations)
