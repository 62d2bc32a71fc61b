import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import recursive_levenshtein
from kgrec.corpus import (
    FusionConfig,
    MovieRecord,
    RecordParseError,
    dump_records,
    fuse,
    levenshtein,
    normalize_title,
    parse_records,
    title_distance,
)


def rec(title, source, rid=None, **kw):
    return MovieRecord(id=rid or f"{source}:{title}", title=title, sources=[source], **kw)


# parse_records

def test_parse_empty_array():
    assert parse_records(b"[]") == []


def test_parse_one_record_round_trips():
    data = '[{"title":"A","genres":["درام"],"sources":["filimo"]}]'.encode("utf-8")
    records = parse_records(data)
    assert len(records) == 1
    r = records[0]
    assert r.title == "A" and r.genres == ["درام"] and r.sources == ["filimo"]
    assert parse_records(dump_records(records).encode("utf-8")) == records


def test_parse_missing_title_names_index():
    with pytest.raises(RecordParseError, match="record 0: missing title"):
        parse_records(b'[{"genres":["x"]}]')


def test_parse_malformed_json_reports_byte_offset():
    data = '[{"title":"فیلم",}]'.encode("utf-8")
    with pytest.raises(RecordParseError) as info:
        parse_records(data)
    # the offending "}" sits after 4 two-byte Persian letters
    assert info.value.offset == data.index(b",}") + 1
    assert f"byte {info.value.offset}" in str(info.value)


def test_parse_optional_fields_absent_not_empty():
    (r,) = parse_records(b'[{"title":"A","storyline":"","sources":["s"]}]')
    assert r.storyline is None and r.release_year is None
    assert "storyline" not in r.to_dict()


def test_parse_ignores_unknown_keys_and_dedups_lists():
    (r,) = parse_records(
        b'[{"title":" A ","actors":["x","x","y"],"rating_count":5,"rates":[["s",7.5]]}]', source="s"
    )
    assert r.title == "A"
    assert r.actors == ["x", "y"]
    assert r.sources == ["s"]
    assert r.rates == [("s", 7.5)]


def test_parse_rejects_out_of_range_rate():
    with pytest.raises(RecordParseError, match="record 0"):
        parse_records(b'[{"title":"A","sources":["s"],"rates":[{"source":"s","score":11}]}]')


# levenshtein

@pytest.mark.parametrize(
    "a,b,d",
    [("", "abc", 3), ("kitten", "sitting", 3), ("سلام", "سلام", 0), ("abc", "", 3)],
)
def test_levenshtein_examples(a, b, d):
    assert levenshtein(a, b) == d


text = st.text(max_size=12)


@given(text, text, text)
@settings(max_examples=300, deadline=None)
def test_levenshtein_metric_properties(a, b, c):
    ab = levenshtein(a, b)
    assert ab == levenshtein(b, a)
    assert levenshtein(a, a) == 0
    assert ab <= max(len(a), len(b))
    assert levenshtein(a, c) <= ab + levenshtein(b, c)


def test_levenshtein_exhaustive_small_alphabet():
    import itertools

    words = ["".join(p) for n in range(5) for p in itertools.product("abc", repeat=n)]
    for a in words:
        for b in words[::7]:
            assert levenshtein(a, b) == recursive_levenshtein(a, b)


# fuse

def test_fuse_exact_duplicate():
    out = fuse([[rec("قهرمان", "filimo")], [rec("قهرمان", "namava")]], FusionConfig(source_precedence=["filimo", "namava"]))
    assert len(out) == 1
    assert out[0].sources == ["filimo", "namava"]


def test_fuse_raw_titles_two_edits_stay_separate():
    # "Movie One" -> "MovieOne ": delete the space, append one: 2/9 > 0.2
    assert title_distance("Movie One", "MovieOne ") == pytest.approx(2 / 9)
    a = MovieRecord(id="1", title="Movie One", sources=["s1"])
    b = MovieRecord(id="2", title="MovieOne", sources=["s2"])
    b.title = "MovieOne "  # bypass trimming to reproduce the raw-title case
    out = fuse([[a], [b]], FusionConfig(normalize_titles=False))
    assert len(out) == 2


def test_fuse_normalized_titles_merge_case_variants():
    out = fuse([[rec("The Salesman", "a")], [rec("the salesman", "b")]])
    assert len(out) == 1


def test_fuse_preserves_count_when_nothing_matches():
    import random

    rnd = random.Random(0)
    titles = []
    while len(titles) < 200:
        t = "".join(rnd.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(8))
        if all(title_distance(t, u) > 0.2 for u in titles):
            titles.append(t)
    sources = [[rec(t, f"src{s}") for t in titles[s::4]] for s in range(4)]
    assert len(fuse(sources)) == 200


def test_fuse_scalar_precedence_and_list_union():
    a = rec("Hamoun", "namava", release_year=1990, actors=["x"], storyline=None)
    b = rec("Hamoun", "filimo", release_year=1989, actors=["y", "x"], storyline="plot")
    (m,) = fuse([[a], [b]], FusionConfig(source_precedence=["filimo", "namava"]))
    assert m.release_year == 1989
    assert m.storyline == "plot"
    assert m.actors == ["y", "x"]
    assert m.sources == ["filimo", "namava"]
    assert m.id == b.id


def test_fuse_transitive_closure():
    # abcdefghij ~ abcdefghiX ~ abcdefghXY but the ends are 2/10 apart too; use a longer chain
    a, b, c = "abcdefghij", "abcdefghiz", "abcdefghyz"
    cfg = FusionConfig(title_distance_threshold=0.1)
    assert title_distance(a, c) > 0.1
    out = fuse([[rec(a, "s1")], [rec(b, "s2")], [rec(c, "s3")]], cfg)
    assert len(out) == 1
    assert out[0].sources == ["s1", "s2", "s3"]


def test_fuse_precedence_must_cover_sources():
    with pytest.raises(ValueError, match="namava"):
        fuse([[rec("a", "filimo")], [rec("b", "namava")]], FusionConfig(source_precedence=["filimo"]))


def test_fuse_empty():
    assert fuse([]) == []
    assert fuse([[], []]) == []


record_titles = st.lists(st.text(alphabet="abcd ", min_size=1, max_size=6).filter(lambda t: t.strip()), max_size=12)


@given(record_titles, st.sampled_from([0.0, 0.2, 0.34, 0.5]))
@settings(max_examples=150, deadline=None)
def test_fuse_properties(titles, threshold):
    cfg = FusionConfig(title_distance_threshold=threshold, source_precedence=["s0", "s1", "s2"])
    records = [rec(t, f"s{i % 3}", rid=str(i)) for i, t in enumerate(titles)]
    sources = [[r for r in records if r.sources == [f"s{k}"]] for k in range(3)]
    out = fuse(sources, cfg)
    assert len(out) <= len(records)
    # each input record is absorbed by exactly one output record
    for r in records:
        owners = [o for o in out if r.title in _members(o, records, cfg)]
        assert len(owners) == 1
        assert set(r.sources) <= set(owners[0].sources)
    # no two outputs within the threshold
    keys = [normalize_title(o.title) for o in out]
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            assert title_distance(keys[i], keys[j]) > threshold
    # idempotent
    again = fuse([out], cfg)
    assert [o.to_dict() for o in again] == [o.to_dict() for o in out]


def _members(out_record, records, cfg):
    # titles of inputs that are within threshold of this output's title, closed transitively
    members = {normalize_title(out_record.title)}
    changed = True
    while changed:
        changed = False
        for r in records:
            key = normalize_title(r.title)
            if key not in members and any(title_distance(key, m) <= cfg.title_distance_threshold for m in members):
                members.add(key)
                changed = True
    return {r.title for r in records if normalize_title(r.title) in members}


def test_fused_output_schema(tmp_path):
    out = fuse([[rec("A", "s1", english_title="A en")], [rec("A", "s2", duration=90)]])
    obj = json.loads(dump_records(out))
    assert obj == [{"id": "s1:A", "title": "A", "sources": ["s1", "s2"], "english_title": "A en",
                    "rates": [], "genres": [], "directors": [], "producers": [], "actors": [], "duration": 90}]
