import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import angle_vectors
from kgrec.corpus import MovieRecord
from kgrec.kg import build_graph
from kgrec.recommender import (
    FEATURES,
    FeatureWeights,
    MovieFeatureVectors,
    SimilarityTable,
    build_feature_vectors,
    cosine,
    recommend,
    record_text,
    similarity_breakdown,
    weighted_similarity,
)
from kgrec.synthetic import random_feature_vectors
from kgrec.tfidf import SparseVector, fit, tokenize
from kgrec.transe import TransEConfig, train


def test_cosine_examples():
    assert cosine([1, 0], [1, 0]) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 2], [2, 1]) == pytest.approx(0.8, abs=1e-15)
    assert cosine([0, 0], [1, 1]) == 0.0
    assert cosine(SparseVector((0, 3), (1.0, 2.0)), SparseVector((0, 3), (2.0, 1.0))) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        cosine([1, 0], [1, 0, 0])
    with pytest.raises(TypeError):
        cosine(SparseVector((0,), (1.0,)), [1.0])


def movie(mid, text=(1.0,), **dense):
    return MovieFeatureVectors(mid, SparseVector.from_dict(dict(enumerate(text))),
                               **{f"{k}_vec": np.asarray(v, float) for k, v in dense.items()})


def test_weighted_examples():
    a = movie("a", text=(1.0, 0.0), director=[1.0, 0.0])
    b = movie("b", text=(1.0, math.sqrt(3)), director=[2.0, 0.0])
    # text cosine 0.5, director cosine 1.0, producer/actors/genre absent
    w = FeatureWeights(text=1 / 3, director=1.0, producer=0.2, actors=0.7, genre=0.1)
    assert weighted_similarity(a, b, w) == pytest.approx((0.5 / 3 + 1.0) / (1 / 3 + 1.0))
    assert weighted_similarity(a, b, (1, 3, 0, 0, 0)) == pytest.approx(0.875)
    assert weighted_similarity(a, b, FeatureWeights(1, 0, 0, 0, 0)) == pytest.approx(0.5)
    same = movie("c", text=(1.0, 2.0), director=[1, 1], producer=[1, 1], actors=[1, 1], genre=[1, 1])
    assert weighted_similarity(same, same, FeatureWeights(0.3, 0.1, 0.9, 0.5, 0.2)) == pytest.approx(1.0)


def test_undefined_when_no_shared_weighted_feature():
    a = movie("a", director=[1.0, 0.0])
    b = movie("b", genre=[1.0, 0.0])
    br = similarity_breakdown(a, b, FeatureWeights(0, 1, 0, 0, 1))
    assert br.score == 0.0 and not br.defined


def test_feature_weights_validation():
    with pytest.raises(ValueError):
        FeatureWeights(0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        FeatureWeights(1.5)
    with pytest.raises(ValueError):
        FeatureWeights.from_sequence([1, 1])


def test_recommend_small_cases():
    two = {"a": movie("a"), "b": movie("b", text=(0.0, 1.0))}
    assert recommend("a", 5, FeatureWeights(), two).movies == ["b"]
    vecs = angle_vectors()
    assert len(recommend("m1", 50, FeatureWeights(), vecs).entries) == 5
    with pytest.raises(KeyError):
        recommend("nope", 3, FeatureWeights(), vecs)


def test_clone_ranks_first():
    rng = np.random.default_rng(0)
    vecs = random_feature_vectors(10, rng, clones=1, missing_rate=0.0)
    clone = next(m for m in vecs if m.startswith("clone"))
    target = clone.split("-", 1)[1]
    top = recommend(target, 3, FeatureWeights(), vecs).entries[0]
    assert top[0] == clone and top[1] == pytest.approx(1.0)


def test_ties_break_by_ascending_id():
    vecs = {m: movie(m, text=(1.0, 1.0)) for m in ["z", "b", "q", "a"]}
    assert recommend("q", 3, FeatureWeights(), vecs).movies == ["a", "b", "z"]


def test_table_matches_scalar_path():
    rng = np.random.default_rng(1)
    vecs = random_feature_vectors(40, rng)
    table = SimilarityTable(vecs)
    w = FeatureWeights(0.9, 0.2, 0.4, 0.6, 0.1)
    for q in list(vecs)[:5]:
        scores, defined = table.scores(q, w)
        for i, m in enumerate(table.ids):
            br = similarity_breakdown(vecs[q], vecs[m], w)
            assert scores[i] == pytest.approx(br.score, abs=1e-12)
            assert defined[i] == br.defined


# subnormal weights underflow when scaled (5e-324 * 0.5 == 0), so keep them out
weight = st.one_of(st.just(0.0), st.floats(1e-6, 1))
weights = st.lists(weight, min_size=5, max_size=5).filter(lambda w: any(x > 0 for x in w))


@given(weights, st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_scale_invariance(w, c, seed):
    vecs = random_feature_vectors(12, np.random.default_rng(seed))
    ids = list(vecs)
    a, b = vecs[ids[0]], vecs[ids[1]]
    scaled = [c * x for x in w]
    assert weighted_similarity(a, b, scaled) == pytest.approx(weighted_similarity(a, b, w), abs=1e-12)
    assert recommend(ids[0], 5, scaled, vecs).movies == recommend(ids[0], 5, w, vecs).movies


@given(weights, st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_score_bounded(w, seed):
    vecs = random_feature_vectors(8, np.random.default_rng(seed))
    ids = list(vecs)
    for m in ids[1:]:
        assert -1.0 - 1e-12 <= weighted_similarity(vecs[ids[0]], vecs[m], w) <= 1.0 + 1e-12


def test_build_feature_vectors():
    records = [
        MovieRecord(id="1", title="شب باران", sources=["s"], storyline="پدر و مادر", directors=["d1"], actors=["x", "y"]),
        MovieRecord(id="2", title="خانه", sources=["s"], directors=["d1"], genres=["درام"]),
    ]
    g = build_graph(records)
    model, _ = train(g, TransEConfig(dim=4, epochs=3, seed=0))
    tf = fit([tokenize(record_text(r)) for r in records])
    vecs = build_feature_vectors(records, tf, model, g)
    d1 = model.entity_embeddings[model.entity_index("mfb:person/d1")]
    x = model.entity_embeddings[model.entity_index("mfb:person/x")]
    y = model.entity_embeddings[model.entity_index("mfb:person/y")]
    assert np.array_equal(vecs["1"].director_vec, d1)
    np.testing.assert_allclose(vecs["1"].actors_vec, (x + y) / 2)
    assert vecs["1"].producer_vec is None and vecs["1"].genre_vec is None
    assert vecs["2"].actors_vec is None
    with pytest.raises(KeyError, match="'3'"):
        build_feature_vectors([MovieRecord(id="3", title="t", sources=["s"])], tf, model, g)


def test_features_order():
    assert FEATURES == ("text", "director", "producer", "actors", "genre")
