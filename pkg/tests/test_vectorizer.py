from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_log
from oracles import naive_euclidean, ngram_counts
from proctail import NGramConfig, NGramVectorizer, build_vector_space, distance_matrix, trace_to_ngrams
from proctail.exceptions import AnalysisError, EmptyLogError
from proctail.vectorizer import END, START, FeatureMatrix


def test_single_event_trace():
    grams = trace_to_ngrams(["a"], NGramConfig((2, 3)))
    assert grams == Counter({(START, "a"): 1, ("a", END): 1, (START, "a", END): 1})


@pytest.mark.parametrize("trace, expected", [
    (["a", "b", "a"], {("a", "b"): 1, ("b", "a"): 1}),
    (["a", "b", "a", "b"], {("a", "b"): 2, ("b", "a"): 1}),
])
def test_bigrams_without_sentinels(trace, expected):
    assert trace_to_ngrams(trace, NGramConfig((2,), boundary_sentinels=False)) == Counter(expected)


@pytest.mark.parametrize("m", [1, 2, 5, 9])
def test_padded_window_counts(m):
    grams = trace_to_ngrams([f"x{i}" for i in range(m)])
    assert sum(c for g, c in grams.items() if len(g) == 2) == m + 1
    assert sum(c for g, c in grams.items() if len(g) == 3) == m


def test_binary_weighting():
    grams = trace_to_ngrams(["a", "a", "a"], NGramConfig((1,), False, "binary"))
    assert grams == Counter({("a",): 1})


def test_config_validation():
    with pytest.raises(ValueError):
        NGramConfig(())
    with pytest.raises(ValueError):
        NGramConfig((4,))
    assert NGramConfig.parse("3,2").sizes == (2, 3)


def test_build_vector_space_matches_bruteforce():
    traces = [["a", "b", "a"], ["b", "b"], ["a", "b", "b", "a", "a"]]
    fm = build_vector_space(make_log(traces))
    X = fm.toarray()
    for row, t in zip(X, traces):
        expected = ngram_counts(t)
        got = {g: int(row[j]) for g, j in fm.feature_index.items() if row[j]}
        assert got == expected
    # first-occurrence column order
    assert list(fm.feature_index)[:2] == [(START, "a"), ("a", "b")]
    assert fm.case_ids == ("c0", "c1", "c2")


def test_identical_and_disjoint_rows():
    fm = build_vector_space(make_log([["a", "b"], ["a", "b"], ["x", "y"]]))
    X = fm.toarray()
    assert np.array_equal(X[0], X[1])
    assert not np.any((X[0] > 0) & (X[2] > 0))


def test_empty_log_rejected():
    with pytest.raises(EmptyLogError):
        build_vector_space(make_log([]))


def test_vectorizer_is_an_sklearn_transformer():
    from sklearn.base import clone
    vec = NGramVectorizer(sizes=(2,), boundary_sentinels=False)
    X = vec.fit_transform([["a", "b"], ["b", "c"]])
    assert X.shape == (2, 2)
    assert list(vec.get_feature_names_out()) == ["a > b", "b > c"]
    # unseen n-grams are ignored
    assert vec.transform([["c", "d"]]).nnz == 0
    assert clone(vec).get_params() == vec.get_params()


def test_distance_examples():
    d = distance_matrix(np.array([[1, 0], [0, 1], [1, 0]]))
    assert d[0, 1] == pytest.approx(np.sqrt(2), abs=0)
    assert d[0, 2] == 0.0
    assert d[1, 0] == d[0, 1]
    with pytest.raises(AnalysisError):
        distance_matrix(np.array([[1, 2]]))


def test_distance_matches_naive_loop(rng):
    X = rng.integers(0, 6, size=(10, 8))
    d = distance_matrix(X).square()
    assert np.max(np.abs(d - naive_euclidean(X))) <= 1e-12
    Xf = rng.normal(size=(10, 8))
    assert np.max(np.abs(distance_matrix(Xf).square() - naive_euclidean(Xf))) <= 1e-12


def test_triangle_inequality_spot_check(rng):
    D = distance_matrix(rng.integers(0, 4, size=(15, 6))).square()
    for _ in range(200):
        i, j, k = rng.integers(0, 15, size=3)
        assert D[i, k] <= D[i, j] + D[j, k] + 1e-9
    assert np.all(np.diag(D) == 0) and np.array_equal(D, D.T)


traces_st = st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=6), min_size=2, max_size=8)


@settings(max_examples=50, deadline=None)
@given(traces_st, st.randoms(use_true_random=False))
def test_permutation_equivariance(traces, rnd):
    perm = list(range(len(traces)))
    rnd.shuffle(perm)
    d1 = distance_matrix(build_vector_space(make_log(traces))).square()
    d2 = distance_matrix(build_vector_space(make_log([traces[p] for p in perm]))).square()
    assert np.array_equal(d1[np.ix_(perm, perm)], d2)


@settings(max_examples=50, deadline=None)
@given(traces_st)
def test_zero_distance_iff_identical_rows(traces):
    fm = build_vector_space(make_log(traces))
    X = fm.toarray()
    D = distance_matrix(fm).square()
    for i in range(len(X)):
        for j in range(len(X)):
            assert (D[i, j] == 0) == np.array_equal(X[i], X[j])


@settings(max_examples=50, deadline=None)
@given(traces_st, st.lists(st.sampled_from("abcxyz"), min_size=1, max_size=6))
def test_adding_a_case_keeps_existing_distances(traces, extra):
    d1 = distance_matrix(build_vector_space(make_log(traces))).square()
    d2 = distance_matrix(build_vector_space(make_log(traces + [extra]))).square()
    assert np.array_equal(d1, d2[:-1, :-1])


def test_csv_exports():
    fm = build_vector_space(make_log([["a"], ["b"]]), NGramConfig((2,)))
    text = fm.to_csv()
    assert text.splitlines()[0] == "case_id,<START> > a,a > <END>,<START> > b,b > <END>"
    dcsv = distance_matrix(fm).to_csv().splitlines()
    assert dcsv[0] == ",c0,c1" and dcsv[1].startswith("c0,0.0,2.0")


def test_feature_matrix_shape_guard():
    import scipy.sparse as sp
    with pytest.raises(ValueError):
        FeatureMatrix({}, sp.csr_matrix((2, 0)), ("a",))
