import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activesearch.errors import ConfigurationError, DomainExhausted, InputError, UsageError
from activesearch.knn import KnnState, NeighborIndex, build_neighbor_index

from oracles import knn_posterior, max_posterior_after, random_instance


def _state(neighbors, gamma=0.1):
    return KnnState(NeighborIndex.from_neighbors(neighbors), gamma)


class TestNeighborIndex:
    def test_line_example(self):
        idx = build_neighbor_index([[0.0], [1.0], [3.0]], 1)
        assert idx.neighbors.tolist() == [[1], [0], [1]]
        assert idx.reverse == ((1,), (0, 2), ())

    def test_ties_break_by_id(self):
        # point 1 is equidistant from 0 and 2
        idx = build_neighbor_index([[0.0], [1.0], [2.0], [10.0]], 2)
        assert idx.neighbors[1].tolist() == [0, 2]
        assert idx.neighbors[3].tolist() == [2, 1]

    def test_k_too_large(self):
        with pytest.raises(ConfigurationError):
            build_neighbor_index(np.zeros((4, 2)), 4)

    def test_non_finite(self):
        with pytest.raises(InputError):
            build_neighbor_index([[0.0, 1.0], [np.nan, 0.0], [1.0, 1.0]], 1)

    def test_reverse_counts_and_transpose(self):
        pts = np.random.default_rng(0).random((250, 2))
        idx = build_neighbor_index(pts, 50)
        assert sum(len(r) for r in idx.reverse) == 250 * 50
        for i, row in enumerate(idx.neighbors.tolist()):
            assert len(row) == 50 and i not in row
            for j in row:
                assert i in idx.reverse[j]
        assert idx.rev_ptr[-1] == 250 * 50

    def test_sorted_by_distance(self):
        pts = np.random.default_rng(1).random((60, 3))
        idx = build_neighbor_index(pts, 7)
        for i, row in enumerate(idx.neighbors):
            d = ((pts[row] - pts[i]) ** 2).sum(axis=1)
            assert np.all(np.diff(d) >= 0)
            others = np.delete(np.arange(60), list(row) + [i])
            assert ((pts[others] - pts[i]) ** 2).sum(axis=1).min() >= d[-1]

    def test_relation_is_directed(self):
        idx = build_neighbor_index([[0.0], [1.0], [3.0]], 1)
        assert 1 in idx.neighbors[2] and 2 not in idx.neighbors[1]


class TestPosterior:
    def test_empty_neighborhood(self):
        s = _state([[1], [0], [1]])
        assert s.posterior(0) == pytest.approx(0.1)

    def test_one_positive_neighbor(self):
        s = _state([[1], [0], [1]])
        s.condition(1, 1)
        assert s.posterior(0) == pytest.approx(0.55, abs=1e-15)

    def test_one_of_two(self):
        s = _state([[1, 2], [0, 2], [0, 1]])
        s.condition(1, 1)
        s.condition(2, 0)
        assert s.posterior(0) == pytest.approx(1.1 / 3, abs=1e-15)

    def test_labeled_point_rejected(self):
        s = _state([[1], [0], [1]])
        s.condition(0, 1)
        with pytest.raises(UsageError):
            s.posterior(0)


class TestCondition:
    def test_negative_lowers_reverse_neighbor(self):
        s = _state([[1], [0], [1]])
        before = s.posterior(2)
        s.condition(1, 0)
        assert s.posterior(2) < before
        assert s.posterior(2) == pytest.approx(0.1 / 2)

    def test_double_label(self):
        s = _state([[1], [0], [1]])
        s.condition(1, 0)
        with pytest.raises(UsageError):
            s.condition(1, 1)

    def test_bad_label(self):
        s = _state([[1], [0], [1]])
        with pytest.raises(InputError):
            s.condition(1, 2)

    def test_undo_restores(self):
        rng = np.random.default_rng(3)
        s, _, _ = random_instance(rng, 8, 12)
        before = s.snapshot()
        x = s.unlabeled()[0]
        tok = s.condition(x, 1)
        assert s.snapshot() != before
        s.undo(tok)
        assert s.snapshot() == before

    def test_gamma_domain(self):
        with pytest.raises(ConfigurationError):
            _state([[1], [0], [1]], gamma=1.5)


class TestUpperBound:
    def test_n_zero_is_max_posterior(self):
        rng = np.random.default_rng(5)
        s, _, _ = random_instance(rng, 6, 10)
        assert s.probability_upper_bound(0) == max(s.posterior(x) for x in s.unlabeled())

    def test_single_point_example(self):
        s = _state([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
        s.condition(1, 1)
        s.condition(2, 1)
        s.condition(3, 0)
        assert s.probability_upper_bound(2) == pytest.approx(4.1 / 6, abs=1e-15)

    def test_exhausted(self):
        s = _state([[1], [0]])
        s.condition(0, 0)
        s.condition(1, 0)
        with pytest.raises(DomainExhausted):
            s.probability_upper_bound(0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3))
def test_bound_dominates_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    s, nbrs, labels = random_instance(rng, 4, 9, k_max=4)
    assert s.probability_upper_bound(n) >= max_posterior_after(nbrs, labels, s.gamma, n) - 1e-15


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bound_nondecreasing_in_n(seed):
    s, _, _ = random_instance(np.random.default_rng(seed), 4, 12)
    vals = [s.probability_upper_bound(n) for n in range(6)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_incremental_matches_recount_and_oracle(seed):
    rng = np.random.default_rng(seed)
    s, nbrs, labels = random_instance(rng, 3, 12)
    assert (s.alpha, s.beta) == s.recount()
    for x in s.unlabeled():
        assert s.posterior(x) == knn_posterior(nbrs, labels, s.gamma, x)
    assert all(0 <= a <= b <= s.index.k for a, b in zip(s.alpha, s.beta))
