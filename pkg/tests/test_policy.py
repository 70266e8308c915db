import numpy as np
import pytest

from activesearch._backend import HAVE_COMPILED
from activesearch.clumps import ClumpModel, ClumpSpace
from activesearch.errors import ConfigurationError, DomainExhausted, UsageError
from activesearch.policy import (
    PolicyConfig,
    expected_search_utility,
    run_episode,
    select_random,
    select_search,
    select_uncertainty,
)

from oracles import StaticModel, brute_best, brute_value, knn_posterior, random_instance

BACKENDS = ["python"] + (["compiled"] if HAVE_COMPILED else [])
EPS, DELTA = 0.3, 0.4


class TestPairAndSingle:
    def setup_method(self):
        self.model = ClumpModel(ClumpSpace.pair_and_single(EPS, DELTA))

    def test_two_step_values(self):
        left = expected_search_utility(self.model, 0, 2)
        right = expected_search_utility(self.model, 2, 2)
        assert left == pytest.approx(2 * EPS + (1 - EPS) * DELTA, abs=1e-12)
        assert right == pytest.approx(EPS + DELTA, abs=1e-12)
        assert left - right == pytest.approx(EPS * (1 - DELTA), abs=1e-12)

    def test_decisions(self):
        assert select_search(self.model, PolicyConfig(horizon=1)) == 2
        assert select_search(self.model, PolicyConfig(horizon=2)) == 0

    @pytest.mark.parametrize("delta", [0.35, 0.5, 0.9, 0.99])
    def test_left_chosen_for_any_delta_above_eps(self, delta):
        model = ClumpModel(ClumpSpace.pair_and_single(EPS, delta))
        assert select_search(model, PolicyConfig(horizon=2)) in (0, 1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_oracle_equivalence(backend):
    rng = np.random.default_rng(11)
    for _ in range(40):
        s, nbrs, labels = random_instance(rng)
        for h in (1, 2, 3):
            for x in s.unlabeled():
                got = expected_search_utility(s, x, h, backend=backend)
                assert got == pytest.approx(brute_value(nbrs, labels, s.gamma, x, h), abs=1e-12)


def test_horizon_one_is_posterior():
    s, nbrs, labels = random_instance(np.random.default_rng(2))
    for x in s.unlabeled():
        assert expected_search_utility(s, x, 1) == knn_posterior(nbrs, labels, s.gamma, x)


def test_state_untouched():
    s, _, _ = random_instance(np.random.default_rng(4), 7, 8)
    before = s.snapshot()
    for x in s.unlabeled():
        expected_search_utility(s, x, 3, backend="python")
    assert s.snapshot() == before


def test_utility_range():
    rng = np.random.default_rng(8)
    for _ in range(30):
        s, _, _ = random_instance(rng)
        for h in (1, 2, 3):
            for x in s.unlabeled():
                assert 0.0 <= expected_search_utility(s, x, h) <= h


def test_usage_errors():
    s, _, labels = random_instance(np.random.default_rng(1), 5, 6)
    with pytest.raises(UsageError):
        expected_search_utility(s, s.unlabeled()[0], 0)
    s.condition(s.unlabeled()[0], 0)
    lab = [x for x in range(s.n_points) if s.label_of(x) is not None][0]
    with pytest.raises(UsageError):
        expected_search_utility(s, lab, 2)


class TestSelectSearch:
    def test_horizon_one_is_argmax(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            s, _, _ = random_instance(rng)
            post = {x: s.posterior(x) for x in s.unlabeled()}
            best = max(post.values())
            assert select_search(s, PolicyConfig(horizon=1)) == min(x for x, p in post.items() if p == best)

    def test_matches_brute_argmax(self):
        rng = np.random.default_rng(22)
        for _ in range(30):
            s, nbrs, labels = random_instance(rng)
            for h in (2, 3):
                x, _, _ = brute_best(nbrs, labels, s.gamma, h)
                assert select_search(s, PolicyConfig(horizon=h, prune=False)) == x

    def test_budget_clipping(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            s, _, _ = random_instance(rng)
            assert (select_search(s, PolicyConfig(horizon=3), remaining=1)
                    == select_search(s, PolicyConfig(horizon=1)))

    def test_exhausted(self):
        m = StaticModel([0.5])
        m.condition(0, 1)
        with pytest.raises(DomainExhausted):
            select_search(m, PolicyConfig(horizon=2))


class TestUncertainty:
    def test_closest_to_half(self):
        assert select_uncertainty(StaticModel([0.2, 0.45, 0.9])) == 1

    def test_tie_to_lowest(self):
        assert select_uncertainty(StaticModel([0.4, 0.6])) == 0

    def test_all_equal(self):
        assert select_uncertainty(StaticModel([0.3] * 4)) == 0


class TestRandom:
    def test_single_point(self):
        m = StaticModel([0.1, 0.2, 0.3])
        m.condition(0, 0)
        m.condition(2, 0)
        assert select_random(m, np.random.default_rng(0)) == 1

    def test_reproducible(self):
        m = StaticModel([0.1] * 10)
        a = [select_random(m, r) for r in [np.random.default_rng(5)] for _ in range(20)]
        b = [select_random(m, r) for r in [np.random.default_rng(5)] for _ in range(20)]
        assert a == b

    def test_uniform(self):
        m = StaticModel([0.1] * 4)
        rng = np.random.default_rng(9)
        draws = np.bincount([select_random(m, rng) for _ in range(10_000)], minlength=4)
        sd = np.sqrt(10_000 * 0.25 * 0.75)
        assert np.all(np.abs(draws - 2500) < 3 * sd)


class TestEpisode:
    def test_empty_budget(self):
        trace = run_episode(StaticModel([0.5] * 3), [0, 1, 0], "search",
                            PolicyConfig(budget=0, seed_target=False))
        assert trace.steps == [] and trace.utility == 0

    def test_greedy_static_order(self):
        probs = [0.3, 0.9, 0.1, 0.6, 0.75]
        trace = run_episode(StaticModel(probs), [1, 0, 1, 1, 0], "search",
                            PolicyConfig(horizon=1, budget=5, seed_target=False))
        assert trace.points == [1, 4, 3, 0, 2]

    def test_bookkeeping(self):
        rng = np.random.default_rng(3)
        s, _, _ = random_instance(rng, 8, 8)
        labels = rng.integers(0, 2, s.n_points).tolist()
        labels[s.unlabeled()[0]] = 1
        budget = len(s.unlabeled()) - 1
        trace = run_episode(s, labels, "search", PolicyConfig(horizon=2, budget=budget, seed=1))
        running = 0
        for rec in trace.steps:
            running += rec.label
            assert rec.cumulative == running
            assert rec.label == labels[rec.point]
        assert len(set(trace.points)) == len(trace.points) == budget
        assert trace.seed_point not in trace.points and labels[trace.seed_point] == 1

    def test_budget_too_large(self):
        with pytest.raises(ConfigurationError):
            run_episode(StaticModel([0.5] * 3), [0, 1, 0], "random",
                        PolicyConfig(budget=3, seed_target=True))

    def test_unknown_policy(self):
        with pytest.raises(ConfigurationError):
            run_episode(StaticModel([0.5]), [0], "oracle", PolicyConfig(budget=1))
