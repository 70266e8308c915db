import itertools
import math

import numpy as np
import pytest

from activesearch.clumps import (
    ClumpDP,
    ClumpModel,
    ClumpSpace,
    clump_difference,
    homogeneous_value_closed,
    homogeneous_value_sum,
    eq2_value,
    eq3_bound,
    exact_policy_value,
    first_query_values,
    lemma1_crossover,
    crossover_gap,
    load_clump_space,
    theorem1_ratio_bound,
)
from activesearch.errors import ConfigurationError, NoCrossoverFound, ParseError, UsageError
from activesearch.policy import PolicyConfig, expected_search_utility, select_search

EPS, DELTA = 0.3, 0.4


def simulate_policy(model, horizon, budget):
    """Expected targets of the generic engine's policy, by outcome enumeration."""
    if budget == 0:
        return 0.0
    x = select_search(model, PolicyConfig(horizon=min(horizon, budget), prune=False))
    p = model.posterior(x)
    total = 0.0
    for y, w in ((1, p), (0, 1.0 - p)):
        if w == 0.0:
            continue
        tok = model.condition(x, y)
        total += w * (y + simulate_policy(model, horizon, budget - 1))
        model.undo(tok)
    return total


class TestClumpModel:
    def test_posteriors(self):
        m = ClumpModel(ClumpSpace([(3, 0.3), (2, 0.6)]))
        assert m.posterior(0) == 0.3
        m.condition(0, 1)
        assert m.posterior(1) == 1.0
        m.condition(3, 0)
        assert m.posterior(4) == 0.0

    def test_contradiction_rejected(self):
        m = ClumpModel(ClumpSpace([(2, 0.3)]))
        m.condition(0, 1)
        with pytest.raises(UsageError):
            m.condition(1, 0)

    def test_queried_rejected(self):
        m = ClumpModel(ClumpSpace([(2, 0.3)]))
        m.condition(0, 1)
        with pytest.raises(UsageError):
            m.posterior(0)

    def test_undo(self):
        m = ClumpModel(ClumpSpace([(2, 0.3), (1, 0.5)]))
        before = m.snapshot()
        tok = m.condition(1, 0)
        m.undo(tok)
        assert m.snapshot() == before

    def test_bad_probability(self):
        with pytest.raises(ConfigurationError):
            ClumpSpace([(2, 1.0)])


class TestExactPolicyValue:
    def test_two_half_clumps(self):
        assert exact_policy_value(ClumpSpace.homogeneous(2, 2, 0.5), 3, 2) == 1.25

    def test_pair_and_single(self):
        s = ClumpSpace.pair_and_single(EPS, DELTA)
        assert exact_policy_value(s, 1, 2) == pytest.approx(EPS + DELTA, abs=1e-15)
        assert exact_policy_value(s, 2, 2) == pytest.approx(2 * EPS + (1 - EPS) * DELTA, abs=1e-15)
        gain = exact_policy_value(s, 2, 2) - exact_policy_value(s, 1, 2)
        assert gain == pytest.approx(EPS * (1 - DELTA), abs=1e-12)

    def test_single_query(self):
        s = ClumpSpace([(3, 0.2), (1, 0.45), (2, 0.3)])
        for h in (1, 2, 3):
            assert exact_policy_value(s, h, 1) == 0.45

    def test_budget_too_large(self):
        with pytest.raises(ConfigurationError):
            exact_policy_value(ClumpSpace.pair_and_single(EPS, DELTA), 1, 4)

    def test_matches_engine_simulation(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            n_clumps = int(rng.integers(1, 5))
            probs = rng.choice([0.15, 0.3, 0.5, 0.7], n_clumps).tolist()
            sizes = rng.integers(1, 4, n_clumps).tolist()
            space = ClumpSpace(zip(sizes, probs))
            t = int(rng.integers(1, min(5, space.n_points) + 1))
            for h in (1, 2, 3):
                want = simulate_policy(ClumpModel(space), h, t)
                assert exact_policy_value(space, h, t) == pytest.approx(want, abs=1e-12)

    def test_lookahead_values_match_engine(self):
        space = ClumpSpace([(3, 0.2), (1, 0.45), (2, 0.3), (1, 0.3)])
        model = ClumpModel(space)
        firsts = [0, 3, 4, 6]
        for h in (1, 2, 3, 4):
            dp = first_query_values(space, h)
            eng = [expected_search_utility(model, x, h) for x in firsts]
            assert dp == pytest.approx(eng, abs=1e-12)


class TestHomogeneousValue:
    def test_t_one(self):
        assert eq2_value(0.37, 1) == 0.37

    def test_hand_value(self):
        assert eq2_value(0.5, 2) == 1.25

    @pytest.mark.parametrize("eps", [0.1, 0.3, 0.5, 0.9])
    def test_matches_dp(self, eps):
        for t in range(1, 6):
            for h in range(1, t + 1):
                v = exact_policy_value(ClumpSpace.homogeneous(t, t, eps), h, t)
                assert v == pytest.approx(eq2_value(eps, t), abs=1e-12)

    def test_closed_form_grid(self):
        for eps, t in itertools.product(np.linspace(0.05, 0.95, 10), range(1, 11)):
            assert homogeneous_value_closed(eps, t) == pytest.approx(homogeneous_value_sum(eps, t), abs=1e-12)


class TestValueUpperBound:
    def test_horizon_one(self):
        assert eq3_bound(0.3, 1, 7) == pytest.approx(8 * 0.3)

    def test_hand_value(self):
        assert eq3_bound(0.5, 2, 4) == 4.0

    def test_dominates_dp(self):
        for eps, delta in [(0.05, 0.1), (0.1, 0.3), (0.2, 0.25)]:
            for horizon, t in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4)]:
                space = ClumpSpace.separating(eps, delta, horizon, t)
                assert eq3_bound(delta, horizon, t) >= exact_policy_value(space, horizon, t)


class TestClumpDifference:
    def test_horizon_one(self):
        assert clump_difference(0.3, 0.4, 1) == pytest.approx(0.1, abs=1e-15)

    def test_positive_example(self):
        assert clump_difference(0.3, 0.4, 2) > 0

    def test_equals_difference_of_eq2_forms(self):
        for eps, delta, h in [(0.1, 0.2, 3), (0.3, 0.4, 2), (0.05, 0.9, 6)]:
            want = eq2_value(delta, h) - eq2_value(eps, h)
            assert clump_difference(eps, delta, h) == pytest.approx(want, abs=1e-12)

    def test_sign_grid(self):
        grid = np.linspace(0.02, 0.98, 25)
        for eps, delta in itertools.combinations(grid, 2):
            for h in range(1, 7):
                assert clump_difference(eps, delta, h) > 0

    def test_domain(self):
        with pytest.raises(ConfigurationError):
            clump_difference(0.4, 0.3, 2)


class TestRatioBound:
    def test_definitional_identity(self):
        for eps, delta, h, t in [(0.01, 0.02, 1, 100), (0.1, 0.3, 2, 7), (0.2, 0.5, 3, 40)]:
            want = eq2_value(eps, t) / eq3_bound(delta, h, t)
            assert theorem1_ratio_bound(eps, delta, h, t) == pytest.approx(want, rel=1e-12)

    def test_q_ten_instance(self):
        assert theorem1_ratio_bound(0.01, 0.02, 1, 100) > 10

    def test_growth_in_t(self):
        vals = [theorem1_ratio_bound(0.01, 0.02, 1, 10**e) for e in range(1, 5)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_dp_ratio_exceeds_bound(self):
        # the ratio bound is a lower bound on the true ratio of policy values
        eps, delta, h, m, t = 0.25, 0.3, 1, 2, 4
        lo = lemma1_crossover(h, m, t, delta)
        assert lo < eps
        space = ClumpSpace.separating(eps, delta, h, t)
        ratio = exact_policy_value(space, m, t) / exact_policy_value(space, h, t)
        assert ratio > theorem1_ratio_bound(eps, delta, h, t)


class TestCrossover:
    def test_pair_case(self):
        eps = lemma1_crossover(1, 2, 2, 0.4)
        assert 0 < eps < 0.4
        assert crossover_gap(1, 2, 2, 0.4, eps) > 0

    def test_large_clump(self):
        eps = lemma1_crossover(1, 2, 50, 0.4)
        assert 0 < eps < 0.4 and crossover_gap(1, 2, 50, 0.4, eps) > 0

    @pytest.mark.parametrize("h,m,k", [(1, 3, 3), (2, 3, 4), (2, 4, 5), (1, 4, 6)])
    def test_certified(self, h, m, k):
        eps = lemma1_crossover(h, m, k, 0.5)
        assert eps < 0.5
        large, small = first_query_values([(k, eps), (h, 0.5)], m)
        assert large > small

    def test_gap_in_pair_and_single(self):
        # two-step gap there is eps * (1 - delta)
        assert crossover_gap(1, 2, 2, 0.4, 0.3) == pytest.approx(0.3 * 0.6, abs=1e-12)

    def test_preconditions(self):
        with pytest.raises(ConfigurationError):
            lemma1_crossover(2, 2, 3, 0.4)

    def test_no_crossover_reported(self, monkeypatch):
        import activesearch.clumps as clumps

        monkeypatch.setattr(clumps, "crossover_gap", lambda *a: -1.0)
        with pytest.raises(NoCrossoverFound):
            clumps.lemma1_crossover(1, 2, 2, 0.4)


def test_clump_dp_memo_is_consistent():
    dp = ClumpDP()
    space = ClumpSpace([(2, 0.3), (2, 0.3), (1, 0.6)])
    config = ClumpDP.canonical(space, (-1, -1, -1), (2, 2, 1))
    assert len(config) == 2
    a = dp.value(config, (0.3, 2, -1, 2), 3)
    assert a == dp.value(config, (0.3, 2, -1, 2), 3)


class TestSpaceFile:
    def test_load(self, tmp_path):
        p = tmp_path / "space.csv"
        p.write_text("count,size,prob\n1,2,0.3\n# lone point\n1,1,0.4\n")
        space = load_clump_space(p)
        assert space == ClumpSpace.pair_and_single(0.3, 0.4)

    def test_bad_row(self, tmp_path):
        p = tmp_path / "space.csv"
        p.write_text("2,3,0.5\n1,2\n")
        with pytest.raises(ParseError) as err:
            load_clump_space(p)
        assert err.value.line == 2

    def test_bad_probability(self, tmp_path):
        p = tmp_path / "space.csv"
        p.write_text("2,3,1.5\n")
        with pytest.raises(ParseError):
            load_clump_space(p)
