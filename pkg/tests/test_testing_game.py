import numpy as np
import pytest

from ivpkit.beliefs import Belief, StateSpace, is_lr_dominated, posterior_mean
from ivpkit.blackwell import NotRankedError, binary_symmetric, fully_informative, uninformative
from ivpkit.testing_game import (
    TestingModel,
    canonical_model,
    comparative_statics,
    cutoff_gain,
    extremal_cutoffs,
    gain_on_grid,
    interim_beliefs,
    ivp_sandwich,
    monopolist_certifier,
    sandwich_holds,
    solve_equilibrium_cutoffs,
)

ACCURACIES = [0.5, 0.7, 0.9, 1.0]


def shifted_model(test, cost, lo=0.2, hi=0.9, n=1401):
    """Types on [lo, hi] with f(t|1) ∝ t, f(t|0) ∝ 1 - t and the prior that makes E[q|t] = t."""
    t = np.linspace(lo, hi, n)
    z1 = (hi ** 2 - lo ** 2) / 2
    z0 = (hi - lo) - z1
    return TestingModel(StateSpace([0.0, 1.0]), Belief([z0 / (z0 + z1), z1 / (z0 + z1)]), t,
                        np.vstack([(1 - t) / z0, t / z1]), test, cost)


class TestModel:
    def test_canonical_prior_mean(self):
        assert canonical_model(uninformative(2), 0.3).prior_mean == 0.5

    def test_rejects_bad_normalization(self):
        t = np.linspace(0, 1, 101)
        with pytest.raises(ValueError, match="E\\[q\\|t\\]"):
            TestingModel(StateSpace([0.0, 1.0]), Belief([0.3, 0.7]), t,
                         np.vstack([2 * (1 - t), 2 * t]), uninformative(2), 0.3)

    def test_rejects_non_mlrp_densities(self):
        t = np.linspace(0, 1, 101)
        with pytest.raises(ValueError, match="MLRP"):
            TestingModel(StateSpace([0.0, 1.0]), Belief([0.5, 0.5]), t,
                         np.vstack([2 * t, 2 * (1 - t)]), uninformative(2), 0.3)

    def test_rejects_negative_cost(self):
        with pytest.raises(ValueError):
            canonical_model(uninformative(2), -0.1)

    def test_shifted_model_is_valid(self):
        m = shifted_model(uninformative(2), 0.3)
        assert m.prior_mean == pytest.approx(0.55)


class TestInterimBeliefs:
    def test_half(self):
        m = canonical_model(uninformative(2), 0.3)
        lo, hi = interim_beliefs(m, 0.5, check=True)
        assert posterior_mean(lo, m.qualities) == pytest.approx(0.25, abs=1e-12)
        assert posterior_mean(hi, m.qualities) == pytest.approx(0.75, abs=1e-12)

    def test_corners(self):
        m = canonical_model(uninformative(2), 0.3)
        lo, _ = interim_beliefs(m, 0.0)
        _, hi = interim_beliefs(m, 1.0)
        assert np.array_equal(lo.probs, m.private_belief(0.0).probs)
        assert np.array_equal(hi.probs, m.private_belief(1.0).probs)

    def test_outside_range(self):
        with pytest.raises(ValueError):
            interim_beliefs(canonical_model(uninformative(2), 0.3), 1.5)

    @pytest.mark.parametrize("t_star", [0.1, 0.37, 0.8])
    def test_interim_beliefs_are_lr_ordered(self, t_star):
        m = canonical_model(binary_symmetric(0.8), 0.3, n=201)
        lo, hi = interim_beliefs(m, t_star, check=True)
        assert is_lr_dominated(lo, hi)


class TestGain:
    @pytest.mark.parametrize("t", [0.1, 0.25, 0.5, 0.9])
    def test_uninformative_gain_is_constant(self, t):
        assert cutoff_gain(canonical_model(uninformative(2), 0.3), t) == pytest.approx(0.2, abs=1e-12)

    @pytest.mark.parametrize("t", [0.1, 0.25, 0.5, 0.9])
    def test_full_information_gain(self, t):
        m = canonical_model(fully_informative(2), 0.3)
        assert cutoff_gain(m, t) == pytest.approx(t / 2 - 0.3, abs=1e-12)

    def test_zero_cost_uninformative_positive(self):
        g = gain_on_grid(canonical_model(uninformative(2), 0.0, n=201))
        assert np.all(g[1:-1] > 0)

    def test_grid_matches_scalar(self):
        m = canonical_model(binary_symmetric(0.8), 0.2, n=101)
        g = gain_on_grid(m)
        for i in (1, 17, 50, 99):
            assert g[i] == pytest.approx(cutoff_gain(m, float(m.t_grid[i])), abs=1e-13)

    def test_continuity(self):
        g = gain_on_grid(canonical_model(binary_symmetric(0.9), 0.3))
        assert np.max(np.abs(np.diff(g[1:-1]))) < 1e-2


class TestEquilibria:
    def test_uninformative_all_test(self):
        cut = solve_equilibrium_cutoffs(canonical_model(uninformative(2), 0.3))
        assert [(c.t_star, c.kind) for c in cut] == [(0.0, "all-test")]

    def test_full_information_interior(self):
        cut = solve_equilibrium_cutoffs(canonical_model(fully_informative(2), 0.3))
        (c,) = [c for c in cut if c.kind == "interior"]
        assert c.t_star == pytest.approx(0.6, abs=1e-6)
        assert abs(c.residual) <= 1e-7
        # with full revelation the marginal tester is exactly compensated: t* - E[t | t < t*] = c
        assert c.t_star - posterior_mean(c.delta_minus, StateSpace([0, 1])) == pytest.approx(0.3, abs=1e-6)

    def test_high_cost_no_test(self):
        cut = solve_equilibrium_cutoffs(canonical_model(uninformative(2), 0.6))
        assert [(c.t_star, c.kind) for c in cut] == [(1.0, "no-test")]

    def test_knife_edge_interval(self):
        cut = solve_equilibrium_cutoffs(canonical_model(uninformative(2), 0.5, n=201))
        kinds = {c.kind for c in cut}
        assert {"all-test", "no-test", "interval"} <= kinds
        assert extremal_cutoffs(cut) == (0.0, 1.0)

    @pytest.mark.parametrize("q", [0.75, 0.9, 0.95, 1.0])
    def test_sandwich(self, q):
        m = canonical_model(binary_symmetric(q), 0.3)
        for c in solve_equilibrium_cutoffs(m):
            if c.kind == "interior":
                assert sandwich_holds(ivp_sandwich(m, c))

    def test_grid_refinement(self):
        coarse = solve_equilibrium_cutoffs(canonical_model(binary_symmetric(0.9), 0.3, n=1001))
        fine = solve_equilibrium_cutoffs(canonical_model(binary_symmetric(0.9), 0.3, n=2001))
        assert abs(extremal_cutoffs(coarse)[1] - extremal_cutoffs(fine)[1]) < 1e-4


class TestStatics:
    def test_accuracy_sequence_is_monotone(self):
        tests = [binary_symmetric(q) for q in ACCURACIES]
        table = comparative_statics(canonical_model(tests[0], 0.3), tests, params=ACCURACIES)
        assert table.monotone
        assert table.rows[-1].smallest_cutoff == pytest.approx(0.6, abs=1e-6)

    def test_extremes(self):
        tests = [uninformative(2), fully_informative(2)]
        table = comparative_statics(canonical_model(tests[0], 0.3), tests)
        assert [r.smallest_cutoff for r in table.rows] == [0.0, pytest.approx(0.6, abs=1e-6)]
        assert table.rows[1].tested_mass == pytest.approx(0.4, abs=1e-6)
        assert table.rows[1].agent_exante_cost == pytest.approx(0.12, abs=1e-6)

    def test_repeated_test(self):
        e = binary_symmetric(0.9)
        table = comparative_statics(canonical_model(e, 0.3), [e, e])
        assert table.rows[0].smallest_cutoff == table.rows[1].smallest_cutoff

    def test_unranked(self):
        with pytest.raises(NotRankedError, match="b"):
            comparative_statics(canonical_model(uninformative(2), 0.3),
                                [binary_symmetric(0.9), binary_symmetric(0.7)], ids=["a", "b"])


class TestCertifier:
    def test_prefers_uninformative(self):
        m = canonical_model(uninformative(2), 0.0)
        best = monopolist_certifier(m, [uninformative(2), fully_informative(2)])
        assert (best.test_index, best.price, best.cutoff) == (0, 0.5, 0.0)
        assert best.profit == pytest.approx(0.5, abs=1e-9)

    def test_full_information_price(self):
        m = canonical_model(fully_informative(2), 0.0)
        best = monopolist_certifier(m, [fully_informative(2)], prices=[0.3])
        assert best.profit == pytest.approx(0.12, abs=1e-6)

    def test_zero_price(self):
        m = canonical_model(fully_informative(2), 0.0)
        assert monopolist_certifier(m, [fully_informative(2)], prices=[0.0]).profit == 0.0

    def test_shifted_types(self):
        m = shifted_model(uninformative(2), 0.0)
        best = monopolist_certifier(m, [binary_symmetric(0.8), uninformative(2)])
        assert best.test_index == 1
        assert best.price == pytest.approx(0.35, abs=1e-12)
        assert best.cutoff == pytest.approx(0.2) and best.profit == pytest.approx(0.35, abs=1e-9)

    def test_empty(self):
        with pytest.raises(ValueError):
            monopolist_certifier(canonical_model(uninformative(2), 0.0), [])
