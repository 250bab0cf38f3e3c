import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivpkit.beliefs import (
    Belief,
    Experiment,
    StateSpace,
    UnreachableSignalError,
    expected_cross_posterior_mean,
    is_fosd_dominated,
    is_lr_dominated,
    is_mlrp_experiment,
    marginal,
    posterior_mean,
    posterior_report,
    update,
)
from ivpkit.blackwell import binary_symmetric, fully_informative, uninformative

probs = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6)


class TestConstruction:
    def test_state_space_needs_two_states(self):
        with pytest.raises(ValueError):
            StateSpace([1.0])

    def test_state_space_sorted(self):
        with pytest.raises(ValueError):
            StateSpace([0.0, 2.0, 1.0])

    def test_ties_allowed(self):
        s = StateSpace([0.0, 1.0, 1.0])
        assert len(s) == 3 and not s.strictly_increasing

    @pytest.mark.parametrize("p", [[0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0]])
    def test_belief_rejects_bad_vectors(self, p):
        with pytest.raises(ValueError):
            Belief(p)

    def test_experiment_rows_must_be_stochastic(self):
        with pytest.raises(ValueError, match="rows"):
            Experiment([[0.5, 0.4], [0.5, 0.5]])

    def test_arrays_are_read_only(self):
        b = Belief([0.25, 0.75])
        with pytest.raises(ValueError):
            b.probs[0] = 1.0

    def test_relabel_must_be_monotone(self):
        s = StateSpace([0.0, 1.0, 2.0])
        assert np.allclose(s.relabel(lambda w: w ** 3).values, [0, 1, 8])
        with pytest.raises(ValueError):
            s.relabel(lambda w: -w)


class TestUpdating:
    def test_binary_symmetric_posterior(self):
        post = update(Belief([0.5, 0.5]), binary_symmetric(0.9), 1)
        np.testing.assert_allclose(post.probs, [0.1, 0.9], atol=1e-15)

    def test_uninformative_signal_leaves_prior(self):
        prior = Belief([0.2, 0.3, 0.5])
        assert np.allclose(update(prior, uninformative(3), 0).probs, prior.probs)

    def test_fully_informative_reveals_state(self):
        post = update(Belief([0.2, 0.3, 0.5]), fully_informative(3), 2)
        assert np.array_equal(post.probs, [0.0, 0.0, 1.0])

    def test_unreachable_signal(self):
        with pytest.raises(UnreachableSignalError):
            update(Belief([1.0, 0.0]), fully_informative(2), 1)

    def test_report_drops_zero_probability_signals(self):
        rep = posterior_report(Belief([1.0, 0.0, 0.0]), Experiment([[0, 1], [1, 0], [0, 1]]),
                               StateSpace([0, 1, 2]))
        assert rep.signals == (1,)
        assert rep.means.tolist() == [0.0]

    @settings(max_examples=60, deadline=None)
    @given(probs, st.integers(1, 5), st.integers(0, 10_000))
    def test_martingale(self, weights, K, seed):
        prior = Belief.normalized(weights)
        rng = np.random.default_rng(seed)
        exp = Experiment(rng.dirichlet(np.ones(K), size=len(weights)))
        states = StateSpace(np.arange(len(weights), dtype=float))
        rep = posterior_report(prior, exp, states)
        assert rep.marginals @ rep.means == pytest.approx(posterior_mean(prior, states), abs=1e-12)


class TestCrossMean:
    def test_own_expectation_is_prior_mean(self, backend):
        states = StateSpace([0.0, 1.0, 3.0])
        prior = Belief([0.2, 0.5, 0.3])
        v = expected_cross_posterior_mean(prior, prior, binary_like(), states)
        assert v == pytest.approx(posterior_mean(prior, states), abs=1e-14)

    def test_matches_direct_summation(self, backend):
        states = StateSpace([0.0, 1.0])
        a, b = Belief([0.7, 0.3]), Belief([0.3, 0.7])
        exp = binary_symmetric(0.9)
        direct = 0.0
        for s in range(2):
            p_a = marginal(a, exp)[s]
            direct += p_a * posterior_mean(update(b, exp, s), states)
        assert expected_cross_posterior_mean(a, b, exp, states) == pytest.approx(direct, abs=1e-15)

    def test_signal_ruled_out_by_other_prior(self, backend):
        with pytest.raises(UnreachableSignalError):
            expected_cross_posterior_mean(Belief([0.5, 0.5]), Belief([1.0, 0.0]),
                                          fully_informative(2), StateSpace([0, 1]))

    def test_relabeling(self, backend):
        states = StateSpace([0.0, 1.0, 2.0])
        a, b = Belief([0.5, 0.3, 0.2]), Belief([0.2, 0.3, 0.5])
        v = expected_cross_posterior_mean(a, b, binary_like(), states, h=np.exp)
        w = expected_cross_posterior_mean(a, b, binary_like(), states.relabel(np.exp))
        assert v == pytest.approx(w, rel=1e-14)


def binary_like():
    return Experiment([[0.8, 0.2], [0.5, 0.5], [0.1, 0.9]])


class TestOrders:
    def test_lr_implies_fosd_example(self):
        lo, hi = Belief([0.5, 0.3, 0.2]), Belief([0.2, 0.3, 0.5])
        assert is_lr_dominated(lo, hi) and is_fosd_dominated(lo, hi)
        assert not is_lr_dominated(hi, lo)

    def test_fosd_without_lr(self):
        lo, hi = Belief([0.4, 0.2, 0.4]), Belief([0.3, 0.4, 0.3])
        # neither dominates in FOSD, so the ordering with tail mass matters
        assert not is_fosd_dominated(lo, hi) and not is_fosd_dominated(hi, lo)
        lo, hi = Belief([0.5, 0.1, 0.4]), Belief([0.3, 0.3, 0.4])
        assert is_fosd_dominated(lo, hi) and not is_lr_dominated(lo, hi)

    def test_zeros_need_all_pairs(self):
        # adjacent cross-products pass but the (1, 3) pair fails
        lo, hi = Belief([0.0, 1.0, 0.0]), Belief([0.5, 0.0, 0.5])
        assert not is_lr_dominated(lo, hi)

    def test_tied_states_exempt(self):
        states = StateSpace([0.0, 1.0, 1.0])
        lo, hi = Belief([0.5, 0.1, 0.4]), Belief([0.2, 0.5, 0.3])
        # only the tied pair (2, 3) violates the cross-product condition
        assert is_lr_dominated(lo, hi, states)
        assert not is_lr_dominated(lo, hi)

    @settings(max_examples=80, deadline=None)
    @given(probs, st.lists(st.floats(0.0, 2.0), min_size=5, max_size=5))
    def test_lr_tilt_is_lr_and_fosd(self, weights, steps):
        a = Belief.normalized(weights)
        tau = np.concatenate([[0.0], np.cumsum(steps[:len(weights) - 1])])
        b = Belief.normalized(a.probs * np.exp(tau))
        assert is_lr_dominated(a, b) and is_fosd_dominated(a, b)


class TestMlrp:
    @pytest.mark.parametrize("exp,ok", [
        (binary_symmetric(0.8), True),
        (Experiment([[0.2, 0.8], [0.8, 0.2]]), False),
        (Experiment([[0, 1], [1, 0], [0, 1]]), False),
        (uninformative(4), True),
        (fully_informative(3), True),
    ])
    def test_examples(self, exp, ok):
        assert is_mlrp_experiment(exp) is ok
