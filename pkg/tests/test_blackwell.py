import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivpkit.beliefs import Experiment, is_mlrp_experiment
from ivpkit.blackwell import (
    GarblingKernel,
    LPNonConvergenceError,
    apply_garbling,
    binary_symmetric,
    find_garbling,
    fully_informative,
    interval_kernel,
    is_more_informative,
    order_signals_binary,
    pool_adjacent_signals,
    pool_pair_reveal,
    random_garbling,
    random_mlrp_experiment,
    threshold_reveal,
    uninformative,
)


class TestKernels:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            GarblingKernel([[0.5, 0.4]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_garbling(binary_symmetric(0.8), GarblingKernel(np.eye(3)))

    def test_identity(self):
        e = binary_symmetric(0.8)
        assert np.array_equal(apply_garbling(e, GarblingKernel(np.eye(2))).likelihood, e.likelihood)

    def test_collapse_to_one_signal(self):
        e = random_mlrp_experiment(0, 3, 4)
        out = apply_garbling(e, GarblingKernel(np.ones((4, 1))))
        assert out.likelihood.shape == (3, 1)

    def test_flip_kernel(self):
        flip = GarblingKernel([[0.75, 0.25], [0.25, 0.75]])
        np.testing.assert_allclose(apply_garbling(binary_symmetric(0.9), flip).likelihood,
                                   binary_symmetric(0.7).likelihood, atol=1e-15)


class TestFindGarbling:
    def test_recovers_flip(self, backend):
        q = find_garbling(binary_symmetric(0.9), binary_symmetric(0.7))
        assert q is not None
        assert q.matrix[0, 1] == pytest.approx(0.25, abs=1e-8)
        assert q.matrix[1, 0] == pytest.approx(0.25, abs=1e-8)

    def test_reverse_infeasible(self, backend):
        assert find_garbling(binary_symmetric(0.7), binary_symmetric(0.9)) is None

    def test_full_information_kernel_is_target(self, backend):
        target = random_mlrp_experiment(3, 4, 5)
        q = find_garbling(fully_informative(4), target)
        np.testing.assert_allclose(q.matrix, target.likelihood, atol=1e-9)

    def test_state_count_mismatch(self):
        with pytest.raises(ValueError):
            find_garbling(uninformative(2), uninformative(3))

    def test_iteration_limit_is_distinct(self):
        with pytest.raises(LPNonConvergenceError):
            find_garbling(random_mlrp_experiment(0, 4, 6), uninformative(4), max_iter=1)

    @pytest.mark.parametrize("seed", range(40))
    def test_round_trip(self, backend, seed):
        rng = np.random.default_rng(seed)
        L, K, K2 = rng.integers(2, 7), rng.integers(1, 9), rng.integers(1, 9)
        more = random_mlrp_experiment(rng, L, K)
        less = apply_garbling(more, random_garbling(rng, K, K2, sparsity=0.3))
        q = find_garbling(more, less)
        assert q is not None
        np.testing.assert_allclose(apply_garbling(more, q).likelihood, less.likelihood, atol=1e-8)

    @pytest.mark.parametrize("seed", range(10))
    def test_transitive(self, seed):
        rng = np.random.default_rng(100 + seed)
        e = random_mlrp_experiment(rng, 3, 5)
        mid = apply_garbling(e, random_garbling(rng, 5, 4))
        low = apply_garbling(mid, random_garbling(rng, 4, 3))
        assert is_more_informative(e, mid) and is_more_informative(mid, low)
        assert is_more_informative(e, low)

    def test_reflexive(self):
        e = random_mlrp_experiment(7, 4, 4)
        assert is_more_informative(e, e)


class TestPooling:
    def test_single_blocks_are_identity(self):
        assert np.array_equal(interval_kernel(3, [1, 2]).matrix, np.eye(3))

    def test_one_block_is_uninformative(self):
        e = pool_adjacent_signals(random_mlrp_experiment(1, 3, 4), [])
        assert e.likelihood.shape == (3, 1)

    def test_three_signals_pool_last_two(self):
        e = Experiment([[0.6, 0.3, 0.1], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]])
        pooled = pool_adjacent_signals(e, [1])
        assert pooled.likelihood.shape == (3, 2)
        np.testing.assert_allclose(pooled.likelihood.sum(axis=1), 1.0)
        assert is_mlrp_experiment(pooled)

    @pytest.mark.parametrize("cuts", [[2, 1], [0], [4]])
    def test_bad_cut_points(self, cuts):
        with pytest.raises(ValueError):
            interval_kernel(4, cuts)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 5), st.integers(2, 7), st.data())
    def test_pooling_keeps_mlrp_and_garbling(self, seed, L, K, data):
        e = random_mlrp_experiment(seed, L, K)
        cuts = sorted(data.draw(st.sets(st.integers(1, K - 1))))
        pooled = pool_adjacent_signals(e, cuts)
        assert is_mlrp_experiment(pooled)
        assert find_garbling(e, pooled) is not None


class TestConstructors:
    def test_threshold_reveal(self):
        assert threshold_reveal(3, 2).likelihood.tolist() == [[1, 0], [0, 1], [0, 1]]

    def test_pool_pair_reveal(self):
        assert pool_pair_reveal(3, 2).likelihood.tolist() == [[1, 0], [0, 1], [0, 1]]
        assert pool_pair_reveal(4, 1).likelihood.tolist() == [[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]

    @pytest.mark.parametrize("L", [2, 3, 5])
    def test_reveal_constructors_are_mlrp(self, L):
        for k in range(1, L + 1):
            assert is_mlrp_experiment(threshold_reveal(L, k))
        for l in range(1, L):
            assert is_mlrp_experiment(pool_pair_reveal(L, l))

    @pytest.mark.parametrize("call", [
        lambda: threshold_reveal(3, 0), lambda: threshold_reveal(3, 4),
        lambda: pool_pair_reveal(3, 3), lambda: binary_symmetric(0.4),
    ])
    def test_out_of_range(self, call):
        with pytest.raises(ValueError):
            call()

    def test_half_accuracy_is_uninformative(self):
        e = binary_symmetric(0.5)
        assert is_more_informative(uninformative(2), e) and is_more_informative(e, uninformative(2))

    def test_generator(self):
        assert random_mlrp_experiment(5, 3, 1).likelihood.tolist() == [[1.0]] * 3
        a, b = random_mlrp_experiment(9, 4, 5), random_mlrp_experiment(9, 4, 5)
        assert np.array_equal(a.likelihood, b.likelihood)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2 ** 32), st.integers(2, 6), st.integers(1, 8))
    def test_generator_is_mlrp(self, seed, L, K):
        assert is_mlrp_experiment(random_mlrp_experiment(seed, L, K))

    def test_order_signals_binary(self):
        e = Experiment([[0.2, 0.5, 0.3, 0.0], [0.6, 0.1, 0.3, 0.0]])
        out = order_signals_binary(e)
        assert out.likelihood.tolist() == [[0.5, 0.3, 0.2], [0.1, 0.3, 0.6]]
        assert is_mlrp_experiment(out)
