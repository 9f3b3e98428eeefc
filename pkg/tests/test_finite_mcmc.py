import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scripts.chains.finite_mcmc import (
    FiniteDist,
    FiniteKernel,
    MarginalSplit,
    RealFunction,
    augment,
    build_da,
    build_mh,
    check_reversible,
    dirichlet_form,
    exact_asvar,
    jump_transform,
    peskun_check,
    poisson_asvar,
    q_average,
    random_reversible_instance,
    spectral_info,
    stationary_dist,
    variational_asvar,
)
from scripts.chains.serialize import FINITE_OBJECT_SCHEMA, from_document, to_document, validation_errors
from scripts.errors import (
    AbsorbingStateError,
    AbsoluteContinuityError,
    DimensionMismatchError,
    NotReversibleError,
    NotStochasticError,
    ReducibleKernelError,
)
from scripts.experiments.toy import sweep_row, toy_instance


class TestConstruction:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(NotStochasticError):
            FiniteKernel.from_rows([[0.5, 0.4], [0.2, 0.8]])

    def test_kernel_must_be_square(self):
        with pytest.raises(DimensionMismatchError):
            FiniteKernel(np.ones((2, 3)) / 3)

    def test_tiny_negative_entries_are_clipped(self):
        K = FiniteKernel.from_rows([[1.0 + 1e-15, -1e-15], [0.5, 0.5]])
        assert K.rows[0, 1] == 0.0

    def test_distribution_from_weights(self):
        mu = FiniteDist.from_weights([1.0, 3.0], labels=("a", "b"))
        assert mu.probs.tolist() == [0.25, 0.75]
        assert mu.index("b") == 1

    def test_function_arithmetic(self):
        f = RealFunction(np.array([1.0, 2.0]))
        g = (f * 2.0 + 1.0) - f
        assert g.values.tolist() == [2.0, 3.0]


class TestStationary:
    def test_two_state(self, two_state):
        K, mu = two_state
        assert np.allclose(stationary_dist(K).probs, mu.probs, atol=1e-12)

    def test_transient_states_get_zero_mass(self):
        K = FiniteKernel.from_rows([[0.5, 0.5, 0.0], [0.0, 0.3, 0.7], [0.0, 0.6, 0.4]])
        mu = stationary_dist(K)
        assert mu.probs[0] == 0.0
        assert np.allclose(mu.probs @ K.rows, mu.probs, atol=1e-10)

    def test_two_closed_classes(self):
        with pytest.raises(ReducibleKernelError):
            stationary_dist(FiniteKernel(np.eye(2)))


class TestReversibility:
    def test_two_state_is_reversible(self, two_state):
        assert check_reversible(*two_state)

    def test_cyclic_shift_is_not(self):
        K = FiniteKernel.from_rows([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
        mu = FiniteDist.uniform((0, 1, 2))
        assert not check_reversible(K, mu)
        with pytest.raises(NotReversibleError):
            exact_asvar(K, mu, [1.0, 0.0, 0.0])

    def test_dirichlet_form(self, two_state):
        assert dirichlet_form(*two_state, [0.0, 1.0]) == pytest.approx(2 / 15, abs=1e-12)


class TestExactAsvar:
    def test_two_state_value(self, two_state):
        K, mu = two_state
        assert exact_asvar(K, mu, [0.0, 1.0], cross_check=True) == pytest.approx(14 / 27, abs=1e-12)

    def test_independence_kernel_gives_variance(self):
        mu = FiniteDist(np.array([0.2, 0.3, 0.5]))
        f = np.array([1.0, -2.0, 4.0])
        assert exact_asvar(FiniteKernel.independence(mu), mu, f) == pytest.approx(mu.variance(f), abs=1e-12)

    def test_constant_function(self, two_state):
        assert exact_asvar(*two_state, [3.0, 3.0]) == pytest.approx(0.0, abs=1e-12)

    def test_unit_eigenvalue_is_infinite(self):
        mu = FiniteDist.uniform((0, 1))
        assert math.isinf(exact_asvar(FiniteKernel(np.eye(2)), mu, [1.0, -1.0]))

    def test_periodic_chain_cancels(self):
        swap = FiniteKernel.from_rows([[0, 1], [1, 0]])
        mu = FiniteDist.uniform((0, 1))
        assert exact_asvar(swap, mu, [1.0, -1.0]) == pytest.approx(0.0, abs=1e-12)

    def test_subprobability_is_finite_on_periodic_chain(self):
        swap = FiniteKernel.from_rows([[0, 1], [1, 0]])
        mu = FiniteDist.uniform((0, 1))
        # eigenvalue -0.9 on (1, -1): (1 - 0.9) / (1 + 0.9)
        assert exact_asvar(swap, mu, [1.0, -1.0], lam=0.9) == pytest.approx(0.1 / 1.9, abs=1e-12)

    def test_lambda_continuity(self, two_state):
        K, mu = two_state
        near = exact_asvar(K, mu, [0.0, 1.0], lam=1 - 1e-9)
        assert near == pytest.approx(14 / 27, abs=1e-6)

    @pytest.mark.parametrize("lam", [0.3, 0.9])
    def test_variational_route(self, two_state, lam):
        K, mu = two_state
        assert variational_asvar(K, mu, [0.0, 1.0], lam) == pytest.approx(exact_asvar(K, mu, [0.0, 1.0], lam=lam), abs=1e-8)

    def test_lambda_out_of_range(self, two_state):
        with pytest.raises(ValueError):
            exact_asvar(*two_state, [0.0, 1.0], lam=0.0)

    @given(seed=st.integers(0, 2 ** 31 - 1), n=st.integers(2, 7))
    def test_spectral_and_poisson_agree(self, seed, n):
        rng = np.random.default_rng(seed)
        q, mu, _ = random_reversible_instance(rng, n)
        K = build_mh(q, mu)
        f = rng.standard_normal(n)
        spectral = exact_asvar(K, mu, f)
        assert poisson_asvar(K, mu, f) == pytest.approx(spectral, rel=1e-9, abs=1e-9)


class TestKernelBuilders:
    def test_mh_is_reversible(self, rng):
        q, mu, nu = random_reversible_instance(rng, 5)
        assert check_reversible(build_mh(q, nu), nu)

    def test_da_with_constant_weight_is_identity(self, two_state):
        K, _ = two_state
        assert np.allclose(build_da(K, [2.0, 2.0]).rows, K.rows)

    def test_da_targets_the_reweighted_measure(self, rng):
        q, mu, nu = random_reversible_instance(rng, 6)
        K = build_mh(q, mu)
        L = build_da(K, nu.probs / mu.probs)
        assert check_reversible(L, nu)

    def test_da_leaves_zero_weight_states(self):
        K = FiniteKernel.from_rows([[0.5, 0.5], [0.5, 0.5]])
        L = build_da(K, [0.0, 1.0])
        assert L.rows[0, 1] == 0.5
        assert L.rows[1, 0] == 0.0


class TestJumpChain:
    def test_two_state(self, two_state):
        jump, mu_jump, alpha = jump_transform(*two_state)
        assert np.allclose(jump.rows, [[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(alpha.values, [0.4, 0.2])
        assert np.allclose(mu_jump.probs, [0.5, 0.5])

    def test_absorbing_state(self):
        K = FiniteKernel.from_rows([[1.0, 0.0], [0.5, 0.5]])
        with pytest.raises(AbsorbingStateError):
            jump_transform(K, FiniteDist(np.array([1.0, 0.0])))


class TestSpectral:
    def test_two_state(self, two_state):
        info = spectral_info(*two_state)
        assert np.allclose(info.eigenvalues, [1.0, 0.4])
        assert info.positive
        assert info.left_gap == pytest.approx(1.4)

    def test_swap_is_negative(self):
        info = spectral_info(FiniteKernel.from_rows([[0, 1], [1, 0]]), FiniteDist.uniform((0, 1)))
        assert info.negativity_indicator == 1
        assert not info.aperiodic


class TestAugmentation:
    def test_power_identity(self, rng):
        q, mu_dot, _ = random_reversible_instance(rng, 3)
        K_dot = build_mh(q, mu_dot)
        Q = np.array([[0.2, 0.8], [0.5, 0.5], [0.9, 0.1]])
        K_bar, mu_bar = augment(K_dot, Q, mu_dot)
        h = rng.standard_normal(6)
        for power in range(1, 4):
            lhs = K_bar.apply(h, power).values.reshape(3, 2)
            rhs = K_dot.apply(q_average(Q, h), power).values
            assert np.allclose(lhs, rhs[:, None], atol=1e-12)
        assert check_reversible(K_bar, mu_bar)
        assert mu_bar.labels[1] == (0, 1)

    def test_rejects_non_reversible_kernel(self):
        # doubly stochastic cycle: uniform is stationary, detailed balance fails
        cycle = FiniteKernel(np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]))
        uniform = FiniteDist(np.full(3, 1.0 / 3.0))
        with pytest.raises(NotReversibleError):
            augment(cycle, np.full((3, 2), 0.5), uniform)


class TestPeskun:
    def test_da_better_toy_bound_is_tight(self):
        instance = toy_instance("da-better", 0.5, "rw")
        row = sweep_row(instance)
        assert row.total_lhs == pytest.approx(4.0, abs=1e-12)
        assert row.total_rhs == pytest.approx(4.0, abs=1e-12)

    def test_random_pair_passes(self, rng):
        q, mu, nu = random_reversible_instance(rng, 5)
        report = peskun_check(build_mh(q, mu), build_mh(q, nu), mu, nu, rng.standard_normal(5), seed=3)
        assert report.passed
        assert report.margins()["upper"] >= -1e-9

    def test_marginal_split_uses_conditional_weight(self, rng):
        q, mu_dot, _ = random_reversible_instance(rng, 3)
        K_bar, mu_bar = augment(build_mh(q, mu_dot), np.full((3, 2), 0.5), mu_dot)
        w = rng.uniform(0.5, 2.0, size=6)
        nu_bar = FiniteDist.from_weights(w * mu_bar.probs, mu_bar.labels)
        L = build_da(K_bar, nu_bar.probs / mu_bar.probs)
        report = peskun_check(K_bar, L, mu_bar, nu_bar, rng.standard_normal(6), marginal_split=MarginalSplit(np.repeat(np.arange(3), 2)))
        w_star = MarginalSplit(np.repeat(np.arange(3), 2)).conditional_mean(nu_bar.probs / mu_bar.probs, mu_bar.probs)
        assert report.constants["c_upper"] == pytest.approx(w_star.max())
        assert report.verdicts["augmented"]

    def test_absolute_continuity(self, two_state):
        K, _ = two_state
        mu = FiniteDist(np.array([1.0, 0.0]))
        nu = FiniteDist(np.array([0.5, 0.5]))
        lazy = FiniteKernel(np.eye(2))
        with pytest.raises(AbsoluteContinuityError):
            peskun_check(lazy, lazy, mu, nu, [1.0, 0.0])


class TestSerialize:
    def test_kernel_document(self, two_state):
        K, _ = two_state
        document = to_document(K)
        assert validation_errors(document, FINITE_OBJECT_SCHEMA) == []
        assert np.array_equal(from_document(document).rows, K.rows)

    def test_rejects_unknown_kind(self):
        errors = validation_errors({"kind": "matrix", "labels": [0], "rows": [[1.0]]}, FINITE_OBJECT_SCHEMA)
        assert errors
