import math

import numpy as np
import pytest

from scripts.chains.finite_mcmc import exact_asvar
from scripts.models.pm_core import resolve_function
from scripts.models.pm_kernels import build_model_kernels
from scripts.processors.asvar import (
    AsvarEstimate,
    autocovariance,
    batch_means_asvar,
    default_batch_count,
    initial_sequence_asvar,
)
from scripts.processors.is_variance import (
    comparison_bounds,
    exact_estimator_asvar,
    is_asvar_exact,
    is_asvar_plugin,
    jump_identity_asvar,
)
from scripts.samplers.pm_samplers import run_is

THETA = resolve_function("theta")
THETA_Z = resolve_function("theta_z")


class TestSeriesEstimators:
    def test_constant_series(self):
        assert batch_means_asvar(np.full(1000, 2.5)).value == 0.0
        assert initial_sequence_asvar(np.full(1000, 2.5)).value == 0.0

    def test_short_series(self):
        with pytest.raises(ValueError):
            batch_means_asvar([1.0, 2.0, 3.0], batch_count=2)

    def test_non_finite_values(self):
        with pytest.raises(ValueError):
            batch_means_asvar([1.0, math.nan] * 10)

    def test_default_batch_count(self):
        assert default_batch_count(1000) == 10
        assert default_batch_count(3) == 2

    def test_iid_signs(self, rng):
        series = rng.choice([-1.0, 1.0], size=200_000)
        assert batch_means_asvar(series).value == pytest.approx(1.0, abs=0.6)
        assert initial_sequence_asvar(series).value == pytest.approx(1.0, abs=0.1)

    def test_ar1(self, rng):
        rho, n = 0.5, 200_000
        noise = rng.standard_normal(n)
        series = np.empty(n)
        series[0] = noise[0]
        for k in range(1, n):
            series[k] = rho * series[k - 1] + noise[k]
        # (1 + rho) / (1 - rho) * var = 3 * 4/3
        assert initial_sequence_asvar(series).value == pytest.approx(4.0, rel=0.1)

    def test_autocovariance_lag_zero(self, rng):
        series = rng.standard_normal(500)
        assert autocovariance(series)[0] == pytest.approx(np.var(series))

    def test_negative_estimate_rejected(self):
        with pytest.raises(ValueError):
            AsvarEstimate(value=-0.5, method="test")


class TestExactIS:
    def test_isj_avg_matches_is0_per_base_step(self, coin):
        is0 = is_asvar_exact(coin, None, THETA_Z, "is0")
        avg = is_asvar_exact(coin, None, THETA_Z, "isj-avg")
        assert avg.components["per_base_step"] == pytest.approx(is0.value, rel=1e-10)
        assert avg.components["D_tilde"] == pytest.approx(0.0, abs=1e-12)

    def test_isj_single_pays_for_holding(self, coin):
        single = is_asvar_exact(coin, None, THETA_Z, "isj-single")
        assert single.components["D_tilde"] >= 0.0
        assert single.components["per_base_step"] >= single.components["is0_value"] - 1e-12

    def test_product_route_agrees(self, coin):
        for mode in ("is0", "isj-single", "isj-avg"):
            estimate = is_asvar_exact(coin, None, THETA_Z, mode)
            assert estimate.components["product_route"] == pytest.approx(estimate.value, rel=1e-9)

    def test_unit_weight_reduces_to_base_chain(self, coin_exact):
        kernels = build_model_kernels(coin_exact, THETA)
        is0 = is_asvar_exact(coin_exact, kernels.base, THETA, "is0", kernels.measures)
        snis = exact_estimator_asvar(coin_exact, None, THETA, "base", kernels)
        assert is0.value == pytest.approx(snis, rel=1e-10)

    def test_jump_identity(self, coin):
        kernels = build_model_kernels(coin, THETA_Z)
        f = kernels.measures.m_fbar.ravel()
        direct = exact_asvar(kernels.base, kernels.measures.mu, f)
        assert jump_identity_asvar(kernels.base, kernels.measures.mu, f) == pytest.approx(direct, rel=1e-9)

    def test_unknown_mode(self, coin):
        with pytest.raises(ValueError):
            is_asvar_exact(coin, None, THETA_Z, "isj-double")


class TestComparison:
    @pytest.mark.parametrize("mode", ["is0", "isj-single", "isj-avg"])
    def test_bounds_hold_on_two_coin(self, coin, mode):
        report = comparison_bounds(coin, None, THETA_Z, mode)
        assert report.passed, report.verdicts
        assert report.verdicts["pm_equals_parent"]
        assert set(report.targets) == {"da", "parent", "pm"}

    def test_estimator_values_are_finite(self, coin):
        kernels = build_model_kernels(coin, THETA)
        for algo in ("base", "pm-parent", "da", "pm", "is0", "isj-single", "isj-avg"):
            value = exact_estimator_asvar(coin, None, THETA, algo, kernels)
            assert math.isfinite(value) and value >= 0.0

    def test_snis_needs_theta_function(self, coin):
        with pytest.raises(ValueError):
            exact_estimator_asvar(coin, None, THETA_Z, "base")


class TestPlugin:
    def test_direct_estimate(self, coin):
        path = run_is(coin, None, 5000, 8, "is0", (THETA_Z,))
        estimate = is_asvar_plugin(path, coin, THETA_Z)
        assert estimate.method == "plugin-direct"
        assert estimate.components is None
        assert estimate.value > 0

    def test_component_split(self, coin):
        path = run_is(coin, None, 3000, 8, "isj-single", (THETA_Z,))
        estimate = is_asvar_plugin(path, coin, THETA_Z, replicates=4, seed=1)
        assert estimate.components["mu_a"] == pytest.approx(len(path) / 3000)
        assert estimate.components["per_base_step"] == pytest.approx(estimate.value / estimate.components["mu_a"])

    def test_single_replicate_rejected(self, coin):
        path = run_is(coin, None, 500, 8, "is0", (THETA_Z,))
        with pytest.raises(ValueError):
            is_asvar_plugin(path, coin, THETA_Z, replicates=1)

    @pytest.mark.slow
    def test_plugin_tracks_exact_value(self, coin):
        exact = is_asvar_exact(coin, None, THETA_Z, "is0").value
        path = run_is(coin, None, 200_000, 17, "is0", (THETA_Z,))
        estimate = is_asvar_plugin(path, coin, THETA_Z, replicates=4, seed=2, batch_count=200)
        assert estimate.value == pytest.approx(exact, rel=0.35)
