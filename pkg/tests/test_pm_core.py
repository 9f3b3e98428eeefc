import numpy as np
import pytest

from scripts.errors import ConfigError, NotEnumerableError, SupportViolationError
from scripts.models.pm_core import (
    EnumerableLatentModel,
    VRecord,
    enumerate_measures,
    eval_weights,
    inflate,
    resolve_function,
    support_check,
)
from scripts.models.pm_kernels import build_model_kernels
from scripts.models.presets import PRESETS, load_model, model_from_config, random_latent_model
from scripts.chains.finite_mcmc import check_reversible


def single_state_model(eta=0.5):
    return EnumerableLatentModel(
        theta_labels=[0],
        prior=[1.0],
        q_u=[[1.0]],
        eta=[[eta]],
        m=2,
        z_support=[2.0, 4.0],
        zeta_table=[[[0.3, 0.7]]],
        z_probs=[[[0.5, 0.5]]],
    )


def broken_support_model():
    return EnumerableLatentModel(
        theta_labels=[0, 1],
        prior=[1.0, 1.0],
        q_u=[[1.0], [1.0]],
        eta=[[0.0], [0.5]],
        m=1,
        z_support=[0.0, 1.0],
        zeta_table=[[[0.2, 0.4]], [[0.3, 0.3]]],
        z_probs=[[[0.5, 0.5]], [[0.5, 0.5]]],
    )


class TestWeights:
    def test_eval_weights(self):
        model = single_state_model()
        triple = eval_weights(model, 0, 0, VRecord(z=(2, 4), zeta=(0.3, 0.7)), resolve_function("z"))
        assert triple.zeta_f == pytest.approx(3.4)
        assert triple.zetahat_f == pytest.approx(3.4)
        assert triple.xi_f == pytest.approx(6.8)

    def test_zero_zeta_gives_zero_zetahat(self):
        triple = eval_weights(single_state_model(), 0, 0, VRecord(z=(2, 4), zeta=(0.0, 0.0)), resolve_function("z"))
        assert triple.zetahat_f == 0.0

    def test_record_validation(self):
        with pytest.raises(ValueError):
            VRecord(z=(1.0,), zeta=(0.1, 0.2))

    def test_unknown_function(self):
        with pytest.raises(ConfigError):
            resolve_function("theta_squared")

    def test_indicator(self):
        fn = resolve_function("indicator:2")
        assert fn(2, 0.0) == 1.0 and fn(1, 0.0) == 0.0
        assert not fn.depends_on_z


class TestMeasures:
    def test_normalizations(self, coin):
        measures = enumerate_measures(coin, resolve_function("theta_z"))
        mu_bar = measures.mu_bar.probs.reshape(measures.w.shape)
        mu = measures.mu.probs.reshape(measures.m_f.shape)
        assert np.sum(mu_bar * measures.w) == pytest.approx(1.0, abs=1e-12)
        assert np.sum(mu * measures.m_f) == pytest.approx(measures.c_xi * measures.nu_f, abs=1e-12)
        assert np.allclose(measures.nu_theta, measures.pi_theta, atol=1e-12)
        assert abs(measures.checks["target_gap"]) <= 1e-10

    def test_exact_preset_has_unit_weight(self, coin_exact):
        measures = enumerate_measures(coin_exact, resolve_function("theta"))
        support = measures.mu_bar.probs.reshape(measures.w.shape) > 0
        assert measures.c_xi == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(measures.w[support], 1.0, atol=1e-12)

    def test_theta_only_function_factorizes(self, coin):
        theta = enumerate_measures(coin, resolve_function("theta"))
        labels = np.array(coin.theta_labels, dtype=float)
        assert np.allclose(theta.m_f, theta.m_one * labels[:, None], atol=1e-12)

    def test_generative_models_are_not_enumerated(self, coin):
        with pytest.raises(NotEnumerableError):
            enumerate_measures(coin.as_generative(), resolve_function("theta"))


class TestSupport:
    def test_violation_has_witness(self):
        check = support_check(broken_support_model())
        assert not check
        theta, u, record = check.witness
        assert theta == 0 and u == 0
        assert record.zeta_one > 0

    def test_enumeration_refuses_violations(self):
        with pytest.raises(SupportViolationError) as info:
            enumerate_measures(broken_support_model(), resolve_function("theta"))
        assert info.value.witness is not None

    def test_inflation_restores_support(self):
        assert support_check(inflate(broken_support_model(), 0.1)).ok

    def test_generative_check_samples(self):
        check = support_check(broken_support_model().as_generative(), sample_budget=20, seed=1)
        assert not check.ok
        assert check.checked >= 1


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_load(self, name):
        assert load_model(name).is_enumerable

    def test_config_round_trip(self, coin):
        again = model_from_config(coin.to_config())
        assert np.array_equal(again.zeta_table, coin.zeta_table)
        assert again.m == coin.m

    def test_invalid_config(self, coin):
        config = coin.to_config()
        config["qV"]["m"] = 0
        with pytest.raises(ConfigError):
            model_from_config(config)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_model(str(tmp_path / "absent.json"))


class TestKernels:
    def test_every_kernel_is_reversible(self, coin):
        kernels = build_model_kernels(coin, resolve_function("theta_z"))
        measures = kernels.measures
        assert check_reversible(kernels.base, measures.mu, 1e-10)
        assert check_reversible(kernels.da, measures.pi, 1e-10)
        assert check_reversible(kernels.da_screen, measures.pi, 1e-10)
        assert check_reversible(kernels.parent, measures.pi, 1e-10)
        assert check_reversible(kernels.pm.kernel, kernels.pm.pi, 1e-10)

    def test_random_models_enumerate(self, rng):
        model = random_latent_model(rng, n_theta=3, n_u=2, m=2, n_z=3)
        measures = enumerate_measures(model, resolve_function("theta_z"))
        assert measures.pi.n == 3 * 2 * 9
        assert support_check(model).ok
