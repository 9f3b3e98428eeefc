import numpy as np
import pandas as pd
import pytest

from scripts.chains.finite_mcmc import FiniteKernel
from scripts.errors import DimensionMismatchError, ZeroNormalizerError
from scripts.models.pm_core import enumerate_measures, resolve_function
from scripts.samplers.base_sampler import ChainPath, SamplerSpec
from scripts.samplers.estimators import estimate
from scripts.samplers.pm_samplers import compress, run_da, run_is, simulate_batch

THETA = resolve_function("theta")
ONE = resolve_function("one")
THETA_Z = resolve_function("theta_z")


def hand_path():
    return ChainPath(
        theta=np.array([0, 1]),
        u=np.array([0, 0]),
        n_hold=np.array([1, 2]),
        accepted=np.array([True, True]),
        xi1=np.array([1.0, 1.0]),
        xif={"theta": np.array([2.0, 1.0])},
        meta={"algorithm": "isj-single", "theta_labels": [0, 1]},
    )


class TestDeterminism:
    @pytest.mark.parametrize("algo", ["base", "pm-parent", "da", "is0", "isj-single", "isj-avg"])
    def test_same_seed_same_path(self, coin, algo):
        first = simulate_batch(algo, coin, None, 300, 7, 1, (THETA,))[0]
        second = simulate_batch(algo, coin, None, 300, 7, 1, (THETA,))[0]
        assert np.array_equal(first.theta, second.theta)
        assert np.array_equal(first.n_hold, second.n_hold)

    def test_different_seeds_differ(self, coin):
        a = run_da(coin, None, 500, 1, (THETA,))
        b = run_da(coin, None, 500, 2, (THETA,))
        assert not np.array_equal(a.theta, b.theta)

    def test_replicates_are_distinct(self, coin):
        paths = simulate_batch("base", coin, None, 200, 3, 2)
        assert not np.array_equal(paths[0].theta, paths[1].theta)

    def test_is_modes_share_the_base_path(self, coin):
        is0 = run_is(coin, None, 400, 5, "is0", (THETA,))
        isj = run_is(coin, None, 400, 5, "isj-avg", (THETA,))
        runs = compress(is0.theta, is0.u)
        assert np.array_equal(isj.theta, is0.theta[runs["starts"]])


class TestPaths:
    @pytest.mark.parametrize("mode", ["isj-single", "isj-avg"])
    def test_holding_counts_sum_to_n(self, coin, mode):
        path = run_is(coin, None, 1000, 11, mode, (THETA,))
        assert path.base_steps == 1000
        changes = (path.theta[1:] != path.theta[:-1]) | (path.u[1:] != path.u[:-1])
        assert changes.all()

    def test_isj_avg_draws_one_v_per_base_step(self, coin):
        path = run_is(coin, None, 800, 2, "isj-avg", (THETA,))
        assert path.meta["v_draws"] == 800
        single = run_is(coin, None, 800, 2, "isj-single", (THETA,))
        assert single.meta["v_draws"] == len(single)

    def test_da_skips_v_on_base_holds(self, coin):
        path = run_da(coin, None, 2000, 4, (THETA,))
        assert path.meta["cost"]["v_draws"] < 2000
        assert path.meta["cost"]["eta_evals"] == 2000

    def test_compress(self):
        runs = compress(np.array([0, 0, 1, 1, 1, 0]), np.array([0, 0, 0, 0, 1, 1]))
        assert runs["starts"].tolist() == [0, 2, 4]
        assert runs["hold"].tolist() == [2, 2, 2]

    def test_burn_in_drops_a_prefix(self, coin):
        spec = SamplerSpec(FiniteKernel(coin.proposal_rows(), coin.theta_labels), (THETA,), burn_in=50)
        path = simulate_batch("pm-parent", coin, spec, 100, 0)[0]
        assert len(path) == 100
        assert path.meta["burn_in"] == 50

    def test_proposal_labels_must_match(self, coin):
        with pytest.raises(DimensionMismatchError):
            simulate_batch("base", coin, FiniteKernel(np.eye(2)), 10, 0)

    def test_unknown_algorithm(self, coin):
        with pytest.raises(ValueError):
            simulate_batch("gibbs", coin, None, 10, 0)

    def test_frame_round_trip_keeps_columns(self, coin):
        path = run_is(coin, None, 200, 9, "isj-single", (THETA,))
        frame = path.to_frame("theta")
        assert list(frame.columns) == ["k", "theta", "u", "N", "accepted", "xi1", "xif", "zetahat_f"]
        again = ChainPath.from_frame(frame, "theta", coin.theta_labels, coin.u_labels, {"algorithm": "isj-single"})
        assert np.array_equal(again.n_hold, path.n_hold)
        assert np.allclose(again.xif["theta"], path.xif["theta"])

    def test_frame_missing_columns(self):
        with pytest.raises(DimensionMismatchError):
            ChainPath.from_frame(pd.DataFrame({"k": [0]}))


class TestEstimators:
    def test_hand_is_estimate(self):
        assert estimate(hand_path(), "IS", "theta").value == pytest.approx(4 / 3)

    def test_unit_function_is_exactly_one(self, coin):
        path = run_is(coin, None, 500, 6, "isj-single", (ONE,))
        assert estimate(path, "IS", ONE).value == pytest.approx(1.0, abs=1e-12)

    def test_zero_normalizer(self):
        path = hand_path()
        path.xi1 = np.zeros(2)
        with pytest.raises(ZeroNormalizerError):
            estimate(path, "IS", "theta")

    def test_snis_hand_value(self):
        path = hand_path()
        result = estimate(path, "SNIS", "theta", weight=[1.0, 3.0])
        # (1*1*0 + 2*3*1) / (1*1 + 2*3)
        assert result.value == pytest.approx(6 / 7)

    def test_snis_rejects_latent_functions(self, coin):
        path = simulate_batch("base", coin, None, 50, 0)[0]
        with pytest.raises(ValueError):
            estimate(path, "SNIS", THETA_Z, model=coin)

    def test_pm_needs_zetahat(self, coin):
        path = simulate_batch("base", coin, None, 50, 0)[0]
        with pytest.raises(ValueError):
            estimate(path, "PM", THETA)


@pytest.mark.slow
class TestConsistency:
    @pytest.mark.parametrize("algo, kind", [
        ("is0", "IS"),
        ("isj-single", "IS"),
        ("isj-avg", "IS"),
        ("da", "PM"),
        ("pm-parent", "PM"),
    ])
    def test_estimate_near_truth(self, coin, algo, kind):
        truth = enumerate_measures(coin, THETA_Z).nu_f
        path = simulate_batch(algo, coin, None, 40_000, 123, 1, (THETA_Z,))[0]
        result = estimate(path, kind, THETA_Z)
        assert abs(result.value - truth) <= 5 * result.se

    def test_snis_near_truth(self, coin):
        truth = enumerate_measures(coin, THETA).nu_f
        path = simulate_batch("base", coin, None, 40_000, 321)[0]
        result = estimate(path, "SNIS", THETA, model=coin)
        assert abs(result.value - truth) <= 5 * result.se
