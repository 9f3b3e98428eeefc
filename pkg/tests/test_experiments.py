import logging
import math

import numpy as np
import pytest

from scripts.chains.finite_mcmc import FiniteKernel
from scripts.experiments.compare import CLTReport, CLTRow, clt_study, compare_run
from scripts.experiments.toy import (
    CASES,
    PROPOSALS,
    RESOLVED_VARIANT,
    printed_is_better_rw,
    sweep_report,
    toy_instance,
)
from scripts.experiments.verify_suite import verify_suite
from scripts.models.pm_core import GenerativeLatentModel, VRecord


class TestToy:
    @pytest.mark.parametrize("case", CASES)
    @pytest.mark.parametrize("proposal", PROPOSALS)
    def test_every_cell_passes(self, case, proposal):
        report = sweep_report(case, proposal)
        assert report.passed, report.verdicts
        assert len(report.rows) == 10

    def test_sign_variant(self):
        report = sweep_report("is-better", "rw")
        assert report.matched_variant == RESOLVED_VARIANT
        assert all(row.printed_L < 0 for row in report.rows)

    def test_printed_form_is_negative(self):
        assert printed_is_better_rw(0.5) < 0

    def test_normalization(self):
        instance = toy_instance("is-better", 0.7, "uniform")
        assert instance.nu.expectation(instance.f) == pytest.approx(0.0, abs=1e-12)
        assert instance.nu.expectation(instance.f * instance.f) == pytest.approx(1.0, abs=1e-12)

    def test_mh_and_da_coincide_on_nu_support(self):
        assert toy_instance("da-better", 0.8, "rw").coincidence_gap() <= 1e-12

    @pytest.mark.parametrize("a", [0.49, 1.0])
    def test_a_out_of_range(self, a):
        with pytest.raises(ValueError):
            toy_instance("da-better", a, "rw")


class TestVerify:
    def test_small_run_passes(self):
        report = verify_suite(seed=0, instance_count=12, progress=False)
        assert report.passed, report.failures
        assert report.checks["peskun_da_upper"].passed == 12
        assert report.checks["jump_identity"].failed == 0
        assert any(name.startswith("model_") for name in report.checks)

    def test_report_is_serializable(self):
        document = verify_suite(seed=1, instance_count=2, progress=False).to_dict()
        assert document["instance_count"] == 2
        assert document["passed"]


class TestCompare:
    def test_unit_weight_model(self, coin_exact):
        report = compare_run(coin_exact, ["da", "is0"], n=400, seeds=[0, 1], f="theta")
        assert report.trivial_weight
        assert report.verdicts["is0_bounds"]
        frame = report.to_frame()
        assert set(frame["algorithm"]) == {"da", "is0"}

    def test_base_chain_needs_theta_function(self, coin):
        with pytest.raises(ValueError):
            compare_run(coin, ["base"], n=100, seeds=[0], f="theta_z")

    def test_unknown_algorithm(self, coin):
        with pytest.raises(ValueError):
            compare_run(coin, ["hmc"], n=100, seeds=[0], f="theta")

    def test_costs_per_base_step(self, coin):
        report = compare_run(coin, ["da", "pm-parent"], n=1000, seeds=[3], f="theta")
        assert report.algos["pm-parent"].cost("v_draws") == pytest.approx(1.0)
        assert report.algos["da"].cost("v_draws") < 1.0
        assert report.verdicts["da_cheaper_than_parent"]

    def test_da_accepts_no_more_than_parent(self, coin):
        report = compare_run(coin, ["da", "pm-parent"], n=5000, seeds=[0, 1, 2], f="theta")
        assert report.verdicts["da_acceptance_le_parent"]
        da, parent = report.algos["da"], report.algos["pm-parent"]
        assert da.acceptance_pooled_se > 0 and parent.acceptance_pooled_se > 0
        assert report.to_dict()["algorithms"][0]["acceptance_se"] == pytest.approx(da.acceptance_pooled_se)

    def test_support_violation_is_a_failed_verdict(self, caplog):
        model = GenerativeLatentModel(
            theta_labels=[0, 1],
            prior=[1.0, 1.0],
            q_u=[[0.5, 0.5], [0.5, 0.5]],
            eta=[[0.0, 0.5], [0.5, 0.5]],
            v_sampler=lambda theta, u, rng: VRecord(z=(1.0,), zeta=(0.2,)),
            name="leaky",
        )
        q = FiniteKernel(np.full((2, 2), 0.5), (0, 1))
        with caplog.at_level(logging.WARNING):
            report = compare_run(model, ["pm-parent"], n=200, seeds=[0], f="theta", q=q)
        assert not report.verdicts["support_condition"]
        assert not report.passed
        assert report.support["witness"] != repr(None)
        assert "support condition fails" in caplog.text

    def test_clt_row_band_is_reported_only(self):
        row = CLTRow("is0", replicates=201, n=1000, empirical_var=1.1, exact_asvar=1.0)
        assert row.band == pytest.approx(0.3)
        assert row.within_band and row.within_15pct and row.passed

    def test_clt_row_gates_on_fifteen_percent(self):
        row = CLTRow("is0", replicates=200, n=100_000, empirical_var=1.25, exact_asvar=1.0)
        assert row.within_band
        assert not row.within_15pct
        assert not row.passed
        assert not CLTReport("two-coin", "theta", [row]).passed

    def test_clt_row_gates_on_centering(self):
        row = CLTRow("is0", replicates=100, n=1000, empirical_var=1.0, exact_asvar=1.0, mean_error=0.5)
        assert row.within_15pct
        assert not row.centered and not row.passed

    def test_clt_needs_two_replicates(self, coin):
        with pytest.raises(ValueError):
            clt_study(coin, ["is0"], n=100, replicates=1)

    # n below 10^5 with 1000 replicates: a 15% miss is then 3.3 standard errors of the sample variance
    @pytest.mark.slow
    @pytest.mark.parametrize("algo", ["pm-parent", "da", "is0", "isj-single", "isj-avg", "base"])
    def test_clt_study(self, coin, algo):
        report = clt_study(coin, [algo], n=20_000, replicates=1000, seed=5)
        row = report.rows[0]
        assert math.isfinite(row.exact_asvar)
        assert row.within_15pct, row.to_dict()
        assert row.centered, row.to_dict()
        assert report.passed
