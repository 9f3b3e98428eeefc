"""
Randomized checker for the Peskun-type orderings and the structural identities
they rest on.

Every instance draws a reversible pair (K, L) on at most MAX_STATES states,
an augmentation of K and, every MODEL_CASE_EVERY instances, a random
enumerable latent model whose IS variance is compared with DA, the PM parent
and the PM kernel. Failures are report entries, never exceptions.

Usage:
    from scripts.experiments.verify_suite import verify_suite

    report = verify_suite(seed=0, instance_count=1000)
    report.passed
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from tqdm import tqdm

from scripts.chains.finite_mcmc import (
    VERDICT_TOL,
    FiniteDist,
    MarginalSplit,
    augment,
    build_da,
    build_mh,
    check_reversible,
    exact_asvar,
    jump_transform,
    peskun_check,
    q_average,
    random_reversible_instance,
    spectral_info,
)
from scripts.errors import AsvarLabError
from scripts.models.pm_core import resolve_function
from scripts.models.pm_kernels import build_model_kernels
from scripts.models.presets import random_latent_model
from scripts.processors.is_variance import comparison_bounds, jump_identity_asvar

logger = logging.getLogger(__name__)

MAX_STATES = 8
MAX_AUX = 3
IDENTITY_POWER = 5
IDENTITY_TOL = 1e-12
MODEL_CASE_EVERY = 10
MODEL_MODES = ("is0", "isj-single", "isj-avg")


@dataclass
class CheckTally:
    passed: int = 0
    failed: int = 0
    worst_margin: float = math.inf

    def record(self, ok: bool, margin: float = math.inf) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        if math.isfinite(margin):
            self.worst_margin = min(self.worst_margin, margin)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "failed": self.failed,
            "worst_margin": self.worst_margin if math.isfinite(self.worst_margin) else None,
        }


@dataclass
class VerifyReport:
    seed: int
    instance_count: int
    checks: Dict[str, CheckTally] = field(default_factory=dict)
    informational: Dict[str, CheckTally] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(tally.failed == 0 for tally in self.checks.values())

    def tally(self, name: str, informational: bool = False) -> CheckTally:
        bucket = self.informational if informational else self.checks
        return bucket.setdefault(name, CheckTally())

    def check(self, name: str, ok: bool, margin: float = math.inf, instance: int = -1, **detail: Any) -> None:
        self.tally(name).record(bool(ok), margin)
        if not ok:
            self.failures.append({"check": name, "instance": instance, "margin": margin, **detail})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "instance_count": self.instance_count,
            "passed": self.passed,
            "checks": {name: tally.to_dict() for name, tally in self.checks.items()},
            "informational": {name: tally.to_dict() for name, tally in self.informational.items()},
            "failures": self.failures,
        }


def _pair_checks(report: VerifyReport, index: int, rng: np.random.Generator) -> None:
    n = int(rng.integers(2, MAX_STATES + 1))
    q, mu, nu = random_reversible_instance(rng, n)
    K = build_mh(q, mu)
    w = nu.probs / mu.probs
    phi = rng.standard_normal(n)
    for name, L in (("mh", build_mh(q, nu)), ("da", build_da(K, w))):
        ordering = peskun_check(K, L, mu, nu, phi, seed=int(rng.integers(2 ** 31)))
        margins = ordering.margins()
        report.check(f"peskun_{name}_upper", ordering.verdicts["upper"], margins["upper"], index)
        report.check(f"peskun_{name}_lower", ordering.verdicts["lower"], margins["lower"], index)
        report.check(f"dirichlet_{name}", ordering.verdicts["dirichlet_hypothesis"], instance=index)

    f = rng.standard_normal(n)
    jump, mu_jump, _ = jump_transform(K, mu)
    invariance = float(np.max(np.abs(mu_jump.probs @ jump.rows - mu_jump.probs)))
    report.check("jump_invariance", invariance <= IDENTITY_TOL, IDENTITY_TOL - invariance, index)
    direct = exact_asvar(K, mu, f)
    via_jump = jump_identity_asvar(K, mu, f)
    gap = abs(direct - via_jump)
    report.check("jump_identity", gap <= VERDICT_TOL * max(1.0, direct), VERDICT_TOL - gap, index)


def _augmented_checks(report: VerifyReport, index: int, rng: np.random.Generator) -> None:
    n = int(rng.integers(2, MAX_STATES // 2 + 1))
    n_y = int(rng.integers(2, MAX_AUX + 1))
    q, mu_dot, _ = random_reversible_instance(rng, n)
    K_dot = build_mh(q, mu_dot)
    Q = rng.uniform(0.05, 1.0, size=(n, n_y))
    Q /= Q.sum(axis=1, keepdims=True)
    K_bar, mu_bar = augment(K_dot, Q, mu_dot)

    h = rng.standard_normal(n * n_y)
    gaps = [
        float(np.max(np.abs(K_bar.apply(h, p).values.reshape(n, n_y) - K_dot.apply(q_average(Q, h), p).values[:, None])))
        for p in range(1, IDENTITY_POWER + 1)
    ]
    report.check("augmented_identity", max(gaps) <= IDENTITY_TOL, IDENTITY_TOL - max(gaps), index)
    drift = float(np.max(np.abs(mu_bar.probs @ K_bar.rows - mu_bar.probs)))
    report.check("augmented_invariance", drift <= IDENTITY_TOL and check_reversible(K_bar, mu_bar), instance=index)
    spec_bar, spec_dot = spectral_info(K_bar, mu_bar), spectral_info(K_dot, mu_dot)
    report.check(
        "augmented_positivity",
        spec_bar.positive == spec_dot.positive and spec_bar.aperiodic == spec_dot.aperiodic,
        instance=index,
    )

    qh = q_average(Q, h)
    within = float(mu_dot.probs @ q_average(Q, (h.reshape(n, n_y) - qh[:, None]).ravel() ** 2))
    direct = exact_asvar(K_bar, mu_bar, h)
    split = exact_asvar(K_dot, mu_dot, qh) + within
    gap = abs(direct - split)
    report.check("augmented_variance", gap <= VERDICT_TOL * max(1.0, direct), VERDICT_TOL - gap, index)

    w_bar = rng.uniform(0.2, 5.0, size=n * n_y)
    nu_bar = FiniteDist.from_weights(w_bar * mu_bar.probs, mu_bar.labels)
    w_bar = nu_bar.probs / mu_bar.probs
    L = build_da(K_bar, w_bar)
    phi = rng.standard_normal(n * n_y)
    seed = int(rng.integers(2 ** 31))
    full = peskun_check(K_bar, L, mu_bar, nu_bar, phi, seed=seed)
    report.check("dirichlet_augmented_w", full.verdicts["dirichlet_hypothesis"], instance=index)
    report.check("peskun_augmented_upper", full.verdicts["upper"], full.margins()["upper"], index)
    marginal = peskun_check(
        K_bar, L, mu_bar, nu_bar, phi,
        marginal_split=MarginalSplit(np.repeat(np.arange(n), n_y)),
        seed=seed,
    )
    c_star = marginal.constants["c_upper"]
    ratio = marginal.dirichlet["max_ratio"]
    report.check("dirichlet_augmented_w_star", not ratio > c_star + VERDICT_TOL, instance=index)
    report.check("peskun_augmented_marginal", marginal.verdicts["augmented"], marginal.margins()["augmented"], index)


def _model_checks(report: VerifyReport, index: int, rng: np.random.Generator) -> None:
    model = random_latent_model(
        rng,
        n_theta=int(rng.integers(2, 4)),
        n_u=int(rng.integers(1, 3)),
        m=int(rng.integers(1, 3)),
        n_z=2,
        name=f"random-{index}",
    )
    f = resolve_function("theta_z")
    kernels = build_model_kernels(model, f)
    for mode in MODEL_MODES:
        try:
            comparison = comparison_bounds(model, None, f, mode, kernels=kernels, seed=int(rng.integers(2 ** 31)))
        except AsvarLabError as exc:
            report.check(f"model_{mode}", False, instance=index, error=str(exc))
            continue
        for key, ok in comparison.verdicts.items():
            report.check(f"model_{key}", ok, instance=index, mode=mode)
        for key, ok in comparison.informational.items():
            report.tally(f"model_{key}", informational=True).record(ok)


def verify_suite(seed: int = 0, instance_count: int = 1000, progress: bool = True) -> VerifyReport:
    rng = np.random.default_rng(seed)
    report = VerifyReport(seed=seed, instance_count=instance_count)
    for index in tqdm(range(instance_count), desc="verify", disable=not progress):
        _pair_checks(report, index, rng)
        _augmented_checks(report, index, rng)
        if index % MODEL_CASE_EVERY == 0:
            _model_checks(report, index, rng)
    failed = sum(t.failed for t in report.checks.values())
    if failed:
        logger.warning(f"verify: {failed} failed check(s) over {instance_count} instances")
    else:
        logger.info(f"verify: all checks passed over {instance_count} instances")
    return report
