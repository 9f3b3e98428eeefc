"""
Empirical comparison of the samplers on one latent model.

compare_run runs every algorithm over a list of seeds and reports estimates,
batch-means asymptotic variances, the exact asymptotic variance where the
model is enumerable, cost counters and the comparison-bound verdicts.
clt_study repeats each run many times and compares the spread of the
sqrt(n)-scaled errors with the exact asymptotic variance.

Usage:
    from scripts.models.presets import two_coin
    from scripts.experiments.compare import compare_run, clt_study

    report = compare_run(two_coin(), ["da", "is0"], n=10_000, seeds=range(5), f="theta")
    report.to_frame()
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from scripts.chains.finite_mcmc import FiniteKernel
from scripts.models.pm_core import LatentFunction, LatentModel, resolve_function, support_check
from scripts.models.pm_kernels import build_model_kernels
from scripts.processors.asvar import batch_means_asvar
from scripts.processors.is_variance import comparison_bounds, exact_estimator_asvar
from scripts.samplers.base_sampler import ALGORITHMS
from scripts.samplers.estimators import estimate
from scripts.samplers.pm_samplers import IS_MODES, simulate_batch

logger = logging.getLogger(__name__)

ESTIMATOR_KIND = {
    "base": "SNIS",
    "pm-parent": "PM",
    "da": "PM",
    "is0": "IS",
    "isj-single": "IS",
    "isj-avg": "IS",
}
SE_MULTIPLIER = 3.0
TRIVIAL_WEIGHT_TOL = 1e-12
CLT_CHUNK = 50
CLT_RELATIVE_TOL = 0.15


def _function(f: Union[str, LatentFunction]) -> LatentFunction:
    return resolve_function(f) if isinstance(f, str) else f


def _check_algos(algos: Sequence[str], fn: LatentFunction) -> List[str]:
    unknown = [a for a in algos if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithm(s) {unknown}; choose from {ALGORITHMS}")
    if "base" in algos and fn.depends_on_z:
        raise ValueError(f"the base chain estimates with SNIS, which needs a function of theta only; {fn.name!r} depends on z")
    return list(algos)


def _mean_se(values: np.ndarray) -> float:
    """Batch-means standard error of a path average."""
    series = np.asarray(values, dtype=float)
    if series.size < 4:
        return math.nan
    return math.sqrt(batch_means_asvar(series).value / series.size)


def _path_cost(meta: Dict[str, Any], n: int) -> Dict[str, float]:
    """Counters per base step."""
    return {key: float(value) / n for key, value in meta.get("cost", {}).items()}


@dataclass
class AlgoSummary:
    algorithm: str
    kind: str
    estimates: List[float] = field(default_factory=list)
    standard_errors: List[float] = field(default_factory=list)
    asvar_bm: List[float] = field(default_factory=list)
    costs: List[Dict[str, float]] = field(default_factory=list)
    acceptance: List[float] = field(default_factory=list)
    acceptance_se: List[float] = field(default_factory=list)
    exact_asvar: float = math.nan
    truth: float = math.nan

    @property
    def mean(self) -> float:
        return float(np.mean(self.estimates))

    @property
    def pooled_se(self) -> float:
        se = np.asarray(self.standard_errors, dtype=float)
        return float(np.sqrt(np.nanmean(se ** 2) / se.size))

    @property
    def within_se_fraction(self) -> float:
        if math.isnan(self.truth):
            return math.nan
        est = np.asarray(self.estimates)
        se = np.asarray(self.standard_errors)
        return float(np.mean(np.abs(est - self.truth) <= SE_MULTIPLIER * se))

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.acceptance))

    @property
    def acceptance_pooled_se(self) -> float:
        se = np.asarray(self.acceptance_se, dtype=float)
        return float(np.sqrt(np.mean(se ** 2) / se.size))

    def cost(self, key: str) -> float:
        return float(np.mean([c.get(key, 0.0) for c in self.costs]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "kind": self.kind,
            "seeds": len(self.estimates),
            "mean": self.mean,
            "sd": float(np.std(self.estimates, ddof=1)) if len(self.estimates) > 1 else math.nan,
            "pooled_se": self.pooled_se,
            "truth": self.truth,
            "within_3se": self.within_se_fraction,
            "asvar_bm": float(np.mean(self.asvar_bm)),
            "asvar_exact": self.exact_asvar,
            "acceptance": self.acceptance_rate,
            "acceptance_se": self.acceptance_pooled_se,
            "v_draws_per_step": self.cost("v_draws"),
            "eta_evals_per_step": self.cost("eta_evals"),
            "zeta_evals_per_step": self.cost("zeta_evals"),
        }


@dataclass
class CompareReport:
    model: str
    function: str
    n: int
    seeds: List[int]
    algos: Dict[str, AlgoSummary] = field(default_factory=dict)
    verdicts: Dict[str, bool] = field(default_factory=dict)
    bounds: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    trivial_weight: bool = False
    support: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([summary.to_dict() for summary in self.algos.values()])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "function": self.function,
            "n": self.n,
            "seeds": list(self.seeds),
            "trivial_weight": self.trivial_weight,
            "support": self.support,
            "algorithms": [summary.to_dict() for summary in self.algos.values()],
            "bounds": self.bounds,
            "verdicts": dict(self.verdicts),
            "passed": self.passed,
        }


def compare_run(
    model: LatentModel,
    algos: Sequence[str],
    n: int,
    seeds: Iterable[int],
    f: Union[str, LatentFunction],
    q: Optional[FiniteKernel] = None,
    progress: bool = False,
) -> CompareReport:
    """Run each algorithm once per seed and collect estimates, costs and verdicts."""
    fn = _function(f)
    algos = _check_algos(algos, fn)
    seeds = [int(s) for s in seeds]
    report = CompareReport(model.name, fn.name, int(n), seeds)

    support = support_check(model)
    report.support = support.to_dict()
    report.verdicts["support_condition"] = support.ok
    if not support.ok:
        logger.warning(f"{model.name}: support condition fails, witness {support.witness!r}")

    kernels = measures = None
    if model.is_enumerable and support.ok:
        kernels = build_model_kernels(model, fn, q)
        measures = kernels.measures
        w = measures.w.ravel()[measures.mu_bar.probs > 0]
        report.trivial_weight = bool(np.all(np.abs(w - 1.0) <= TRIVIAL_WEIGHT_TOL))
        if report.trivial_weight:
            logger.info(f"{model.name}: w == 1, IS and PM estimates coincide in law")

    jobs = [(algo, seed) for algo in algos for seed in seeds]
    for algo, seed in tqdm(jobs, desc="compare", disable=not progress):
        path = simulate_batch(algo, model, q, n, seed, 1, (fn,))[0]
        kind = ESTIMATOR_KIND[algo]
        weight = measures.snis_weight if (kind == "SNIS" and measures is not None) else None
        result = estimate(path, kind, fn, weight=weight, model=model)
        summary = report.algos.setdefault(algo, AlgoSummary(algo, kind))
        summary.estimates.append(result.value)
        summary.standard_errors.append(result.se)
        summary.asvar_bm.append(path.base_steps * result.se ** 2)
        summary.costs.append(_path_cost(path.meta, n))
        summary.acceptance.append(float(np.mean(path.accepted)))
        summary.acceptance_se.append(_mean_se(path.accepted))

    if measures is not None:
        for algo, summary in report.algos.items():
            summary.truth = measures.nu_f
            summary.exact_asvar = exact_estimator_asvar(model, q, fn, algo, kernels)
            report.verdicts[f"{algo}_within_3se"] = abs(summary.mean - summary.truth) <= SE_MULTIPLIER * summary.pooled_se
        for mode in (a for a in algos if a in IS_MODES):
            bounds = comparison_bounds(model, q, fn, mode, kernels=kernels)
            report.bounds[mode] = bounds.to_dict()
            report.verdicts[f"{mode}_bounds"] = bounds.passed

    if "da" in report.algos and "pm-parent" in report.algos:
        da, parent = report.algos["da"], report.algos["pm-parent"]
        slack = SE_MULTIPLIER * math.hypot(da.acceptance_pooled_se, parent.acceptance_pooled_se)
        report.verdicts["da_acceptance_le_parent"] = da.acceptance_rate - parent.acceptance_rate <= slack
        rejection = 1.0 - da.acceptance_rate
        if rejection > 0:
            report.verdicts["da_cheaper_than_parent"] = (
                report.algos["da"].cost("v_draws") < report.algos["pm-parent"].cost("v_draws")
            )

    failed = [key for key, ok in report.verdicts.items() if not ok]
    if failed:
        logger.warning(f"compare {model.name}/{fn.name}: failed verdicts {failed}")
    return report


# ---------------------------------------------------------------------------
# replicate study
# ---------------------------------------------------------------------------

@dataclass
class CLTRow:
    algorithm: str
    replicates: int
    n: int
    empirical_var: float
    exact_asvar: float
    mean_error: float = 0.0

    @property
    def relative_error(self) -> float:
        if self.exact_asvar == 0:
            return 0.0 if self.empirical_var == 0 else math.inf
        return self.empirical_var / self.exact_asvar - 1.0

    @property
    def band(self) -> float:
        """Three standard errors of a sample variance from R normal draws, relative; reported only."""
        return SE_MULTIPLIER * math.sqrt(2.0 / (self.replicates - 1))

    @property
    def within_band(self) -> bool:
        return abs(self.relative_error) <= self.band

    @property
    def within_15pct(self) -> bool:
        return abs(self.relative_error) <= CLT_RELATIVE_TOL

    @property
    def centered(self) -> bool:
        """Mean of the sqrt(n)-scaled errors within three standard errors of 0."""
        return abs(self.mean_error) <= SE_MULTIPLIER * math.sqrt(self.empirical_var / self.replicates)

    @property
    def passed(self) -> bool:
        return self.within_15pct and self.centered

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "replicates": self.replicates,
            "n": self.n,
            "empirical_var": self.empirical_var,
            "exact_asvar": self.exact_asvar,
            "relative_error": self.relative_error,
            "band": self.band,
            "within_band": self.within_band,
            "within_15pct": self.within_15pct,
            "mean_error": self.mean_error,
            "centered": self.centered,
            "passed": self.passed,
        }


@dataclass
class CLTReport:
    model: str
    function: str
    rows: List[CLTRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.to_dict() for row in self.rows])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "function": self.function,
            "rows": [row.to_dict() for row in self.rows],
            "passed": self.passed,
        }


def clt_study(
    model: LatentModel,
    algos: Sequence[str],
    n: int,
    replicates: int,
    seed: int = 0,
    f: Union[str, LatentFunction] = "theta",
    q: Optional[FiniteKernel] = None,
    progress: bool = False,
) -> CLTReport:
    """Empirical variance of sqrt(n) (estimate - nu(f)) over replicates, against the exact value.

    Replicates run in lock-step chunks of CLT_CHUNK, each chunk on its own
    child seed of ``seed``.
    """
    if replicates < 2:
        raise ValueError("replicates must be at least 2")
    fn = _function(f)
    algos = _check_algos(algos, fn)
    kernels = build_model_kernels(model, fn, q)
    truth = kernels.measures.nu_f
    chunks = [min(CLT_CHUNK, replicates - start) for start in range(0, replicates, CLT_CHUNK)]
    children = np.random.SeedSequence(seed).spawn(len(chunks))
    chunk_seeds = [int(child.generate_state(1)[0]) for child in children]

    report = CLTReport(model.name, fn.name)
    for algo in tqdm(algos, desc="clt", disable=not progress):
        kind = ESTIMATOR_KIND[algo]
        weight = kernels.measures.snis_weight if kind == "SNIS" else None
        errors: List[float] = []
        for size, chunk_seed in zip(chunks, chunk_seeds):
            for path in simulate_batch(algo, model, q, n, chunk_seed, size, (fn,)):
                value = estimate(path, kind, fn, weight=weight, model=model).value
                errors.append(math.sqrt(n) * (value - truth))
        row = CLTRow(
            algorithm=algo,
            replicates=len(errors),
            n=int(n),
            empirical_var=float(np.var(errors, ddof=1)),
            mean_error=float(np.mean(errors)),
            exact_asvar=exact_estimator_asvar(model, q, fn, algo, kernels),
        )
        logger.info(f"clt {algo}: empirical {row.empirical_var:.4g} vs exact {row.exact_asvar:.4g} ({row.relative_error:+.1%})")
        report.rows.append(row)
    return report
