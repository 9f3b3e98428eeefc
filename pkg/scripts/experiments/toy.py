"""
Three-state toy comparisons of an importance-sampling correction against
MH / delayed acceptance, exact for every a in [1/2, 1).

Two mass allocations on X = {0, 1, 2}:

    da-better   mu = ((1-a)/2, (1-a)/2, a)   nu = (1/2, 1/2, 0)         f = (1, -1, 0)
    is-better   mu = (1/3, 1/3, 1/3)         nu = (a/2, (1-a)/2, 1/2)   f = sqrt(2/(a+a^2)) (1, 0, -a)

and two proposals, the reflected random walk (rw) and the uniform one.
K = MH(q -> mu) and L = MH(q -> nu); w = nu / mu.

The printed closed form for var(L, f) in the is-better/rw cell has
denominator a^2 - 1, negative on the whole range; both sign variants are
evaluated and the matching one is reported.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from scripts.chains.finite_mcmc import (
    VERDICT_TOL,
    FiniteDist,
    FiniteKernel,
    RealFunction,
    build_da,
    build_mh,
    exact_asvar,
)

logger = logging.getLogger(__name__)

CASES = ("da-better", "is-better")
PROPOSALS = ("rw", "uniform")
DEFAULT_A_GRID: Tuple[float, ...] = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
COINCIDENCE_TOL = 1e-12
NORMALIZATION_TOL = 1e-12

LABELS = (0, 1, 2)

# sign variants of the is-better/rw var(L, f) entry
PRINTED_VARIANT = "a^2-1"
RESOLVED_VARIANT = "1-a^2"


def _closed_forms(case: str, proposal: str) -> Tuple[Callable[[float], float], Callable[[float], float]]:
    """(var(L, f), var(K, w f)) as printed in the reference table."""
    if case == "da-better":
        var_l = (lambda a: 1.0) if proposal == "rw" else (lambda a: 2.0)
        return var_l, lambda a: 1.0 / (1.0 - a)
    if proposal == "rw":
        return (lambda a: (-1 + 8 * a + a ** 2) / (1 - a ** 2)), (lambda a: 9 * a / (1 + a))
    return (lambda a: (-1 + 10 * a - a ** 2) / (1 + a) ** 2), (lambda a: 15 * a / (4 * (1 + a)))


def printed_is_better_rw(a: float) -> float:
    return (-1 + 8 * a + a ** 2) / (a ** 2 - 1)


def proposal_kernel(proposal: str) -> FiniteKernel:
    if proposal == "rw":
        return FiniteKernel.from_rows([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]], LABELS)
    if proposal == "uniform":
        return FiniteKernel(np.full((3, 3), 1.0 / 3.0), LABELS)
    raise ValueError(f"unknown proposal {proposal!r}; choose from {PROPOSALS}")


@dataclass(eq=False)
class ToyInstance:
    case: str
    a: float
    proposal: str
    mu: FiniteDist
    nu: FiniteDist
    f: RealFunction
    w: RealFunction
    K: FiniteKernel
    L: FiniteKernel
    L_da: FiniteKernel

    def coincidence_gap(self) -> float:
        """Max entrywise |MH(q -> nu) - DA(K, w)| over the rows nu charges."""
        rows = self.nu.probs > 0
        return float(np.max(np.abs(self.L.rows[rows] - self.L_da.rows[rows])))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case": self.case,
            "a": self.a,
            "proposal": self.proposal,
            "mu": self.mu.probs.tolist(),
            "nu": self.nu.probs.tolist(),
            "f": self.f.values.tolist(),
            "w": self.w.values.tolist(),
        }


def toy_instance(case: str, a: float, proposal: str) -> ToyInstance:
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}; choose from {CASES}")
    if not 0.5 <= a < 1.0:
        raise ValueError(f"a must lie in [0.5, 1), got {a}")

    if case == "da-better":
        mu = FiniteDist(np.array([(1 - a) / 2, (1 - a) / 2, a]), LABELS)
        nu = FiniteDist(np.array([0.5, 0.5, 0.0]), LABELS)
        f = RealFunction(np.array([1.0, -1.0, 0.0]), LABELS)
    else:
        mu = FiniteDist.uniform(LABELS)
        nu = FiniteDist(np.array([a / 2, (1 - a) / 2, 0.5]), LABELS)
        f = RealFunction(math.sqrt(2.0 / (a + a ** 2)) * np.array([1.0, 0.0, -a]), LABELS)

    mean, second = nu.expectation(f), nu.expectation(f * f)
    if abs(mean) > NORMALIZATION_TOL or abs(second - 1.0) > NORMALIZATION_TOL:
        raise ArithmeticError(f"{case} at a={a}: nu(f)={mean}, nu(f^2)={second}")

    q = proposal_kernel(proposal)
    K = build_mh(q, mu)
    w = RealFunction(nu.probs / mu.probs, LABELS)
    return ToyInstance(
        case=case,
        a=float(a),
        proposal=proposal,
        mu=mu,
        nu=nu,
        f=f,
        w=w,
        K=K,
        L=build_mh(q, nu),
        L_da=build_da(K, w),
    )


@dataclass
class SweepRow:
    a: float
    var_L_f: float
    var_K_wf: float
    UB_a: float
    closed_form_L: float
    closed_form_K: float
    max_abs_dev: float
    total_lhs: float = math.nan
    total_rhs: float = math.nan
    coincidence_gap: float = math.nan
    printed_L: Optional[float] = None

    @property
    def bound_holds(self) -> bool:
        return self.var_K_wf <= self.UB_a + VERDICT_TOL * max(1.0, abs(self.UB_a))

    @property
    def total_bound_holds(self) -> bool:
        return self.total_lhs <= self.total_rhs + VERDICT_TOL * max(1.0, abs(self.total_rhs))

    def to_dict(self) -> Dict[str, Any]:
        row = {
            "a": self.a,
            "var_L_f": self.var_L_f,
            "var_K_wf": self.var_K_wf,
            "UB_a": self.UB_a,
            "closed_form_L": self.closed_form_L,
            "closed_form_K": self.closed_form_K,
            "max_abs_dev": self.max_abs_dev,
            "total_lhs": self.total_lhs,
            "total_rhs": self.total_rhs,
            "coincidence_gap": self.coincidence_gap,
        }
        if self.printed_L is not None:
            row["printed_L"] = self.printed_L
        return row


def sweep_row(instance: ToyInstance) -> SweepRow:
    a = instance.a
    var_l = exact_asvar(instance.L, instance.nu, instance.f)
    wf = instance.w * instance.f
    var_k = exact_asvar(instance.K, instance.mu, wf)

    w = instance.w.values
    w_max = float(w[instance.mu.probs > 0].max())
    f2 = instance.f.values ** 2
    ub = w_max * var_l + float(instance.nu.probs @ (f2 * (w_max - w)))

    closed_l, closed_k = _closed_forms(instance.case, instance.proposal)
    cl, ck = closed_l(a), closed_k(a)
    return SweepRow(
        a=a,
        var_L_f=var_l,
        var_K_wf=var_k,
        UB_a=ub,
        closed_form_L=cl,
        closed_form_K=ck,
        max_abs_dev=max(abs(var_l - cl), abs(var_k - ck)),
        total_lhs=var_k + instance.mu.variance(wf),
        total_rhs=w_max * (var_l + instance.nu.variance(instance.f)),
        coincidence_gap=instance.coincidence_gap(),
        printed_L=printed_is_better_rw(a) if (instance.case, instance.proposal) == ("is-better", "rw") else None,
    )


def toy_sweep(case: str, proposal: str, a_grid: Sequence[float] = DEFAULT_A_GRID) -> List[SweepRow]:
    rows = [sweep_row(toy_instance(case, float(a), proposal)) for a in a_grid]
    logger.debug(f"{case}/{proposal}: {len(rows)} rows, worst deviation {max(r.max_abs_dev for r in rows):.3g}")
    return rows


@dataclass
class SweepReport:
    case: str
    proposal: str
    rows: List[SweepRow]
    verdicts: Dict[str, bool] = field(default_factory=dict)
    matched_variant: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case": self.case,
            "proposal": self.proposal,
            "verdicts": dict(self.verdicts),
            "matched_variant": self.matched_variant,
            "rows": [row.to_dict() for row in self.rows],
        }


def sweep_report(case: str, proposal: str, a_grid: Sequence[float] = DEFAULT_A_GRID, tol: float = VERDICT_TOL) -> SweepReport:
    """Sweep plus its verdicts: closed forms, both bounds and MH/DA coincidence."""
    rows = toy_sweep(case, proposal, a_grid)
    report = SweepReport(case, proposal, rows)
    report.verdicts["closed_forms"] = all(r.max_abs_dev <= tol for r in rows)
    report.verdicts["upper_bound"] = all(r.bound_holds for r in rows)
    report.verdicts["total_variance_bound"] = all(r.total_bound_holds for r in rows)
    report.verdicts["mh_da_coincidence"] = all(r.coincidence_gap <= COINCIDENCE_TOL for r in rows)
    if (case, proposal) == ("da-better", "rw"):
        report.verdicts["bound_is_tight"] = all(abs(r.UB_a - r.var_K_wf) <= tol for r in rows)
    if (case, proposal) == ("is-better", "rw"):
        if all(abs(r.var_L_f - r.printed_L) <= tol for r in rows):
            report.matched_variant = PRINTED_VARIANT
        elif report.verdicts["closed_forms"]:
            report.matched_variant = RESOLVED_VARIANT
        report.verdicts["sign_variant_matched"] = report.matched_variant is not None
        if report.matched_variant == RESOLVED_VARIANT:
            logger.info(f"is-better/rw: var(L, f) matches the {RESOLVED_VARIANT} denominator, not the printed {PRINTED_VARIANT}")
    return report
