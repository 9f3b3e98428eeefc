"""
Exact kernel algebra on finite state spaces.

Everything here is a pure function of immutable inputs: no sampling, no
shared state. Kernels are dense row-stochastic matrices over a tuple of
state labels; distributions and functions live on the same labels.

Spectral and variance computations always restrict to the support of the
relevant stationary measure first. Infinite asymptotic variance is
returned as ``math.inf``.

Usage:
    from scripts.chains.finite_mcmc import FiniteDist, FiniteKernel, build_mh, exact_asvar

    q = FiniteKernel.from_rows([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])
    mu = FiniteDist.from_weights([1, 1, 2])
    K = build_mh(q, mu)
    exact_asvar(K, mu, [1.0, -1.0, 0.0])
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from scripts.errors import (
    AbsoluteContinuityError,
    AbsorbingStateError,
    DimensionMismatchError,
    EmptySupportError,
    InconsistentComputationError,
    NotReversibleError,
    NotStochasticError,
    ReducibleKernelError,
)

logger = logging.getLogger(__name__)

ATOL_STOCHASTIC = 1e-12
REVERSIBILITY_TOL = 1e-10
SYMMETRY_TOL = 1e-10
UNIT_EIGENVALUE_TOL = 1e-10
STATIONARITY_TOL = 1e-10
CROSS_CHECK_TOL = 1e-9
VERDICT_TOL = 1e-9
DEFAULT_TEST_FUNCTIONS = 100

Label = Hashable
ArrayLike = Union[Sequence[float], np.ndarray]


def _default_labels(labels: Optional[Sequence[Label]], n: int) -> Tuple[Label, ...]:
    if labels is None:
        return tuple(range(n))
    labels = tuple(labels)
    if len(labels) != n:
        raise DimensionMismatchError(f"{len(labels)} labels for {n} states")
    if len(set(labels)) != n:
        raise DimensionMismatchError("state labels must be distinct")
    return labels


def _clip_negative_zero(values: np.ndarray, what: str) -> np.ndarray:
    if np.any(values < -ATOL_STOCHASTIC):
        raise NotStochasticError(f"{what} has negative entries (min {values.min():.3g})")
    return np.where(values < 0, 0.0, values)


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability vector over labeled states."""
    probs: np.ndarray
    labels: Tuple[Label, ...] = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise DimensionMismatchError("a distribution needs a non-empty 1-d probability vector")
        if not np.all(np.isfinite(probs)):
            raise NotStochasticError("distribution has non-finite entries")
        probs = _clip_negative_zero(probs, "distribution")
        if abs(probs.sum() - 1.0) > ATOL_STOCHASTIC:
            raise NotStochasticError(f"probabilities sum to {probs.sum():.15g}, not 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", _default_labels(self.labels, probs.size))

    @classmethod
    def from_weights(cls, weights: ArrayLike, labels: Optional[Sequence[Label]] = None) -> "FiniteDist":
        """Normalize nonnegative weights into a distribution."""
        weights = _clip_negative_zero(np.asarray(weights, dtype=float), "weights")
        total = weights.sum()
        if not total > 0:
            raise EmptySupportError("weights have no positive mass")
        return cls(weights / total, labels)

    @classmethod
    def uniform(cls, labels: Sequence[Label]) -> "FiniteDist":
        n = len(labels)
        return cls(np.full(n, 1.0 / n), labels)

    @property
    def n(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        return self.probs > 0

    def index(self, label: Label) -> int:
        return self.labels.index(label)

    def expectation(self, f: "FunctionLike") -> float:
        return float(self.probs @ _values(f, self))

    def variance(self, f: "FunctionLike") -> float:
        values = _values(f, self)
        mean = self.probs @ values
        return float(self.probs @ (values - mean) ** 2)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "dist", "labels": list(self.labels), "probs": self.probs.tolist()}


@dataclass(frozen=True, eq=False)
class RealFunction:
    """Real-valued function on labeled states."""
    values: np.ndarray
    labels: Tuple[Label, ...] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DimensionMismatchError("function values must be 1-d")
        if not np.all(np.isfinite(values)):
            raise ValueError("function values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", _default_labels(self.labels, values.size))

    @classmethod
    def constant(cls, c: float, labels: Sequence[Label]) -> "RealFunction":
        return cls(np.full(len(labels), float(c)), labels)

    def centered(self, dist: FiniteDist) -> "RealFunction":
        return RealFunction(self.values - dist.expectation(self), self.labels)

    def __mul__(self, other: Union["RealFunction", float]) -> "RealFunction":
        if isinstance(other, RealFunction):
            _check_labels(self, other)
            return RealFunction(self.values * other.values, self.labels)
        return RealFunction(self.values * float(other), self.labels)

    __rmul__ = __mul__

    def __add__(self, other: Union["RealFunction", float]) -> "RealFunction":
        if isinstance(other, RealFunction):
            _check_labels(self, other)
            return RealFunction(self.values + other.values, self.labels)
        return RealFunction(self.values + float(other), self.labels)

    def __sub__(self, other: Union["RealFunction", float]) -> "RealFunction":
        return self + (-1.0) * other

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "function", "labels": list(self.labels), "values": self.values.tolist()}


FunctionLike = Union[RealFunction, ArrayLike]


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    """Dense row-stochastic transition matrix over labeled states."""
    rows: np.ndarray
    labels: Tuple[Label, ...] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape[0] == 0:
            raise DimensionMismatchError(f"kernel must be a non-empty square matrix, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise NotStochasticError("kernel has non-finite entries")
        rows = _clip_negative_zero(rows, "kernel")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ATOL_STOCHASTIC)
        if bad.size:
            raise NotStochasticError(f"rows {bad.tolist()} do not sum to 1 (sums {sums[bad].tolist()})")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", _default_labels(self.labels, rows.shape[0]))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], labels: Optional[Sequence[Label]] = None) -> "FiniteKernel":
        return cls(np.asarray(rows, dtype=float), labels)

    @classmethod
    def independence(cls, dist: FiniteDist) -> "FiniteKernel":
        """Kernel whose every row is ``dist``."""
        return cls(np.tile(dist.probs, (dist.n, 1)), dist.labels)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def apply(self, f: FunctionLike, power: int = 1) -> RealFunction:
        """Return K^power f."""
        values = _values(f, self)
        for _ in range(power):
            values = self.rows @ values
        return RealFunction(values, self.labels)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "kernel", "labels": list(self.labels), "rows": self.rows.tolist()}


@dataclass
class SpectralInfo:
    """Spectrum of a reversible kernel on the support of its measure."""
    eigenvalues: np.ndarray
    left_gap: float
    positive: bool
    aperiodic: bool
    negativity_indicator: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "left_gap": self.left_gap,
            "positive": self.positive,
            "aperiodic": self.aperiodic,
            "negativity_indicator": self.negativity_indicator,
        }


@dataclass
class MarginalSplit:
    """Factorization of the states as (theta, y) pairs.

    ``theta_index[i]`` is the theta group of state ``i``.
    """
    theta_index: np.ndarray

    def __post_init__(self):
        self.theta_index = np.asarray(self.theta_index, dtype=int)

    def conditional_mean(self, values: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Weighted mean of ``values`` within each theta group, broadcast back to states."""
        groups = self.theta_index.max() + 1
        mass = np.bincount(self.theta_index, weights=weights, minlength=groups)
        total = np.bincount(self.theta_index, weights=weights * values, minlength=groups)
        means = np.divide(total, mass, out=np.zeros(groups), where=mass > 0)
        return means[self.theta_index]


@dataclass
class OrderingReport:
    """Both sides of the Peskun-type inequalities and their verdicts."""
    lhs_upper: float
    rhs_upper: float
    lhs_lower: float
    rhs_lower: float
    augmented_lhs: float
    augmented_rhs: float
    constants: Dict[str, float] = field(default_factory=dict)
    verdicts: Dict[str, bool] = field(default_factory=dict)
    dirichlet: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def margins(self) -> Dict[str, float]:
        """Slack of each inequality; negative means violated."""
        return {
            "upper": self.rhs_upper - self.lhs_upper,
            "lower": self.lhs_lower - self.rhs_lower,
            "augmented": self.augmented_rhs - self.augmented_lhs,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lhs_upper": self.lhs_upper,
            "rhs_upper": self.rhs_upper,
            "lhs_lower": self.lhs_lower,
            "rhs_lower": self.rhs_lower,
            "augmented_lhs": self.augmented_lhs,
            "augmented_rhs": self.augmented_rhs,
            "constants": dict(self.constants),
            "verdicts": dict(self.verdicts),
            "dirichlet": dict(self.dirichlet),
            "margins": self.margins(),
        }


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _check_labels(a: Any, b: Any) -> None:
    if a.labels != b.labels:
        raise DimensionMismatchError(
            f"state labels differ ({len(a.labels)} vs {len(b.labels)} states)"
        )


def _values(f: FunctionLike, owner: Any) -> np.ndarray:
    if isinstance(f, RealFunction):
        _check_labels(f, owner)
        return f.values
    values = np.asarray(f, dtype=float)
    if values.shape != (len(owner.labels),):
        raise DimensionMismatchError(f"function has shape {values.shape}, expected ({len(owner.labels)},)")
    return values


def _require_reversible(K: FiniteKernel, mu: FiniteDist) -> None:
    if not check_reversible(K, mu, REVERSIBILITY_TOL):
        flux = mu.probs[:, None] * K.rows
        raise NotReversibleError(
            f"detailed balance fails (max flux asymmetry {np.max(np.abs(flux - flux.T)):.3g})"
        )


def _support(K: FiniteKernel, mu: FiniteDist) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.flatnonzero(mu.probs > 0)
    if idx.size == 0:
        raise EmptySupportError("measure has empty support")
    return idx, K.rows[np.ix_(idx, idx)], mu.probs[idx]


def _symmetric_eigh(Ks: np.ndarray, ms: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigen-decompose D^{1/2} K D^{-1/2}; eigenvalues descending."""
    d = np.sqrt(ms)
    A = d[:, None] * Ks / d[None, :]
    residual = np.max(np.abs(A - A.T)) if A.size else 0.0
    if residual > SYMMETRY_TOL:
        raise NotReversibleError(f"symmetrized kernel residual {residual:.3g} exceeds {SYMMETRY_TOL}")
    evals, U = scipy.linalg.eigh(0.5 * (A + A.T))
    return evals[::-1], U[:, ::-1], d


def restrict(K: FiniteKernel, mu: FiniteDist) -> Tuple[FiniteKernel, FiniteDist]:
    """Restrict a kernel and its stationary measure to the measure's support."""
    _check_labels(K, mu)
    idx, Ks, ms = _support(K, mu)
    labels = tuple(mu.labels[i] for i in idx)
    return FiniteKernel(Ks, labels), FiniteDist(ms / ms.sum(), labels)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def stationary_dist(K: FiniteKernel) -> FiniteDist:
    """Stationary distribution of ``K``, supported on its unique recurrent class."""
    adjacency = csr_matrix(K.rows > 0)
    count, component = connected_components(adjacency, directed=True, connection="strong")
    recurrent: List[np.ndarray] = []
    for c in range(count):
        members = np.flatnonzero(component == c)
        outside = component != c
        if not np.any(K.rows[np.ix_(members, np.flatnonzero(outside))] > 0):
            recurrent.append(members)
    if len(recurrent) > 1:
        raise ReducibleKernelError([[K.labels[i] for i in members] for members in recurrent])

    members = recurrent[0]
    m = members.size
    Kc = K.rows[np.ix_(members, members)]
    system = np.vstack([Kc.T - np.eye(m), np.ones((1, m))])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    solution = scipy.linalg.lstsq(system, rhs)[0]
    solution = np.clip(solution, 0.0, None)

    probs = np.zeros(K.n)
    probs[members] = solution / solution.sum()
    residual = np.max(np.abs(probs @ K.rows - probs))
    if residual > STATIONARITY_TOL:
        raise InconsistentComputationError(f"stationary solve residual {residual:.3g}")
    if m < K.n:
        logger.debug(f"stationary_dist: {K.n - m} transient state(s) get zero mass")
    return FiniteDist(probs, K.labels)


def check_reversible(K: FiniteKernel, mu: FiniteDist, tol: float = ATOL_STOCHASTIC) -> bool:
    """True iff |mu_i K_ij - mu_j K_ji| <= tol for all i, j."""
    _check_labels(K, mu)
    flux = mu.probs[:, None] * K.rows
    return bool(np.max(np.abs(flux - flux.T)) <= tol)


def dirichlet_form(K: FiniteKernel, mu: FiniteDist, g: FunctionLike) -> float:
    """Half the flux-weighted sum of squared differences of ``g``."""
    _check_labels(K, mu)
    _require_reversible(K, mu)
    values = _values(g, mu)
    diff = values[:, None] - values[None, :]
    form = 0.5 * float(np.sum(mu.probs[:, None] * K.rows * diff ** 2))
    quadratic = float(mu.probs @ (values * (values - K.rows @ values)))
    if abs(form - quadratic) > CROSS_CHECK_TOL * max(1.0, abs(form)):
        raise NotReversibleError(f"Dirichlet form {form!r} differs from <g,(1-K)g> {quadratic!r}")
    return form


def subprob_dirichlet_form(K: FiniteKernel, mu: FiniteDist, g: FunctionLike, lam: float) -> float:
    """Dirichlet form of the subprobability kernel lam*K."""
    values = _values(g, mu)
    return lam * dirichlet_form(K, mu, values) + (1.0 - lam) * float(mu.probs @ values ** 2)


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")


def exact_asvar(
    K: FiniteKernel,
    mu: FiniteDist,
    f: FunctionLike,
    lam: float = 1.0,
    cross_check: bool = False,
) -> float:
    """Asymptotic variance of ``f`` under the mu-reversible kernel ``lam*K``.

    Uses the spectral sum over a mu-orthonormal eigenbasis of the support.
    Returns ``math.inf`` when a unit eigenvalue carries part of the centered
    function. With ``cross_check`` the Poisson-equation route must agree to
    1e-9 (relative to max(1, value)).
    """
    _check_labels(K, mu)
    _check_lambda(lam)
    _require_reversible(K, mu)
    idx, Ks, ms = _support(K, mu)
    fs = _values(f, mu)[idx]
    fbar = fs - ms @ fs

    evals, U, d = _symmetric_eigh(Ks, ms)
    coeffs = U.T @ (d * fbar)
    scaled = lam * np.clip(evals, -1.0, 1.0)
    unit = scaled >= 1.0 - UNIT_EIGENVALUE_TOL
    scale = max(1.0, math.sqrt(float(ms @ fbar ** 2)))
    if np.any(np.abs(coeffs[unit]) > 1e-9 * scale):
        return math.inf
    rest = ~unit
    value = float(np.sum((1.0 + scaled[rest]) / (1.0 - scaled[rest]) * coeffs[rest] ** 2))
    value = max(value, 0.0)

    if cross_check:
        other = poisson_asvar(K, mu, _values(f, mu), lam)
        if math.isfinite(other) and abs(other - value) > CROSS_CHECK_TOL * max(1.0, abs(value)):
            raise InconsistentComputationError(
                f"spectral asvar {value!r} and Poisson asvar {other!r} disagree"
            )
    return value


def poisson_asvar(K: FiniteKernel, mu: FiniteDist, f: FunctionLike, lam: float = 1.0) -> float:
    """Asymptotic variance through a linear solve of the Poisson equation."""
    _check_labels(K, mu)
    _check_lambda(lam)
    idx, Ks, ms = _support(K, mu)
    fs = _values(f, mu)[idx]
    fbar = fs - ms @ fs
    m = idx.size
    if lam == 1.0:
        system = np.eye(m) - Ks + np.outer(np.ones(m), ms)
    else:
        system = np.eye(m) - lam * Ks
    try:
        g = scipy.linalg.solve(system, fbar)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        return math.inf
    value = 2.0 * float(ms @ (fbar * g)) - float(ms @ fbar ** 2)
    return max(value, 0.0)


def variational_asvar(K: FiniteKernel, mu: FiniteDist, f: FunctionLike, lam: float) -> float:
    """Asymptotic variance of lam*K from the variational characterization.

    Maximizes 2[2<f,g> - E_{lam K}(g)] over the span of the eigenbasis, with
    the quadratic form built from the flux double sum.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"variational route needs lambda in (0, 1), got {lam}")
    _check_labels(K, mu)
    _require_reversible(K, mu)
    idx, Ks, ms = _support(K, mu)
    fs = _values(f, mu)[idx]
    fbar = fs - ms @ fs

    _, U, d = _symmetric_eigh(Ks, ms)
    basis = U / d[:, None]
    flux = ms[:, None] * Ks
    laplacian = np.diag(flux.sum(axis=1)) - 0.5 * (flux + flux.T)
    dirichlet = basis.T @ laplacian @ basis
    gram = basis.T @ (ms[:, None] * basis)
    hessian = lam * dirichlet + (1.0 - lam) * gram
    linear = basis.T @ (ms * fbar)
    x = scipy.linalg.solve(0.5 * (hessian + hessian.T), linear, assume_a="pos")
    objective = 2.0 * float(linear @ x) - float(x @ hessian @ x)
    return 2.0 * objective - float(ms @ fbar ** 2)


def build_mh(q: FiniteKernel, nu: FiniteDist) -> FiniteKernel:
    """Metropolis-Hastings kernel with proposal ``q`` and target ``nu``.

    The ratio is 0 whenever nu(x) q_x(x') = 0.
    """
    _check_labels(q, nu)
    Q = q.rows
    p = nu.probs
    numerator = p[None, :] * Q.T
    denominator = p[:, None] * Q
    positive = denominator > 0
    ratio = np.where(positive, numerator / np.where(positive, denominator, 1.0), 0.0)
    return _with_rejection_diagonal(Q * np.minimum(1.0, ratio), q.labels)


def build_da(K: FiniteKernel, w: FunctionLike) -> FiniteKernel:
    """Delayed-acceptance correction of ``K`` by the weight ``w``.

    Moves out of a zero-weight state into a positive-weight state are always
    accepted.
    """
    wv = _values(w, K)
    if np.any(wv < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(wv > 0):
        raise EmptySupportError("weight function is identically zero")
    wi = wv[:, None]
    wj = wv[None, :]
    from_positive = np.minimum(1.0, wj / np.where(wi > 0, wi, 1.0))
    ratio = np.where(wi > 0, from_positive, 1.0)
    return _with_rejection_diagonal(K.rows * ratio, K.labels)


def _with_rejection_diagonal(moves: np.ndarray, labels: Tuple[Label, ...]) -> FiniteKernel:
    off = moves.copy()
    np.fill_diagonal(off, 0.0)
    stay = np.clip(1.0 - off.sum(axis=1), 0.0, None)
    return FiniteKernel(off + np.diag(stay), labels)


def augment(
    Kdot: FiniteKernel,
    Q: ArrayLike,
    mu_dot: Optional[FiniteDist] = None,
    y_labels: Optional[Sequence[Label]] = None,
) -> Tuple[FiniteKernel, FiniteDist]:
    """Q-augmentation of ``Kdot``: move theta by Kdot, then redraw y from Q(theta', .).

    States are labeled ``(theta, y)`` in row-major order.
    """
    table = np.asarray(Q, dtype=float)
    if table.ndim != 2 or table.shape[0] != Kdot.n:
        raise DimensionMismatchError(f"augmentation table shape {table.shape} does not match {Kdot.n} states")
    table = _clip_negative_zero(table, "augmentation table")
    if np.any(np.abs(table.sum(axis=1) - 1.0) > ATOL_STOCHASTIC):
        raise NotStochasticError("augmentation table rows must sum to 1")
    if mu_dot is None:
        mu_dot = stationary_dist(Kdot)
    _check_labels(Kdot, mu_dot)
    _require_reversible(Kdot, mu_dot)

    n_theta, n_y = table.shape
    y_labels = _default_labels(y_labels, n_y)
    labels = tuple((theta, y) for theta in Kdot.labels for y in y_labels)
    block = Kdot.rows[:, None, :, None] * table[None, None, :, :]
    rows = np.broadcast_to(block, (n_theta, n_y, n_theta, n_y)).reshape(n_theta * n_y, n_theta * n_y)
    probs = (mu_dot.probs[:, None] * table).ravel()
    return FiniteKernel(rows, labels), FiniteDist(probs / probs.sum(), labels)


def q_average(Q: ArrayLike, f: ArrayLike) -> np.ndarray:
    """(Qf)(theta) = sum_y Q(theta, y) f(theta, y) for ``f`` on the augmented labels."""
    table = np.asarray(Q, dtype=float)
    return np.sum(table * np.asarray(f, dtype=float).reshape(table.shape), axis=1)


def jump_transform(K: FiniteKernel, mu: FiniteDist) -> Tuple[FiniteKernel, FiniteDist, RealFunction]:
    """Jump chain of ``K`` on the support of ``mu``.

    Returns the kernel of distinct successive states, its stationary
    measure (proportional to alpha*mu) and the move probability alpha.
    """
    Kr, mr = restrict(K, mu)
    off = Kr.rows.copy()
    np.fill_diagonal(off, 0.0)
    alpha = off.sum(axis=1)
    stuck = np.flatnonzero(alpha <= 0)
    if stuck.size:
        raise AbsorbingStateError(f"states never move: {[Kr.labels[i] for i in stuck]}")
    jump = off / alpha[:, None]
    return (
        FiniteKernel(jump, Kr.labels),
        FiniteDist.from_weights(alpha * mr.probs, Kr.labels),
        RealFunction(alpha, Kr.labels),
    )


def spectral_info(K: FiniteKernel, mu: FiniteDist) -> SpectralInfo:
    """Spectrum of the symmetrized kernel on the support of ``mu``."""
    _check_labels(K, mu)
    _require_reversible(K, mu)
    _, Ks, ms = _support(K, mu)
    evals, _, _ = _symmetric_eigh(Ks, ms)
    evals = np.clip(evals, -1.0, 1.0)
    smallest = float(evals[-1])
    centered_min = float(evals[1:].min()) if evals.size > 1 else 0.0
    positive = smallest >= -UNIT_EIGENVALUE_TOL
    return SpectralInfo(
        eigenvalues=evals,
        left_gap=1.0 + centered_min,
        positive=positive,
        aperiodic=smallest > -1.0 + UNIT_EIGENVALUE_TOL,
        negativity_indicator=0 if positive else 1,
    )


def _dirichlet_battery(K: FiniteKernel, mu: FiniteDist, G: np.ndarray) -> np.ndarray:
    flux = mu.probs[:, None] * K.rows
    laplacian = np.diag(flux.sum(axis=1)) - 0.5 * (flux + flux.T)
    return np.einsum("ij,jk,ik->i", G, laplacian, G)


def peskun_check(
    K: FiniteKernel,
    L: FiniteKernel,
    mu: FiniteDist,
    nu: FiniteDist,
    phi: FunctionLike,
    c_lower: Optional[float] = None,
    c_upper: Optional[float] = None,
    marginal_split: Optional[MarginalSplit] = None,
    n_test_functions: int = DEFAULT_TEST_FUNCTIONS,
    seed: int = 0,
    tol: float = VERDICT_TOL,
) -> OrderingReport:
    """Evaluate the Peskun-type ordering between ``K`` (target mu) and ``L`` (target nu).

    ``phi`` is centered under nu before weighting. Constants default to the
    extremes of w = dnu/dmu over the mu-support, or of its theta-conditional
    mean w* when ``marginal_split`` is given.
    """
    for other in (L, mu, nu):
        _check_labels(K, other)
    _require_reversible(K, mu)
    _require_reversible(L, nu)
    orphan = np.flatnonzero((nu.probs > 0) & (mu.probs == 0))
    if orphan.size:
        raise AbsoluteContinuityError(f"nu has mass where mu has none: {[mu.labels[i] for i in orphan]}")

    support = mu.probs > 0
    w = np.divide(nu.probs, mu.probs, out=np.zeros(mu.n), where=support)
    phi_values = _values(phi, nu)
    phibar = phi_values - nu.probs @ phi_values
    weighted = w * phibar

    bound_weight = marginal_split.conditional_mean(w, mu.probs) if marginal_split else w
    if c_lower is None:
        c_lower = float(bound_weight[support].min())
    if c_upper is None:
        c_upper = float(bound_weight[support].max())

    var_K = exact_asvar(K, mu, weighted)
    var_mu = float(mu.probs @ weighted ** 2)
    var_L = exact_asvar(L, nu, phibar)
    var_nu = nu.variance(phibar)
    n_indicator = spectral_info(K, mu).negativity_indicator

    lhs = var_K + var_mu
    rhs_upper = c_upper * (var_L + var_nu)
    rhs_lower = c_lower * (var_L + var_nu)
    augmented_rhs = c_upper * (var_L + var_nu) + (1 + 2 * n_indicator) * var_mu

    def slack(bound: float) -> float:
        return tol * max(1.0, abs(bound)) if math.isfinite(bound) else 0.0

    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n_test_functions, mu.n))
    if marginal_split is not None:
        G = G[:, marginal_split.theta_index]
    e_K = _dirichlet_battery(K, mu, G)
    e_L = _dirichlet_battery(L, nu, G)
    informative = e_K > 1e-14
    ratios = e_L[informative] / e_K[informative]
    hypothesis = bool(
        np.all(e_L <= c_upper * e_K + tol * np.maximum(1.0, e_K))
        and np.all(e_L >= c_lower * e_K - tol * np.maximum(1.0, e_K))
    )

    return OrderingReport(
        lhs_upper=lhs,
        rhs_upper=rhs_upper,
        lhs_lower=lhs,
        rhs_lower=rhs_lower,
        augmented_lhs=var_K,
        augmented_rhs=augmented_rhs,
        constants={
            "c_lower": c_lower,
            "c_upper": c_upper,
            "N_K": n_indicator,
            "var_K_wphi": var_K,
            "var_mu_wphi": var_mu,
            "var_L_phi": var_L,
            "var_nu_phi": var_nu,
        },
        verdicts={
            "upper": lhs <= rhs_upper + slack(rhs_upper),
            "lower": lhs >= rhs_lower - slack(rhs_lower),
            "augmented": var_K <= augmented_rhs + slack(augmented_rhs),
            "dirichlet_hypothesis": hypothesis,
        },
        dirichlet={
            "min_ratio": float(ratios.min()) if ratios.size else math.nan,
            "max_ratio": float(ratios.max()) if ratios.size else math.nan,
            "functions": int(n_test_functions),
        },
    )


def random_reversible_instance(
    rng: np.random.Generator,
    n: int,
    weight_range: Tuple[float, float] = (0.2, 5.0),
) -> Tuple[FiniteKernel, FiniteDist, FiniteDist]:
    """Random symmetric proposal q, measure mu and reweighted nu = w mu / mu(w).

    mu is a normalized vector of uniform draws, w is drawn uniformly from
    ``weight_range`` and q has off-diagonal mass from a random symmetric
    matrix with the remainder on the diagonal.
    """
    if n < 2:
        raise ValueError("need at least 2 states")
    labels = tuple(range(n))
    mu = FiniteDist.from_weights(rng.uniform(0.05, 1.0, size=n), labels)
    w = rng.uniform(*weight_range, size=n)
    nu = FiniteDist.from_weights(w * mu.probs, labels)
    raw = rng.uniform(0.0, 1.0, size=(n, n))
    sym = np.triu(raw, 1)
    sym = sym + sym.T
    sym /= sym.sum(axis=1).max()
    q = sym + np.diag(1.0 - sym.sum(axis=1))
    return FiniteKernel(q, labels), mu, nu
