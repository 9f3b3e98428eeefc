"""
Latent-variable models for pseudo-marginal, delayed-acceptance and
importance-sampling-corrected MCMC.

A model fixes a finite parameter space with an unnormalized prior, a kernel
Q^U(u | theta), an approximate likelihood eta(theta, u) = eta(1) and a kernel
Q^V(v | theta, u) producing V-records: m latent points z^(i) with
nonnegative weights zeta^(i). From these,

    zeta(f)    = sum_i zeta^(i) f(theta, z^(i))
    zetahat(f) = zeta(f) / zeta(1)
    xi(f)      = zeta(f) / eta(1)

Enumerable models tabulate Q^V as m iid draws over a finite z-support, so
every exact quantity (mu, pi, c_xi, w, w*, m_f, v_fbar, nu(f)) is a finite
sum. Generative models only sample.
"""
from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from scripts.chains.finite_mcmc import FiniteDist
from scripts.errors import (
    ConfigError,
    EmptySupportError,
    NotEnumerableError,
    SupportViolationError,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class VRecord:
    """m latent points with their weights."""
    z: Tuple[float, ...]
    zeta: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(x) for x in self.z))
        object.__setattr__(self, "zeta", tuple(float(x) for x in self.zeta))
        if len(self.z) != len(self.zeta) or not self.z:
            raise ValueError("a V-record needs m >= 1 points and as many weights")
        if any(x < 0 or not math.isfinite(x) for x in self.zeta):
            raise ValueError("zeta weights must be finite and nonnegative")

    @property
    def m(self) -> int:
        return len(self.z)

    @property
    def zeta_one(self) -> float:
        return float(sum(self.zeta))


@dataclass(frozen=True)
class LatentFunction:
    """Test function f(theta, z) on the latent space."""
    name: str
    fn: Callable[[Any, float], float]
    depends_on_z: bool = True

    def __call__(self, theta: Any, z: float) -> float:
        return float(self.fn(theta, z))

    def table(self, theta_labels: Sequence[Any], z_support: Sequence[float]) -> np.ndarray:
        return np.array([[self(t, z) for z in z_support] for t in theta_labels], dtype=float)


def _indicator(label: str) -> LatentFunction:
    return LatentFunction(f"indicator:{label}", lambda t, z: float(str(t) == label), depends_on_z=False)


NAMED_FUNCTIONS: Dict[str, LatentFunction] = {
    "one": LatentFunction("one", lambda t, z: 1.0, depends_on_z=False),
    "theta": LatentFunction("theta", lambda t, z: float(t), depends_on_z=False),
    "z": LatentFunction("z", lambda t, z: float(z)),
    "theta_z": LatentFunction("theta_z", lambda t, z: float(t) * float(z)),
}


def resolve_function(name: str) -> LatentFunction:
    """Look up a named test function; ``indicator:<label>`` is also accepted."""
    if name.startswith("indicator:"):
        return _indicator(name.split(":", 1)[1])
    try:
        return NAMED_FUNCTIONS[name]
    except KeyError:
        raise ConfigError(f"unknown function {name!r}; choose from {sorted(NAMED_FUNCTIONS)} or indicator:<theta>") from None


@dataclass
class WeightTriple:
    zeta_f: float
    zetahat_f: float
    xi_f: float

    def to_dict(self) -> Dict[str, float]:
        return {"zeta_f": self.zeta_f, "zetahat_f": self.zetahat_f, "xi_f": self.xi_f}


class LatentModel(ABC):
    """Finite theta and U spaces with tabulated prior, Q^U and eta."""

    mode: str = "generative"

    def __init__(
        self,
        theta_labels: Sequence[Any],
        prior: Sequence[float],
        q_u: Sequence[Sequence[float]],
        eta: Sequence[Sequence[float]],
        u_labels: Optional[Sequence[Any]] = None,
        name: str = "model",
    ):
        self.theta_labels = tuple(theta_labels)
        self.prior = np.asarray(prior, dtype=float)
        self.q_u = np.asarray(q_u, dtype=float)
        self.eta = np.asarray(eta, dtype=float)
        n_theta = len(self.theta_labels)
        n_u = self.q_u.shape[1] if self.q_u.ndim == 2 else 0
        self.u_labels = tuple(u_labels) if u_labels is not None else tuple(range(n_u))
        self.name = name

        if self.prior.shape != (n_theta,) or np.any(self.prior < 0):
            raise ConfigError("prior must be a nonnegative vector over theta")
        if self.q_u.shape != (n_theta, len(self.u_labels)) or np.any(self.q_u < 0):
            raise ConfigError("qU must be a nonnegative |theta| x |U| table")
        if np.any(np.abs(self.q_u.sum(axis=1) - 1.0) > 1e-12):
            raise ConfigError("qU rows must sum to 1")
        if self.eta.shape != self.q_u.shape or np.any(self.eta < 0) or not np.all(np.isfinite(self.eta)):
            raise ConfigError("eta must be a finite nonnegative |theta| x |U| table")
        c_eta = float(np.sum(self.prior[:, None] * self.q_u * self.eta))
        if not c_eta > 0:
            raise EmptySupportError("eta(1) integrates to zero under prior x Q^U")

    @property
    def n_theta(self) -> int:
        return len(self.theta_labels)

    @property
    def n_u(self) -> int:
        return len(self.u_labels)

    @property
    def is_enumerable(self) -> bool:
        return self.mode == "enumerable"

    @abstractmethod
    def draw_v(self, theta: int, u: int, rng: np.random.Generator) -> VRecord:
        """Draw one V-record from Q^V(. | theta, u)."""

    def draw_v_weights(
        self,
        theta: np.ndarray,
        u: np.ndarray,
        rng: np.random.Generator,
        functions: Sequence[LatentFunction] = (),
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Draw one V per (theta[r], u[r]) and return (zeta(1), zeta(f) per function, atom index).

        The atom index is -1 for models that do not enumerate V.
        """
        theta = np.asarray(theta, dtype=int)
        u = np.asarray(u, dtype=int)
        zeta_one = np.empty(theta.size)
        zeta_f = np.empty((len(functions), theta.size))
        for r, (t, uu) in enumerate(zip(theta, u)):
            record = self.draw_v(int(t), int(uu), rng)
            zeta_one[r] = record.zeta_one
            label = self.theta_labels[t]
            for j, fn in enumerate(functions):
                zeta_f[j, r] = sum(w * fn(label, z) for w, z in zip(record.zeta, record.z))
        return zeta_one, zeta_f, np.full(theta.size, -1, dtype=int)

    def draw_u(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return _categorical(self.q_u[np.asarray(theta, dtype=int)], rng)

    def draw_theta_prior(self, size: int, rng: np.random.Generator) -> np.ndarray:
        probs = self.prior / self.prior.sum()
        return rng.choice(self.n_theta, size=size, p=probs)

    def eta_at(self, theta: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.eta[np.asarray(theta, dtype=int), np.asarray(u, dtype=int)]


def _categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of ``probs``."""
    cumulative = np.cumsum(probs, axis=-1)
    draws = rng.random(cumulative.shape[:-1])
    index = np.sum(draws[..., None] >= cumulative, axis=-1)
    return np.minimum(index, probs.shape[-1] - 1)


class EnumerableLatentModel(LatentModel):
    """Model whose V is m iid latent draws over a finite z-support."""

    mode = "enumerable"

    def __init__(
        self,
        theta_labels: Sequence[Any],
        prior: Sequence[float],
        q_u: Sequence[Sequence[float]],
        eta: Sequence[Sequence[float]],
        m: int,
        z_support: Sequence[float],
        zeta_table: Any,
        z_probs: Any,
        u_labels: Optional[Sequence[Any]] = None,
        target: Optional[Any] = None,
        proposal: Optional[Any] = None,
        name: str = "model",
    ):
        super().__init__(theta_labels, prior, q_u, eta, u_labels=u_labels, name=name)
        self.m = int(m)
        self.z_support = tuple(float(z) for z in z_support)
        self.zeta_table = np.asarray(zeta_table, dtype=float)
        self.z_probs = np.asarray(z_probs, dtype=float)
        self.target = None if target is None else np.asarray(target, dtype=float)
        self.proposal = None if proposal is None else np.asarray(proposal, dtype=float)

        shape = (self.n_theta, self.n_u, len(self.z_support))
        if self.m < 1:
            raise ConfigError("m must be a positive integer")
        if self.zeta_table.shape != shape or np.any(self.zeta_table < 0):
            raise ConfigError(f"zeta_table must be a nonnegative table of shape {shape}")
        if self.z_probs.shape != shape or np.any(self.z_probs < 0):
            raise ConfigError(f"qV probs must be a nonnegative table of shape {shape}")
        if np.any(np.abs(self.z_probs.sum(axis=2) - 1.0) > 1e-12):
            raise ConfigError("qV probs must sum to 1 for every (theta, u)")
        if self.target is not None and self.target.shape != (self.n_theta, len(self.z_support)):
            raise ConfigError("target must be a |theta| x |z_support| table")
        if self.proposal is not None and self.proposal.shape != (self.n_theta, self.n_theta):
            raise ConfigError("proposal must be a |theta| x |theta| table")

    @cached_property
    def atoms(self) -> np.ndarray:
        """z-index tuples of every V-record, first draw most significant."""
        grid = itertools.product(range(len(self.z_support)), repeat=self.m)
        return np.array(list(grid), dtype=int).reshape(-1, self.m)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @cached_property
    def v_probs(self) -> np.ndarray:
        """Q^V mass of each atom, shape (theta, u, atom)."""
        per_draw = self.z_probs[:, :, self.atoms]
        return np.prod(per_draw, axis=-1)

    @cached_property
    def v_zeta(self) -> np.ndarray:
        """Per-draw weights of each atom, shape (theta, u, atom, m)."""
        return self.zeta_table[:, :, self.atoms]

    @property
    def v_zeta_one(self) -> np.ndarray:
        return self.v_zeta.sum(axis=-1)

    def v_zeta_f(self, f: LatentFunction) -> np.ndarray:
        """zeta(f) of each atom, shape (theta, u, atom)."""
        f_table = f.table(self.theta_labels, self.z_support)
        f_atoms = f_table[:, self.atoms]
        return np.sum(self.v_zeta * f_atoms[:, None, :, :], axis=-1)

    def v_record(self, theta: int, u: int, atom: int) -> VRecord:
        z_index = self.atoms[atom]
        return VRecord(
            z=tuple(self.z_support[i] for i in z_index),
            zeta=tuple(self.zeta_table[theta, u, i] for i in z_index),
        )

    def _draw_atoms(self, theta: np.ndarray, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        probs = self.z_probs[theta, u]
        n_z = len(self.z_support)
        atom = np.zeros(theta.size, dtype=int)
        for _ in range(self.m):
            atom = atom * n_z + _categorical(probs, rng)
        return atom

    def draw_v(self, theta: int, u: int, rng: np.random.Generator) -> VRecord:
        atom = self._draw_atoms(np.array([theta]), np.array([u]), rng)[0]
        return self.v_record(theta, u, int(atom))

    def draw_v_weights(
        self,
        theta: np.ndarray,
        u: np.ndarray,
        rng: np.random.Generator,
        functions: Sequence[LatentFunction] = (),
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=int)
        u = np.asarray(u, dtype=int)
        atom = self._draw_atoms(theta, u, rng)
        zeta_one = self.v_zeta_one[theta, u, atom]
        zeta_f = np.array([self._zeta_f_cache(fn)[theta, u, atom] for fn in functions]).reshape(len(functions), theta.size)
        return zeta_one, zeta_f, atom

    def _zeta_f_cache(self, f: LatentFunction) -> np.ndarray:
        cache = self.__dict__.setdefault("_zeta_f_tables", {})
        if f.name not in cache:
            cache[f.name] = self.v_zeta_f(f)
        return cache[f.name]

    def proposal_rows(self) -> np.ndarray:
        """Theta proposal table; uniform over theta (staying put included) unless configured."""
        if self.proposal is not None:
            return self.proposal
        return np.full((self.n_theta, self.n_theta), 1.0 / self.n_theta)

    def as_generative(self) -> "GenerativeLatentModel":
        """Sampling-only view of this model."""
        return GenerativeLatentModel(
            self.theta_labels,
            self.prior,
            self.q_u,
            self.eta,
            v_sampler=self.draw_v,
            u_labels=self.u_labels,
            name=f"{self.name}/generative",
        )

    def to_config(self) -> Dict[str, Any]:
        config: Dict[str, Any] = {
            "name": self.name,
            "theta": list(self.theta_labels),
            "u": list(self.u_labels),
            "prior": self.prior.tolist(),
            "qU": self.q_u.tolist(),
            "eta": self.eta.tolist(),
            "qV": {
                "m": self.m,
                "z_support": list(self.z_support),
                "zeta_table": self.zeta_table.tolist(),
                "probs": self.z_probs.tolist(),
            },
        }
        if self.target is not None:
            config["target"] = self.target.tolist()
        if self.proposal is not None:
            config["proposal"] = self.proposal.tolist()
        return config


class GenerativeLatentModel(LatentModel):
    """Model that can only sample V through a user-supplied callable."""

    mode = "generative"

    def __init__(
        self,
        theta_labels: Sequence[Any],
        prior: Sequence[float],
        q_u: Sequence[Sequence[float]],
        eta: Sequence[Sequence[float]],
        v_sampler: Callable[[int, int, np.random.Generator], VRecord],
        u_labels: Optional[Sequence[Any]] = None,
        name: str = "model",
    ):
        super().__init__(theta_labels, prior, q_u, eta, u_labels=u_labels, name=name)
        self.v_sampler = v_sampler

    def draw_v(self, theta: int, u: int, rng: np.random.Generator) -> VRecord:
        return self.v_sampler(theta, u, rng)


def inflate(model: LatentModel, epsilon: float) -> LatentModel:
    """Rewrite ``model`` with eta(1) replaced by eta(1) + epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if isinstance(model, EnumerableLatentModel):
        return EnumerableLatentModel(
            model.theta_labels, model.prior, model.q_u, model.eta + epsilon,
            model.m, model.z_support, model.zeta_table, model.z_probs,
            u_labels=model.u_labels, target=model.target, proposal=model.proposal,
            name=f"{model.name}+eps",
        )
    if isinstance(model, GenerativeLatentModel):
        return GenerativeLatentModel(
            model.theta_labels, model.prior, model.q_u, model.eta + epsilon,
            v_sampler=model.v_sampler, u_labels=model.u_labels, name=f"{model.name}+eps",
        )
    raise TypeError(f"cannot inflate {type(model).__name__}")


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def eval_weights(model: LatentModel, theta: int, u: int, v: VRecord, f: LatentFunction) -> WeightTriple:
    """zeta(f), zetahat(f) and xi(f) for one V-record at (theta, u)."""
    eta = float(model.eta[theta, u])
    zeta_one = v.zeta_one
    if eta == 0 and zeta_one > 0:
        raise SupportViolationError(
            f"zeta(1) = {zeta_one} > 0 where eta(1) = 0",
            witness=(model.theta_labels[theta], model.u_labels[u], v),
        )
    label = model.theta_labels[theta]
    zeta_f = float(sum(w * f(label, z) for w, z in zip(v.zeta, v.z)))
    zetahat_f = zeta_f / zeta_one if zeta_one > 0 else 0.0
    xi_f = zeta_f / eta if eta > 0 else 0.0
    return WeightTriple(zeta_f=zeta_f, zetahat_f=zetahat_f, xi_f=xi_f)


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------

@dataclass
class ModelMeasures:
    """Exact measures and weight tables of an enumerable model.

    Arrays indexed (theta, u) or (theta, u, atom) keep those shapes; the
    FiniteDist fields flatten them in row-major order.
    """
    mu: FiniteDist
    pi: FiniteDist
    mu_bar: FiniteDist
    nu: FiniteDist
    c_eta: float
    c_zeta: float
    c_xi: float
    w: np.ndarray
    w_star: np.ndarray
    m_one: np.ndarray
    m_f: np.ndarray
    m_fbar: np.ndarray
    v_fbar: np.ndarray
    xi_one: np.ndarray
    xi_f: np.ndarray
    zetahat_f: np.ndarray
    nu_f: float
    mu_theta: np.ndarray
    pi_theta: np.ndarray
    nu_theta: np.ndarray
    function: str
    checks: Dict[str, float] = field(default_factory=dict)

    @property
    def xi_fbar(self) -> np.ndarray:
        return self.xi_f - self.nu_f * self.xi_one

    @property
    def snis_weight(self) -> np.ndarray:
        """Unnormalized marginal weight nu_theta / mu_theta over theta."""
        return np.divide(self.nu_theta, self.mu_theta, out=np.zeros_like(self.nu_theta), where=self.mu_theta > 0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "function": self.function,
            "nu_f": self.nu_f,
            "c_eta": self.c_eta,
            "c_zeta": self.c_zeta,
            "c_xi": self.c_xi,
            "w_sup": float(self.w[self.mu_bar.probs.reshape(self.w.shape) > 0].max()),
            "w_star_sup": float(self.w_star[self.mu.probs.reshape(self.w_star.shape) > 0].max()),
            "mu_theta": self.mu_theta.tolist(),
            "nu_theta": self.nu_theta.tolist(),
            "checks": dict(self.checks),
        }


def _require_enumerable(model: LatentModel) -> "EnumerableLatentModel":
    if not isinstance(model, EnumerableLatentModel):
        raise NotEnumerableError(f"model {model.name!r} is {model.mode}; exact quantities need an enumerable model")
    return model


def enumerate_measures(model: LatentModel, f: LatentFunction) -> ModelMeasures:
    """Every exact quantity of an enumerable model for the test function ``f``."""
    model = _require_enumerable(model)
    support = support_check(model)
    if not support.ok:
        raise SupportViolationError(support.message, witness=support.witness)

    prior = model.prior
    eta = model.eta
    v_probs = model.v_probs
    zeta_one = model.v_zeta_one
    zeta_f = model.v_zeta_f(f)
    n_theta, n_u, n_atoms = v_probs.shape

    mu_mass = prior[:, None] * model.q_u * eta
    c_eta = float(mu_mass.sum())
    pi_mass = prior[:, None, None] * model.q_u[:, :, None] * v_probs * zeta_one
    c_zeta = float(pi_mass.sum())
    if not c_zeta > 0:
        raise EmptySupportError("zeta(1) integrates to zero; the target is not normalizable")
    c_xi = c_zeta / c_eta

    positive_eta = eta[:, :, None] > 0
    safe_eta = np.where(eta > 0, eta, 1.0)[:, :, None]
    xi_one = np.where(positive_eta, zeta_one / safe_eta, 0.0)
    xi_f = np.where(positive_eta, zeta_f / safe_eta, 0.0)
    zetahat_f = np.divide(zeta_f, zeta_one, out=np.zeros_like(zeta_f), where=zeta_one > 0)

    f_table = f.table(model.theta_labels, model.z_support)
    nu_mass = np.sum(
        prior[:, None, None] * model.q_u[:, :, None] * model.m * model.z_probs * model.zeta_table,
        axis=1,
    )
    nu_probs = nu_mass / nu_mass.sum()
    nu_f = float(np.sum(nu_probs * f_table))

    m_one = np.sum(v_probs * xi_one, axis=-1)
    m_f = np.sum(v_probs * xi_f, axis=-1)
    xi_fbar = xi_f - nu_f * xi_one
    m_fbar = np.sum(v_probs * xi_fbar, axis=-1)
    v_fbar = np.clip(np.sum(v_probs * xi_fbar ** 2, axis=-1) - m_fbar ** 2, 0.0, None)

    mu_probs = mu_mass / c_eta
    mu_bar_probs = mu_probs[:, :, None] * v_probs
    labels_tu = [(t, u) for t in model.theta_labels for u in model.u_labels]
    labels_tua = [(t, u, a) for t in model.theta_labels for u in model.u_labels for a in range(n_atoms)]
    labels_tz = [(t, z) for t in model.theta_labels for z in model.z_support]

    measures = ModelMeasures(
        mu=FiniteDist(mu_probs.ravel(), labels_tu),
        pi=FiniteDist((pi_mass / c_zeta).ravel(), labels_tua),
        mu_bar=FiniteDist(mu_bar_probs.ravel() / mu_bar_probs.sum(), labels_tua),
        nu=FiniteDist(nu_probs.ravel(), labels_tz),
        c_eta=c_eta,
        c_zeta=c_zeta,
        c_xi=c_xi,
        w=xi_one / c_xi,
        w_star=m_one / c_xi,
        m_one=m_one,
        m_f=m_f,
        m_fbar=m_fbar,
        v_fbar=v_fbar,
        xi_one=xi_one,
        xi_f=xi_f,
        zetahat_f=zetahat_f,
        nu_f=nu_f,
        mu_theta=mu_probs.sum(axis=1),
        pi_theta=(pi_mass / c_zeta).sum(axis=(1, 2)),
        nu_theta=nu_probs.sum(axis=1),
        function=f.name,
    )
    measures.checks = _measure_checks(model, measures, mu_bar_probs)
    return measures


def _measure_checks(model: EnumerableLatentModel, measures: ModelMeasures, mu_bar_probs: np.ndarray) -> Dict[str, float]:
    mu_probs = measures.mu.probs.reshape(measures.w_star.shape)
    checks = {
        "mu_w_minus_one": float(np.sum(mu_bar_probs * measures.w)) - 1.0,
        "mu_w_star_minus_one": float(np.sum(mu_probs * measures.w_star)) - 1.0,
        "mu_m_f_minus_c_xi_nu_f": float(np.sum(mu_probs * measures.m_f)) - measures.c_xi * measures.nu_f,
        "marginal_gap": float(np.max(np.abs(measures.nu_theta - measures.pi_theta))),
    }
    if model.target is not None:
        target = model.target / model.target.sum()
        checks["target_gap"] = float(np.max(np.abs(target - measures.nu.probs.reshape(target.shape))))
        checks["marginal_gap"] = float(np.max(np.abs(target.sum(axis=1) - measures.pi_theta)))
    for key, value in checks.items():
        if abs(value) > NORMALIZATION_TOL:
            logger.warning(f"{model.name}: {key} = {value:.3g} exceeds {NORMALIZATION_TOL}")
    return checks


@dataclass
class SupportCheck:
    """Outcome of the support condition check, with a witness on failure."""
    ok: bool
    checked: int
    witness: Optional[Tuple[Any, Any, Any]] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "checked": self.checked, "witness": repr(self.witness), "message": self.message}


def support_check(model: LatentModel, sample_budget: int = 1000, seed: int = 0) -> SupportCheck:
    """Check that zeta(1) = 0 wherever eta(1) = 0.

    Enumerable models are checked exhaustively; generative models by drawing
    ``sample_budget`` (theta, u, v) triples at zero-eta cells.
    """
    zero_eta = np.argwhere(model.eta == 0)
    if isinstance(model, EnumerableLatentModel):
        for theta, u in zero_eta:
            bad = np.flatnonzero((model.v_probs[theta, u] > 0) & (model.v_zeta_one[theta, u] > 0))
            if bad.size:
                witness = (model.theta_labels[theta], model.u_labels[u], model.v_record(theta, u, int(bad[0])))
                return SupportCheck(False, int(zero_eta.shape[0]), witness, f"zeta(1) > 0 at eta(1) = 0: {witness}")
        return SupportCheck(True, int(zero_eta.shape[0]))

    if zero_eta.size == 0:
        return SupportCheck(True, 0)
    rng = np.random.default_rng(seed)
    for k in range(sample_budget):
        theta, u = zero_eta[k % zero_eta.shape[0]]
        record = model.draw_v(int(theta), int(u), rng)
        if record.zeta_one > 0:
            witness = (model.theta_labels[theta], model.u_labels[u], record)
            return SupportCheck(False, k + 1, witness, f"zeta(1) > 0 at eta(1) = 0: {witness}")
    return SupportCheck(True, sample_budget)
