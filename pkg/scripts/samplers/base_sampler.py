"""Shared machinery for the seeded lock-step samplers."""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scripts.chains.finite_mcmc import FiniteKernel
from scripts.errors import DimensionMismatchError, InitializationError
from scripts.models.pm_core import LatentFunction, LatentModel, _categorical

logger = logging.getLogger(__name__)

INIT_RETRY_CAP = 1000
ALGORITHMS = ("base", "pm-parent", "da", "is0", "isj-single", "isj-avg")
FRAME_COLUMNS = ["k", "theta", "u", "N", "accepted", "xi1", "xif", "zetahat_f"]


@dataclass
class SeedStreams:
    """Independent generators derived from one root seed.

    ``SeedSequence(seed).spawn(3)`` gives, in order, the initialization,
    base-chain and latent (V) streams.
    """
    init: np.random.Generator
    base: np.random.Generator
    latent: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "SeedStreams":
        init, base, latent = np.random.SeedSequence(seed).spawn(3)
        return cls(np.random.default_rng(init), np.random.default_rng(base), np.random.default_rng(latent))


@dataclass
class SamplerSpec:
    """Proposal over theta, the test functions to record, and a burn-in prefix."""
    q: FiniteKernel
    functions: Tuple[LatentFunction, ...] = ()
    burn_in: int = 0

    def __post_init__(self):
        self.functions = tuple(self.functions)
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")


@dataclass(eq=False)
class ChainPath:
    """One simulated trajectory.

    ``theta`` and ``u`` hold state indices; labels are in ``meta``. ``xi1``
    and ``xif`` are present for importance-sampling paths, ``zetahat`` for
    paths that draw V.
    """
    theta: np.ndarray
    u: np.ndarray
    n_hold: np.ndarray
    accepted: np.ndarray
    xi1: Optional[np.ndarray] = None
    xif: Dict[str, np.ndarray] = field(default_factory=dict)
    zetahat: Dict[str, np.ndarray] = field(default_factory=dict)
    atom: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.n_hold < 1):
            raise ValueError("holding counts must be >= 1")

    def __len__(self) -> int:
        return int(self.theta.size)

    @property
    def algorithm(self) -> str:
        return self.meta.get("algorithm", "unknown")

    @property
    def base_steps(self) -> int:
        return int(self.n_hold.sum())

    def to_frame(self, f_name: Optional[str] = None) -> pd.DataFrame:
        """CSV layout: k, theta, u, N, accepted, xi1, xif, zetahat_f."""
        names = list(self.xif) or list(self.zetahat)
        f_name = f_name or (names[0] if names else None)
        theta_labels = self.meta.get("theta_labels")
        u_labels = self.meta.get("u_labels")
        nan = np.full(len(self), np.nan)
        return pd.DataFrame({
            "k": np.arange(len(self)),
            "theta": [theta_labels[i] for i in self.theta] if theta_labels else self.theta,
            "u": [u_labels[i] for i in self.u] if u_labels else self.u,
            "N": self.n_hold,
            "accepted": self.accepted.astype(int),
            "xi1": self.xi1 if self.xi1 is not None else nan,
            "xif": self.xif.get(f_name, nan),
            "zetahat_f": self.zetahat.get(f_name, nan),
        })

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        f_name: str = "f",
        theta_labels: Optional[Sequence[Any]] = None,
        u_labels: Optional[Sequence[Any]] = None,
        meta: Optional[Dict[str, Any]] = None,
    ) -> "ChainPath":
        missing = [c for c in FRAME_COLUMNS if c not in frame.columns]
        if missing:
            raise DimensionMismatchError(f"path CSV is missing columns {missing}")

        def encode(column: pd.Series, labels: Optional[Sequence[Any]]) -> Tuple[np.ndarray, List[Any]]:
            if labels is None:
                codes, uniques = pd.factorize(column, sort=True)
                return codes.astype(int), list(uniques)
            lookup = {str(label): i for i, label in enumerate(labels)}
            return np.array([lookup[str(x)] for x in column], dtype=int), list(labels)

        theta, theta_labels = encode(frame["theta"], theta_labels)
        u, u_labels = encode(frame["u"], u_labels)
        xi1 = frame["xi1"].to_numpy(dtype=float)
        xif = frame["xif"].to_numpy(dtype=float)
        zetahat = frame["zetahat_f"].to_numpy(dtype=float)
        info = dict(meta or {})
        info.update({"theta_labels": theta_labels, "u_labels": u_labels, "n": len(frame)})
        return cls(
            theta=theta,
            u=u,
            n_hold=frame["N"].to_numpy(dtype=int),
            accepted=frame["accepted"].to_numpy(dtype=int).astype(bool),
            xi1=None if np.all(np.isnan(xi1)) else xi1,
            xif={} if np.all(np.isnan(xif)) else {f_name: xif},
            zetahat={} if np.all(np.isnan(zetahat)) else {f_name: zetahat},
            meta=info,
        )


@dataclass
class LockstepState:
    """Current state of R chains advanced together."""
    theta: np.ndarray
    u: np.ndarray
    eta: np.ndarray
    zeta_one: Optional[np.ndarray] = None
    zeta_f: Optional[np.ndarray] = None
    atom: Optional[np.ndarray] = None


class BaseSampler(ABC):
    """Template for the samplers: initialize R chains, step them in lock-step, slice into paths."""

    algorithm = "base"
    needs_v = False

    def __init__(self, model: LatentModel, spec: SamplerSpec, seed: int):
        if tuple(spec.q.labels) != tuple(model.theta_labels):
            raise DimensionMismatchError("proposal labels must equal the model's theta labels")
        self.model = model
        self.spec = spec
        self.seed = int(seed)
        self.streams = SeedStreams.from_seed(self.seed)
        self.q_rows = spec.q.rows
        self.counters = {"v_draws": 0, "eta_evals": 0, "zeta_evals": 0}

    # -- proposals ---------------------------------------------------------

    def propose(self, state: LockstepState) -> Tuple[np.ndarray, np.ndarray]:
        """theta' ~ q(theta, .), u' ~ Q^U(theta', .) on the base stream."""
        rng = self.streams.base
        theta_p = _categorical(self.q_rows[state.theta], rng)
        u_p = self.model.draw_u(theta_p, rng)
        return theta_p, u_p

    def proposal_factor(self, theta: np.ndarray, theta_p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(prior' q(theta', theta), prior q(theta, theta')) for the acceptance ratio."""
        prior = self.model.prior
        return prior[theta_p] * self.q_rows[theta_p, theta], prior[theta] * self.q_rows[theta, theta_p]

    @staticmethod
    def accept(numerator: np.ndarray, denominator: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        positive = denominator > 0
        ratio = np.where(positive, numerator / np.where(positive, denominator, 1.0), 0.0)
        return rng.random(ratio.shape) < ratio

    def draw_v(self, theta: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        self.counters["v_draws"] += int(theta.size)
        self.counters["zeta_evals"] += int(theta.size)
        return self.model.draw_v_weights(theta, u, self.streams.latent, self.spec.functions)

    # -- initialization ----------------------------------------------------

    def initialize(self, replicates: int) -> LockstepState:
        """theta_0 from the prior; (u_0, v_0) redrawn until the weight is positive."""
        rng = self.streams.init
        model = self.model
        theta = model.draw_theta_prior(replicates, rng)
        u = model.draw_u(theta, rng)
        eta = model.eta_at(theta, u)
        zeta_one = zeta_f = atom = None
        if self.needs_v:
            zeta_one, zeta_f, atom = model.draw_v_weights(theta, u, rng, self.spec.functions)

        for attempt in range(INIT_RETRY_CAP):
            bad = eta <= 0
            if self.needs_v:
                bad |= zeta_one <= 0
            if not np.any(bad):
                break
            idx = np.flatnonzero(bad)
            u[idx] = model.draw_u(theta[idx], rng)
            eta[idx] = model.eta_at(theta[idx], u[idx])
            if self.needs_v:
                z1, zf, at = model.draw_v_weights(theta[idx], u[idx], rng, self.spec.functions)
                zeta_one[idx], zeta_f[:, idx], atom[idx] = z1, zf, at
        else:
            condition = "zeta_0(1) > 0" if self.needs_v else "eta(1) > 0"
            raise InitializationError(
                f"{self.algorithm}: initialise X_0 with {condition} failed after {INIT_RETRY_CAP} redraws"
            )
        return LockstepState(theta=theta, u=u, eta=eta, zeta_one=zeta_one, zeta_f=zeta_f, atom=atom)

    # -- simulation --------------------------------------------------------

    @abstractmethod
    def step(self, state: LockstepState) -> np.ndarray:
        """Advance every chain one step in place; return the acceptance indicators."""

    def simulate(self, n: int, replicates: int = 1) -> List[ChainPath]:
        if n < 1:
            raise ValueError("n must be positive")
        state = self.initialize(replicates)
        burn_in = self.spec.burn_in
        k_funcs = len(self.spec.functions)
        theta = np.empty((n, replicates), dtype=np.int32)
        u = np.empty((n, replicates), dtype=np.int32)
        accepted = np.empty((n, replicates), dtype=bool)
        if self.needs_v:
            zeta_one = np.empty((n, replicates))
            zeta_f = np.empty((k_funcs, n, replicates))
            atom = np.empty((n, replicates), dtype=np.int32)

        for k in range(-burn_in, n):
            flags = self.step(state)
            if k < 0:
                continue
            theta[k], u[k], accepted[k] = state.theta, state.u, flags
            if self.needs_v:
                zeta_one[k] = state.zeta_one
                zeta_f[:, k] = state.zeta_f
                atom[k] = state.atom

        paths = []
        for r in range(replicates):
            zetahat: Dict[str, np.ndarray] = {}
            path_atom = None
            if self.needs_v:
                z1 = zeta_one[:, r]
                for j, fn in enumerate(self.spec.functions):
                    zetahat[fn.name] = np.divide(zeta_f[j, :, r], z1, out=np.zeros(n), where=z1 > 0)
                path_atom = atom[:, r].copy()
            paths.append(ChainPath(
                theta=theta[:, r].copy(),
                u=u[:, r].copy(),
                n_hold=np.ones(n, dtype=int),
                accepted=accepted[:, r].copy(),
                zetahat=zetahat,
                atom=path_atom,
                meta=self.meta(n, r, replicates),
            ))
        logger.debug(f"{self.algorithm}: {replicates} path(s) of {n} steps, counters {self.counters}")
        return paths

    def meta(self, n: int, replicate: int, replicates: int) -> Dict[str, Any]:
        share = {key: value / replicates for key, value in self.counters.items()}
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "replicate": replicate,
            "n": n,
            "burn_in": self.spec.burn_in,
            "model": self.model.name,
            "theta_labels": list(self.model.theta_labels),
            "u_labels": list(self.model.u_labels),
            "functions": [fn.name for fn in self.spec.functions],
            "cost": share,
        }
