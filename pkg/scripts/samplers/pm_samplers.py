"""
Seeded simulation of the approximate-PM base chain, the PM parent,
delayed acceptance and the importance-sampling scheme (IS0, ISJ).

Every runner advances R replicate chains in lock-step; ``run_*`` with the
default ``replicates=1`` returns one ChainPath, ``simulate_batch`` returns R.

Usage:
    from scripts.models.presets import two_coin
    from scripts.models.pm_core import resolve_function
    from scripts.samplers.pm_samplers import run_is

    model = two_coin()
    path = run_is(model, None, n=10_000, seed=1, mode="isj-avg", functions=[resolve_function("theta")])
"""
from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from scripts.chains.finite_mcmc import FiniteKernel
from scripts.models.pm_core import EnumerableLatentModel, LatentFunction, LatentModel
from scripts.samplers.base_sampler import (
    BaseSampler,
    ChainPath,
    LockstepState,
    SamplerSpec,
)

logger = logging.getLogger(__name__)

IS_MODES = ("is0", "isj-single", "isj-avg")


class BaseChainSampler(BaseSampler):
    """Approximate PM chain on (theta, u) targeting mu."""

    algorithm = "base"
    needs_v = False

    def step(self, state: LockstepState) -> np.ndarray:
        theta_p, u_p = self.propose(state)
        eta_p = self.model.eta_at(theta_p, u_p)
        self.counters["eta_evals"] += int(theta_p.size)
        forward, backward = self.proposal_factor(state.theta, theta_p)
        accepted = self.accept(eta_p * forward, state.eta * backward, self.streams.base)
        state.theta = np.where(accepted, theta_p, state.theta)
        state.u = np.where(accepted, u_p, state.u)
        state.eta = np.where(accepted, eta_p, state.eta)
        return accepted


class PMParentSampler(BaseSampler):
    """Propose (theta', u', v') jointly; accept with the zeta(1) ratio."""

    algorithm = "pm-parent"
    needs_v = True

    def step(self, state: LockstepState) -> np.ndarray:
        theta_p, u_p = self.propose(state)
        zeta_one_p, zeta_f_p, atom_p = self.draw_v(theta_p, u_p)
        forward, backward = self.proposal_factor(state.theta, theta_p)
        accepted = self.accept(zeta_one_p * forward, state.zeta_one * backward, self.streams.base)
        state.theta = np.where(accepted, theta_p, state.theta)
        state.u = np.where(accepted, u_p, state.u)
        state.eta = np.where(accepted, self.model.eta_at(theta_p, u_p), state.eta)
        state.zeta_one = np.where(accepted, zeta_one_p, state.zeta_one)
        state.zeta_f = np.where(accepted[None, :], zeta_f_p, state.zeta_f)
        state.atom = np.where(accepted, atom_p, state.atom)
        return accepted


class DASampler(BaseSampler):
    """Two-stage delayed acceptance.

    Stage 1 is one base-chain step. A base hold, whether a rejection or a
    proposal of the current (theta, u), rejects without drawing V. Stage 2
    accepts with min{1, xi'(1) / xi(1)}.
    """

    algorithm = "da"
    needs_v = True

    def step(self, state: LockstepState) -> np.ndarray:
        theta_p, u_p = self.propose(state)
        eta_p = self.model.eta_at(theta_p, u_p)
        self.counters["eta_evals"] += int(theta_p.size)
        forward, backward = self.proposal_factor(state.theta, theta_p)
        screened = self.accept(eta_p * forward, state.eta * backward, self.streams.base)
        screened &= (theta_p != state.theta) | (u_p != state.u)

        accepted = np.zeros(theta_p.size, dtype=bool)
        idx = np.flatnonzero(screened)
        if idx.size:
            zeta_one_p, zeta_f_p, atom_p = self.draw_v(theta_p[idx], u_p[idx])
            xi_p = zeta_one_p / eta_p[idx]
            xi = state.zeta_one[idx] / state.eta[idx]
            second = self.accept(xi_p, xi, self.streams.latent)
            chosen = idx[second]
            accepted[chosen] = True
            state.theta[chosen] = theta_p[chosen]
            state.u[chosen] = u_p[chosen]
            state.eta[chosen] = eta_p[chosen]
            state.zeta_one[chosen] = zeta_one_p[second]
            state.zeta_f[:, chosen] = zeta_f_p[:, second]
            state.atom[chosen] = atom_p[second]
        return accepted


def _spec(model: LatentModel, spec: Union[SamplerSpec, FiniteKernel, None], functions: Sequence[LatentFunction]) -> SamplerSpec:
    """Accept a full spec, a bare theta proposal, or None for the model's default proposal."""
    if isinstance(spec, SamplerSpec):
        if functions:
            spec = SamplerSpec(spec.q, tuple(spec.functions) + tuple(functions), spec.burn_in)
        return spec
    if spec is None:
        if not isinstance(model, EnumerableLatentModel):
            raise ValueError("generative models need an explicit theta proposal")
        spec = FiniteKernel(model.proposal_rows(), model.theta_labels)
    return SamplerSpec(q=spec, functions=tuple(functions))


SAMPLERS = {
    "base": BaseChainSampler,
    "pm-parent": PMParentSampler,
    "da": DASampler,
}


def simulate_batch(
    algorithm: str,
    model: LatentModel,
    spec: Union[SamplerSpec, FiniteKernel, None],
    n: int,
    seed: int,
    replicates: int = 1,
    functions: Sequence[LatentFunction] = (),
) -> List[ChainPath]:
    """R replicate paths of any algorithm, including the IS modes."""
    spec = _spec(model, spec, functions)
    if algorithm in IS_MODES:
        return _simulate_is(model, spec, n, seed, algorithm, replicates)
    try:
        sampler = SAMPLERS[algorithm](model, spec, seed)
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(SAMPLERS) + list(IS_MODES)}") from None
    return sampler.simulate(n, replicates)


def run_base_chain(model, q=None, n: int = 1000, seed: int = 0, functions=(), replicates: int = 1):
    paths = simulate_batch("base", model, q, n, seed, replicates, functions)
    return paths[0] if replicates == 1 else paths


def run_pm_parent(model, q=None, n: int = 1000, seed: int = 0, functions=(), replicates: int = 1):
    paths = simulate_batch("pm-parent", model, q, n, seed, replicates, functions)
    return paths[0] if replicates == 1 else paths


def run_da(model, spec=None, n: int = 1000, seed: int = 0, functions=(), replicates: int = 1):
    paths = simulate_batch("da", model, spec, n, seed, replicates, functions)
    return paths[0] if replicates == 1 else paths


def run_is(model, spec=None, n: int = 1000, seed: int = 0, mode: str = "is0", functions=(), replicates: int = 1):
    """Importance-sampling scheme on top of the base chain.

    is0 draws one V at every base step. The ISJ modes compress the base path
    into its jump chain (distinct successive states with holding counts N_k);
    isj-single draws one V per jump state, isj-avg draws N_k and averages.
    The base path depends only on the seed, so is0 and isj runs with the same
    seed share it.
    """
    if mode not in IS_MODES:
        raise ValueError(f"unknown IS mode {mode!r}; choose from {IS_MODES}")
    paths = simulate_batch(mode, model, spec, n, seed, replicates, functions)
    return paths[0] if replicates == 1 else paths


def compress(theta: np.ndarray, u: np.ndarray) -> Dict[str, np.ndarray]:
    """Jump-chain compression: start index and holding count of each distinct run."""
    change = np.ones(theta.size, dtype=bool)
    change[1:] = (theta[1:] != theta[:-1]) | (u[1:] != u[:-1])
    starts = np.flatnonzero(change)
    hold = np.diff(np.append(starts, theta.size))
    return {"starts": starts, "hold": hold}


def _simulate_is(model: LatentModel, spec: SamplerSpec, n: int, seed: int, mode: str, replicates: int) -> List[ChainPath]:
    sampler = BaseChainSampler(model, spec, seed)
    base_paths = sampler.simulate(n, replicates)
    latent = sampler.streams.latent
    functions = spec.functions

    paths: List[ChainPath] = []
    for base in base_paths:
        if mode == "is0":
            theta, u, hold = base.theta, base.u, base.n_hold
            accepted = base.accepted
            draws = np.ones(theta.size, dtype=int)
        else:
            runs = compress(base.theta, base.u)
            theta, u, hold = base.theta[runs["starts"]], base.u[runs["starts"]], runs["hold"]
            accepted = np.ones(theta.size, dtype=bool)
            accepted[0] = bool(base.accepted[0])
            draws = hold if mode == "isj-avg" else np.ones(theta.size, dtype=int)

        expanded_theta = np.repeat(theta, draws)
        expanded_u = np.repeat(u, draws)
        zeta_one, zeta_f, _ = model.draw_v_weights(expanded_theta, expanded_u, latent, functions)
        sampler.counters["v_draws"] += int(expanded_theta.size)
        sampler.counters["zeta_evals"] += int(expanded_theta.size)
        offsets = np.concatenate([[0], np.cumsum(draws)[:-1]])
        zeta_one = np.add.reduceat(zeta_one, offsets) / draws
        zeta_f = (np.add.reduceat(zeta_f, offsets, axis=1) / draws) if functions else zeta_f

        eta = model.eta_at(theta, u)
        xi1 = zeta_one / eta
        meta = dict(base.meta)
        cost = dict(meta.get("cost", {}))
        cost.update({"v_draws": float(draws.sum()), "zeta_evals": float(draws.sum())})
        meta.update({
            "algorithm": mode,
            "base_steps": int(hold.sum()),
            "v_draws": int(draws.sum()),
            "cost": cost,
        })
        paths.append(ChainPath(
            theta=theta,
            u=u,
            n_hold=hold,
            accepted=accepted,
            xi1=xi1,
            xif={fn.name: zeta_f[j] / eta for j, fn in enumerate(functions)},
            zetahat={
                fn.name: np.divide(zeta_f[j], zeta_one, out=np.zeros(theta.size), where=zeta_one > 0)
                for j, fn in enumerate(functions)
            },
            meta=meta,
        ))
    logger.debug(f"{mode}: {len(paths)} path(s) from {n} base steps each")
    return paths
