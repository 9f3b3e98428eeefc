"""
Exact finite transition kernels induced by an enumerable latent model.

    base      approximate PM chain on (theta, u), target mu
    base_bar  base augmented by a fresh V after every step, target mu x Q^V
    da        delayed acceptance on (theta, u, v); V is refreshed on a base hold
    da_screen delayed acceptance as the two-stage algorithm runs it: a base
              hold is a rejection and draws no V
    parent    PM parent on (theta, u, v), target pi
    pm        PM kernel on (theta, v) with the u-mixed proposal Q-hat^V

Every kernel is a Metropolis-Hastings or delayed-acceptance kernel built with
scripts.chains.finite_mcmc, so reversibility is inherited from there. The
prior is the reference density of theta: acceptance ratios carry
prior(theta') / prior(theta), which is 1 for a flat prior.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from scripts.chains.finite_mcmc import FiniteDist, FiniteKernel, augment, build_da, build_mh
from scripts.models.pm_core import (
    EnumerableLatentModel,
    LatentFunction,
    ModelMeasures,
    _require_enumerable,
    enumerate_measures,
)

logger = logging.getLogger(__name__)


def theta_proposal(model: EnumerableLatentModel) -> FiniteKernel:
    return FiniteKernel(model.proposal_rows(), model.theta_labels)


def _pairs(model: EnumerableLatentModel) -> List[Tuple[Any, Any]]:
    return [(t, u) for t in model.theta_labels for u in model.u_labels]


def base_kernel(model: EnumerableLatentModel, q: FiniteKernel, measures: ModelMeasures) -> FiniteKernel:
    """Propose theta' ~ q, u' ~ Q^U(theta'); accept with the eta-ratio."""
    n = model.n_theta * model.n_u
    proposal = (np.repeat(q.rows, model.n_u, axis=0)[:, :, None] * model.q_u[None, :, :]).reshape(n, n)
    return build_mh(FiniteKernel(proposal, _pairs(model)), measures.mu)


def _v_table(model: EnumerableLatentModel) -> np.ndarray:
    return model.v_probs.reshape(model.n_theta * model.n_u, model.n_atoms)


def augmented_base(model: EnumerableLatentModel, base: FiniteKernel, measures: ModelMeasures) -> Tuple[FiniteKernel, FiniteDist]:
    kernel, dist = augment(base, _v_table(model), mu_dot=measures.mu)
    return FiniteKernel(kernel.rows, measures.mu_bar.labels), FiniteDist(dist.probs, measures.mu_bar.labels)


def da_kernel(
    model: EnumerableLatentModel,
    base: FiniteKernel,
    measures: ModelMeasures,
    refresh_on_hold: bool = True,
) -> FiniteKernel:
    """Delayed-acceptance kernel on (theta, u, v) with second-stage ratio w'/w."""
    if refresh_on_hold:
        base_bar, _ = augmented_base(model, base, measures)
        return build_da(base_bar, measures.w.ravel())

    n = model.n_theta * model.n_u
    a = model.n_atoms
    moves = base.rows.copy()
    np.fill_diagonal(moves, 0.0)
    block = moves[:, None, :, None] * _v_table(model)[None, None, :, :]
    block = np.broadcast_to(block, (n, a, n, a)).reshape(n * a, n * a)
    w = measures.w.ravel()
    wi = w[:, None]
    ratio = np.where(wi > 0, np.minimum(1.0, w[None, :] / np.where(wi > 0, wi, 1.0)), 1.0)
    off = block * ratio
    np.fill_diagonal(off, 0.0)
    stay = np.clip(1.0 - off.sum(axis=1), 0.0, None)
    return FiniteKernel(off + np.diag(stay), measures.pi.labels)


def pm_parent_kernel(model: EnumerableLatentModel, q: FiniteKernel, measures: ModelMeasures) -> FiniteKernel:
    """Propose (theta', u', v') jointly; accept with the zeta-ratio."""
    joint = (model.q_u[:, :, None] * model.v_probs).reshape(model.n_theta, -1)
    n = joint.size
    proposal = (np.repeat(q.rows, joint.shape[1], axis=0)[:, :, None] * joint[None, :, :]).reshape(n, n)
    return build_mh(FiniteKernel(proposal, measures.pi.labels), measures.pi)


@dataclass
class PMKernel:
    """PM kernel on (theta, v) with its target and zetahat(f) values."""
    kernel: FiniteKernel
    pi: FiniteDist
    zetahat_f: np.ndarray


def pm_kernel(model: EnumerableLatentModel, q: FiniteKernel, measures: ModelMeasures) -> PMKernel:
    """Collapse u: states are (theta, V-record) with mass from Q-hat^V = sum_u Q^U Q^V."""
    records: List[Dict[Tuple, float]] = []
    zetahat: List[Dict[Tuple, float]] = []
    for t in range(model.n_theta):
        mass: Dict[Tuple, float] = {}
        values: Dict[Tuple, float] = {}
        for u in range(model.n_u):
            for atom in range(model.n_atoms):
                p = model.q_u[t, u] * model.v_probs[t, u, atom]
                if p <= 0:
                    continue
                record = model.v_record(t, u, atom)
                key = (record.z, record.zeta)
                mass[key] = mass.get(key, 0.0) + p
                values[key] = measures.zetahat_f[t, u, atom]
        records.append(mass)
        zetahat.append(values)

    states = [(t, key) for t in range(model.n_theta) for key in sorted(records[t])]
    labels = [(model.theta_labels[t], key[0], key[1]) for t, key in states]
    q_hat = np.array([records[t][key] for t, key in states])
    theta_of = np.array([t for t, _ in states])
    zeta_one = np.array([sum(key[1]) for _, key in states])

    proposal = q.rows[theta_of][:, theta_of] * q_hat[None, :]
    pi = FiniteDist.from_weights(model.prior[theta_of] * q_hat * zeta_one, labels)
    kernel = build_mh(FiniteKernel(proposal, labels), pi)
    return PMKernel(kernel=kernel, pi=pi, zetahat_f=np.array([zetahat[t][key] for t, key in states]))


@dataclass
class ModelKernels:
    """All exact kernels of one enumerable model and proposal."""
    measures: ModelMeasures
    q: FiniteKernel
    base: FiniteKernel
    base_bar: FiniteKernel
    da: FiniteKernel
    da_screen: FiniteKernel
    parent: FiniteKernel
    pm: PMKernel


def build_model_kernels(
    model: EnumerableLatentModel,
    f: LatentFunction,
    q: Optional[FiniteKernel] = None,
    measures: Optional[ModelMeasures] = None,
) -> ModelKernels:
    model = _require_enumerable(model)
    q = q if q is not None else theta_proposal(model)
    measures = measures if measures is not None else enumerate_measures(model, f)
    base = base_kernel(model, q, measures)
    base_bar, _ = augmented_base(model, base, measures)
    logger.debug(f"{model.name}: kernels on {base.n} (theta,u) and {base_bar.n} (theta,u,v) states")
    return ModelKernels(
        measures=measures,
        q=q,
        base=base,
        base_bar=base_bar,
        da=da_kernel(model, base, measures, refresh_on_hold=True),
        da_screen=da_kernel(model, base, measures, refresh_on_hold=False),
        parent=pm_parent_kernel(model, q, measures),
        pm=pm_kernel(model, q, measures),
    )
