"""
Output estimators of nu(f) from a simulated path.

    PM    (1/n) sum_k zetahat_k(f)
    IS    sum_k N_k xi_k(f) / sum_k N_k xi_k(1)
    SNIS  sum_k N_k w_u(theta_k) f(theta_k) / sum_k N_k w_u(theta_k)

Standard errors come from batch means of the linearized output.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from scripts.errors import DimensionMismatchError, ZeroNormalizerError
from scripts.models.pm_core import LatentFunction, LatentModel, enumerate_measures, resolve_function
from scripts.processors.asvar import batch_means_asvar
from scripts.samplers.base_sampler import ChainPath

logger = logging.getLogger(__name__)

KINDS = ("PM", "IS", "SNIS")
MIN_SE_BATCHES = 2


@dataclass
class EstimatorResult:
    value: float
    n_effective: int
    normalizer: float
    se: float = math.nan
    kind: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "value": self.value,
            "se": self.se,
            "n_effective": self.n_effective,
            "normalizer": self.normalizer,
        }


def _name(f: Union[str, LatentFunction]) -> str:
    return f if isinstance(f, str) else f.name


def _batch_se(linearized: np.ndarray, scale: float) -> float:
    """sqrt(asvar / n) of the linearized output, divided by ``scale``."""
    n = linearized.size
    if n < 2 * MIN_SE_BATCHES:
        return math.nan
    batches = max(MIN_SE_BATCHES, int(n ** (1.0 / 3.0)))
    return math.sqrt(batch_means_asvar(linearized, batches).value / n) / scale


def snis_weights(model: LatentModel, f: Union[str, LatentFunction] = "one") -> np.ndarray:
    """Marginal weights nu_theta / mu_theta of an enumerable model."""
    fn = resolve_function(f) if isinstance(f, str) else f
    return enumerate_measures(model, fn).snis_weight


def _theta_values(path: ChainPath, f: Union[str, LatentFunction]) -> np.ndarray:
    fn = resolve_function(f) if isinstance(f, str) else f
    if fn.depends_on_z:
        raise ValueError(f"SNIS needs a function of theta only; {fn.name!r} depends on z")
    labels = path.meta.get("theta_labels")
    if labels is None:
        raise DimensionMismatchError("path meta carries no theta labels")
    table = np.array([fn(t, 0.0) for t in labels])
    return table[path.theta]


def estimate(
    path: ChainPath,
    kind: str,
    f: Union[str, LatentFunction],
    weight: Optional[Sequence[float]] = None,
    model: Optional[LatentModel] = None,
) -> EstimatorResult:
    """PM, IS or SNIS estimate of nu(f) from ``path``.

    SNIS weights are per-theta; pass them as ``weight`` or give an enumerable
    ``model`` to derive them.
    """
    kind = kind.upper()
    name = _name(f)
    hold = path.n_hold.astype(float)

    if kind == "PM":
        if name not in path.zetahat:
            raise ValueError(f"path has no zetahat values for {name!r}; run a PM or DA sampler with that function")
        values = path.zetahat[name]
        total = float(hold.sum())
        value = float(np.sum(hold * values)) / total
        return EstimatorResult(value, len(path), total, _batch_se(values - value, 1.0), "PM")

    if kind == "IS":
        if path.xi1 is None or name not in path.xif:
            raise ValueError(f"path has no xi values for {name!r}; run an IS sampler with that function")
        numerator = hold * path.xif[name]
        denominator = hold * path.xi1
    elif kind == "SNIS":
        if weight is None:
            if model is None:
                raise ValueError("SNIS needs explicit weights or an enumerable model")
            weight = snis_weights(model, f)
        weight = np.asarray(weight, dtype=float)
        if weight.shape != (len(path.meta.get("theta_labels", ())),):
            raise DimensionMismatchError("SNIS weights must have one entry per theta label")
        denominator = hold * weight[path.theta]
        numerator = denominator * _theta_values(path, f)
    else:
        raise ValueError(f"unknown estimator kind {kind!r}; choose from {KINDS}")

    normalizer = float(denominator.sum())
    if not normalizer > 0:
        raise ZeroNormalizerError(f"{kind} normalizer is {normalizer}: no weight mass observed on the path")
    value = float(numerator.sum()) / normalizer
    se = _batch_se(numerator - value * denominator, normalizer / len(path))
    return EstimatorResult(value, len(path), normalizer, se, kind)
