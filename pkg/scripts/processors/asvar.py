"""
Empirical asymptotic-variance estimators for a scalar chain output.

    batch_means_asvar       non-overlapping batch means, batch_count = floor(n^(1/3)) by default
    initial_sequence_asvar  autocovariances summed up to the first negative pair sum

Both return an AsvarEstimate; ``value`` estimates the limiting variance of
sqrt(n) times the ergodic average error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy import fft

MIN_PAIR_LAG = 1


@dataclass
class AsvarEstimate:
    """Asymptotic-variance value with its method tag and optional components."""
    value: float
    method: str
    standard_error: float = math.nan
    components: Optional[Dict[str, float]] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0 and not math.isclose(self.value, 0.0, abs_tol=1e-12):
            raise ValueError(f"asymptotic variance must be nonnegative, got {self.value}")
        self.value = max(float(self.value), 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "se": self.standard_error,
            "method": self.method,
            "components": dict(self.components) if self.components is not None else None,
            **({"meta": self.meta} if self.meta else {}),
        }


def _as_series(values: Sequence[float]) -> np.ndarray:
    series = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(series)):
        raise ValueError("chain output contains non-finite values")
    return series


def default_batch_count(n: int) -> int:
    return max(int(math.floor(n ** (1.0 / 3.0) + 1e-9)), 2)


def batch_means_asvar(values: Sequence[float], batch_count: Optional[int] = None) -> AsvarEstimate:
    """b * sum_j (Ybar_j - Ybar)^2 / (a - 1) over a batches of size b = floor(n / a).

    The standard error treats the a batch means as approximately iid normal,
    giving value * sqrt(2 / (a - 1)).
    """
    series = _as_series(values)
    n = series.size
    a = default_batch_count(n) if batch_count is None else int(batch_count)
    if a < 2:
        raise ValueError("batch_count must be at least 2")
    if n < 2 * a:
        raise ValueError(f"need at least {2 * a} values for {a} batches, got {n}")
    b = n // a
    means = series[: a * b].reshape(a, b).mean(axis=1)
    value = b * float(np.sum((means - means.mean()) ** 2)) / (a - 1)
    return AsvarEstimate(
        value=value,
        method="batch-means",
        standard_error=value * math.sqrt(2.0 / (a - 1)),
        meta={"n": n, "batch_count": a, "batch_size": b},
    )


def autocovariance(series: np.ndarray) -> np.ndarray:
    """Biased (1/n) autocovariance at every lag, via zero-padded FFT."""
    n = series.size
    centered = series - series.mean()
    size = fft.next_fast_len(2 * n)
    spectrum = fft.rfft(centered, n=size)
    return fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n] / n


def initial_sequence_asvar(values: Sequence[float]) -> AsvarEstimate:
    """Initial positive sequence estimator for reversible chains.

    Pair sums Gamma_k = gamma_2k + gamma_2k+1 are accumulated until the
    first negative one; the estimate is -gamma_0 + 2 sum_k Gamma_k.
    """
    series = _as_series(values)
    n = series.size
    if n < 2:
        raise ValueError("need at least 2 values")
    gamma = autocovariance(series)
    if gamma[0] == 0:
        return AsvarEstimate(value=0.0, method="initial-sequence", standard_error=0.0, meta={"n": n, "pairs": 0})
    pairs = gamma[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    negative = np.flatnonzero(pairs[MIN_PAIR_LAG:] < 0)
    stop = MIN_PAIR_LAG + int(negative[0]) if negative.size else pairs.size
    value = -gamma[0] + 2.0 * float(pairs[:stop].sum())
    # Bartlett-type approximation for the spread of a truncated autocovariance sum
    lags = 2 * stop
    se = max(value, 0.0) * math.sqrt(2.0 * (2 * lags + 1) / n)
    return AsvarEstimate(value=max(value, 0.0), method="initial-sequence", standard_error=se, meta={"n": n, "pairs": stop})
