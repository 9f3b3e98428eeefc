"""Seeded samplers and their output estimators."""
from .base_sampler import ALGORITHMS, ChainPath, SamplerSpec, SeedStreams
from .estimators import EstimatorResult, estimate
from .pm_samplers import (
    IS_MODES,
    compress,
    run_base_chain,
    run_da,
    run_is,
    run_pm_parent,
    simulate_batch,
)

__all__ = [
    "ALGORITHMS",
    "ChainPath",
    "EstimatorResult",
    "IS_MODES",
    "SamplerSpec",
    "SeedStreams",
    "compress",
    "estimate",
    "run_base_chain",
    "run_da",
    "run_is",
    "run_pm_parent",
    "simulate_batch",
]
