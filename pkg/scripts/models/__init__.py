"""Latent-variable models and their exact kernels."""
from .pm_core import (
    EnumerableLatentModel,
    GenerativeLatentModel,
    LatentFunction,
    LatentModel,
    ModelMeasures,
    VRecord,
    enumerate_measures,
    eval_weights,
    inflate,
    resolve_function,
    support_check,
)

__all__ = [
    "EnumerableLatentModel",
    "GenerativeLatentModel",
    "LatentFunction",
    "LatentModel",
    "ModelMeasures",
    "VRecord",
    "enumerate_measures",
    "eval_weights",
    "inflate",
    "resolve_function",
    "support_check",
]
