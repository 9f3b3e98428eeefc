"""Exception types shared by the asvar-lab scripts."""
from __future__ import annotations

from typing import Any, List, Optional, Sequence


class AsvarLabError(Exception):
    """Base class for every error raised by asvar-lab."""


class NotStochasticError(AsvarLabError, ValueError):
    """A kernel row or a distribution does not sum to one, or has negative mass."""


class DimensionMismatchError(AsvarLabError, ValueError):
    """Two objects that must share state labels do not."""


class NotReversibleError(AsvarLabError, ValueError):
    """Detailed balance fails for a kernel/measure pair."""


class ReducibleKernelError(AsvarLabError, ValueError):
    """A kernel has more than one recurrent class."""

    def __init__(self, classes: Sequence[Sequence[Any]]):
        self.classes: List[List[Any]] = [list(c) for c in classes]
        super().__init__(f"kernel has {len(self.classes)} recurrent classes: {self.classes}")


class EmptySupportError(AsvarLabError, ValueError):
    """The stationary measure puts no mass anywhere."""


class AbsorbingStateError(AsvarLabError, ValueError):
    """The jump chain is undefined because a state never leaves."""


class AbsoluteContinuityError(AsvarLabError, ValueError):
    """Some state has target mass but no approximate mass."""


class SupportViolationError(AsvarLabError, ValueError):
    """zeta(1) > 0 where eta(1) = 0."""

    def __init__(self, message: str, witness: Optional[Any] = None):
        self.witness = witness
        super().__init__(message)


class InitializationError(AsvarLabError, RuntimeError):
    """A sampler could not find a starting point with positive weight."""


class ZeroNormalizerError(AsvarLabError, ZeroDivisionError):
    """A ratio estimator observed no weight mass."""


class NotEnumerableError(AsvarLabError, TypeError):
    """An exact computation was requested for a sampling-only model."""


class InconsistentComputationError(AsvarLabError, ArithmeticError):
    """Two independent exact routes disagree beyond tolerance."""


class ConfigError(AsvarLabError, ValueError):
    """A model or kernel document failed validation."""
