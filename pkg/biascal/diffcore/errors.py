"""
Exception hierarchy shared by every biascal package
"""

from typing import List, Optional


class BiascalError(Exception):
    """Root of all errors raised on purpose by biascal."""


class InvalidInputError(BiascalError, ValueError):
    """Rejected input: bad shapes, out-of-range values, bad counts."""


class ShapeMismatchError(InvalidInputError):
    """A tensor reached a layer with the wrong shape."""

    def __init__(self, layer: str, expected, got):
        self.layer = layer
        self.expected = tuple(expected) if expected is not None else None
        self.got = tuple(got)
        super().__init__(f"Layer '{layer}': expected shape {self.expected}, got {self.got}")


class SingularSystemError(InvalidInputError):
    """Normal equations could not be solved."""


class NonFiniteGradientError(BiascalError, FloatingPointError):
    """An upstream gradient contained NaN or Inf."""


class TrainingDivergedError(BiascalError, RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, iteration: int, trace: Optional[List[float]] = None):
        self.iteration = iteration
        self.trace = list(trace or [])
        super().__init__(f"Training diverged: non-finite loss at iteration {iteration}")
