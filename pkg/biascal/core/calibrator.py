"""
Base class for calibrators that correct a trained surrogate against experiments
"""

from abc import ABC, abstractmethod
from typing import Any, Dict


class BaseCalibrator(ABC):
    """Common interface of the transfer-learning and baseline calibrators.

    A calibrator is a stateless recipe: `fit` returns a fitted object for one
    set of training experiments, `predict` applies a fitted object to design
    inputs. The cross-validation harness drives every calibrator the same way
    through `run`.
    """

    def __init__(self, surrogate):
        self.surrogate = surrogate
        self.name = self.__class__.__name__

    @abstractmethod
    def fit(self, experiments, seed: int) -> Any:
        """Fit on the training experiments of one split."""

    @abstractmethod
    def predict(self, fitted: Any, x):
        """Calibrated MultiModalOutput for physical inputs x."""

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name}

    def run(self, train, x_validation, seed: int):
        """Fit on `train` and predict `x_validation`; returns (fitted, prediction)."""
        fitted = self.fit(train, seed)
        return fitted, self.predict(fitted, x_validation)
