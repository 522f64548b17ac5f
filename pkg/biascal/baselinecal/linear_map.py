"""
Ridge-regularized affine map between compressed simulation and experiment outputs
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from diffcore import InvalidInputError, SingularSystemError

DEFAULT_RIDGE = 1e-2


@dataclass(frozen=True)
class LinearCalibrator:
    """L(y′) = y′ @ coef + intercept in compressed space."""

    coef: np.ndarray
    intercept: np.ndarray
    ridge: float = DEFAULT_RIDGE

    def __post_init__(self):
        if self.coef.ndim != 2 or self.intercept.shape != (self.coef.shape[1],):
            raise InvalidInputError(
                f"coefficient shape {self.coef.shape} does not match intercept shape {self.intercept.shape}")
        if not (np.all(np.isfinite(self.coef)) and np.all(np.isfinite(self.intercept))):
            raise InvalidInputError("linear map coefficients must be finite")

    @property
    def dim(self) -> int:
        return self.coef.shape[0]

    def apply(self, codes: np.ndarray) -> np.ndarray:
        codes = np.atleast_2d(codes)
        if codes.shape[1] != self.dim:
            raise InvalidInputError(f"linear map expects {self.dim} components, got {codes.shape[1]}")
        return codes @ self.coef + self.intercept


def fit_linear(y_sim: np.ndarray, y_exp: np.ndarray, ridge: float = DEFAULT_RIDGE) -> LinearCalibrator:
    """Minimize ‖y_exp − L(y_sim)‖² + ridge·‖coef‖² in closed form.

    The intercept is left unpenalized by centering both sides first.
    """
    y_sim = np.atleast_2d(np.asarray(y_sim, dtype=np.float64))
    y_exp = np.atleast_2d(np.asarray(y_exp, dtype=np.float64))
    if len(y_sim) < 1 or y_sim.shape != y_exp.shape:
        raise InvalidInputError(
            f"need at least one pair of equally shaped rows, got {y_sim.shape} and {y_exp.shape}")
    if ridge < 0:
        raise InvalidInputError(f"ridge weight must be non-negative, got {ridge}")

    x_mean, y_mean = y_sim.mean(axis=0), y_exp.mean(axis=0)
    xc, yc = y_sim - x_mean, y_exp - y_mean
    dim = y_sim.shape[1]
    if ridge == 0 and np.linalg.matrix_rank(xc) < dim:
        raise SingularSystemError(
            f"{len(y_sim)} samples cannot determine a {dim}-dimensional linear map without regularization; "
            "set the ridge weight above 0")
    gram = xc.T @ xc + ridge * np.eye(dim)
    try:
        coef = linalg.solve(gram, xc.T @ yc, assume_a="pos")
    except linalg.LinAlgError as e:
        raise SingularSystemError(f"ridge normal equations are singular ({e}); set the ridge weight above 0") from e
    return LinearCalibrator(coef=coef, intercept=y_mean - x_mean @ coef, ridge=float(ridge))
