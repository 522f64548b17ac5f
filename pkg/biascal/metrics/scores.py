"""
Scalar scores: R², χ²/N and bulk shift
"""

import numpy as np

from diffcore import InvalidInputError


def _pair(obs, pred):
    obs = np.asarray(obs, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if obs.shape != pred.shape:
        raise InvalidInputError(f"observed shape {obs.shape} and predicted shape {pred.shape} differ")
    return obs, pred


def r2(obs, pred) -> float:
    """Coefficient of determination; multi-dimensional inputs are pooled element-wise."""
    obs, pred = _pair(obs, pred)
    obs, pred = obs.ravel(), pred.ravel()
    if obs.size < 2:
        raise InvalidInputError(f"R² needs at least 2 values, got {obs.size}")
    ss_tot = float(np.sum((obs - obs.mean()) ** 2))
    if ss_tot == 0.0:
        raise InvalidInputError("R² is undefined for constant observations")
    return 1.0 - float(np.sum((obs - pred) ** 2)) / ss_tot


def r2_columns(obs, pred) -> np.ndarray:
    """R² per column of (n, k) arrays."""
    obs, pred = _pair(obs, pred)
    return np.array([r2(obs[:, j], pred[:, j]) for j in range(obs.shape[1])])


def chi2n(obs, pred, sigma) -> float:
    """(1/N) Σ ((obs - pred) / σ)² over the N samples of a vector."""
    obs, pred = _pair(obs, pred)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), obs.shape)
    if np.any(sigma <= 0):
        raise InvalidInputError("measurement errors must be strictly positive")
    if obs.size == 0:
        raise InvalidInputError("χ²/N of an empty sample")
    return float(np.mean(((obs - pred) / sigma) ** 2))


def chi2n_columns(obs, pred, sigma) -> np.ndarray:
    obs, pred = _pair(obs, pred)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), obs.shape)
    return np.array([chi2n(obs[:, j], pred[:, j], sigma[:, j]) for j in range(obs.shape[1])])


def bulk_shift(obs, pred) -> np.ndarray:
    """|mean(pred - obs)| / std(obs) per column (or for a single vector)."""
    obs, pred = _pair(obs, pred)
    std = obs.std(axis=0)
    if np.any(std == 0):
        raise InvalidInputError("bulk shift is undefined for constant observations")
    return np.abs((pred - obs).mean(axis=0)) / std
