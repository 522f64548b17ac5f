"""
Input/output schema of the toy campaign: design inputs, multi-modal outputs, datasets
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from diffcore import InvalidInputError

# Percent-valued inputs are stored as fractions (1% -> 0.01).
INPUT_RANGES: Dict[str, Tuple[float, float]] = {
    "scale": (0.8, 1.6),
    "asym_mode10": (0.0, 0.01),
    "asym_mode20_t1": (-0.06, 0.0),
    "asym_mode20_t2": (-0.06, 0.06),
    "trough_adj": (-0.2, 0.5),
    "power_adj": (-0.25, 0.5),
    "energy_adj": (-0.25, 0.5),
    "preheat": (0.0, 50.0),
    "dopant_fraction": (0.001, 0.0035),
}
INPUT_NAMES: List[str] = list(INPUT_RANGES)

SCALAR_NAMES: List[str] = [
    "BT_GRH",
    "BT_SPIDER",
    "DSR_AV",
    "DT_TION_AV",
    "P0_HGXD_090-078_TI",
    "DT_VEL_NTOF_161-056",
    "LOG10_XRAY_YIELD_22KEV",
    "LOG10_DT_YIELD_AV",
    "BW_GRH",
    "BW_SPIDER",
]

N_INPUTS = len(INPUT_NAMES)
N_SCALARS = len(SCALAR_NAMES)
RANGE_TOL = 1e-12


def input_bounds(names: Optional[Sequence[str]] = None) -> Tuple[np.ndarray, np.ndarray]:
    names = INPUT_NAMES if names is None else list(names)
    lo = np.array([INPUT_RANGES[n][0] for n in names])
    hi = np.array([INPUT_RANGES[n][1] for n in names])
    return lo, hi


def out_of_range(values: np.ndarray, names: Optional[Sequence[str]] = None) -> List[str]:
    """Names of the input columns holding at least one out-of-range value."""
    lo, hi = input_bounds(names)
    values = np.atleast_2d(values)
    bad = np.any((values < lo - RANGE_TOL) | (values > hi + RANGE_TOL), axis=0)
    names = INPUT_NAMES if names is None else list(names)
    return [n for n, b in zip(names, bad) if b]


def check_fixed(fixed: Mapping[str, float]) -> None:
    for name, value in fixed.items():
        if name not in INPUT_RANGES:
            raise InvalidInputError(f"unknown input '{name}'; expected one of {INPUT_NAMES}")
        lo, hi = INPUT_RANGES[name]
        if not (lo - RANGE_TOL <= value <= hi + RANGE_TOL):
            raise InvalidInputError(f"fixed value {name}={value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class DesignPoint:
    """One point of the nine-dimensional design space."""

    scale: float
    asym_mode10: float
    asym_mode20_t1: float
    asym_mode20_t2: float
    trough_adj: float
    power_adj: float
    energy_adj: float
    preheat: float
    dopant_fraction: float

    def __post_init__(self):
        bad = out_of_range(self.as_array())
        if bad:
            raise InvalidInputError(f"design point out of range for {bad}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in INPUT_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "DesignPoint":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (N_INPUTS,):
            raise InvalidInputError(f"design point needs {N_INPUTS} values, got shape {values.shape}")
        return cls(**{n: float(v) for n, v in zip(INPUT_NAMES, values)})


@dataclass
class MultiModalOutput:
    """Scalars, image and measurement errors of one shot or a batch of shots.

    Arrays may carry a leading batch axis. `sigma` is None for model
    predictions, which have no measurement error.
    """

    scalars: np.ndarray
    image: np.ndarray
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        self.scalars = np.asarray(self.scalars, dtype=np.float64)
        self.image = np.asarray(self.image, dtype=np.float64)
        if self.scalars.shape[-1:] != (N_SCALARS,):
            raise InvalidInputError(f"expected {N_SCALARS} scalars, got shape {self.scalars.shape}")
        if self.image.ndim != self.scalars.ndim + 1 or self.image.shape[-1] != self.image.shape[-2]:
            raise InvalidInputError(f"image must be square per sample, got shape {self.image.shape}")
        if not (np.all(np.isfinite(self.scalars)) and np.all(np.isfinite(self.image))):
            raise InvalidInputError("outputs must be finite")
        if np.any(self.image < 0):
            raise InvalidInputError("image intensities must be non-negative")
        if self.sigma is not None:
            self.sigma = np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), self.scalars.shape).copy()
            if np.any(self.sigma <= 0):
                raise InvalidInputError("sigma must be strictly positive")

    @property
    def batched(self) -> bool:
        return self.scalars.ndim == 2

    @property
    def side(self) -> int:
        return self.image.shape[-1]

    def __len__(self) -> int:
        return len(self.scalars) if self.batched else 1

    def row(self, i: int) -> "MultiModalOutput":
        if not self.batched:
            raise InvalidInputError("row() needs a batched output")
        sigma = None if self.sigma is None else self.sigma[i]
        return MultiModalOutput(self.scalars[i], self.image[i], sigma)


@dataclass
class Dataset:
    """Columnar container of n shots (simulations or experiments).

    `image_scale` holds the per-image mean removed by normalization so images
    can be mapped back; it is None for raw datasets.
    """

    inputs: np.ndarray
    scalars: np.ndarray
    sigmas: np.ndarray
    images: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)
    normalized: bool = False
    image_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.scalars = np.asarray(self.scalars, dtype=np.float64)
        self.sigmas = np.asarray(self.sigmas, dtype=np.float64)
        self.images = np.asarray(self.images, dtype=np.float64)
        n = len(self.inputs)
        if self.inputs.shape != (n, N_INPUTS):
            raise InvalidInputError(f"inputs must be (n, {N_INPUTS}), got {self.inputs.shape}")
        if self.scalars.shape != (n, N_SCALARS) or self.sigmas.shape != (n, N_SCALARS):
            raise InvalidInputError(
                f"scalars and sigmas must be (n, {N_SCALARS}), got {self.scalars.shape} and {self.sigmas.shape}")
        if self.images.ndim != 3 or len(self.images) != n or self.images.shape[1] != self.images.shape[2]:
            raise InvalidInputError(f"images must be (n, side, side), got {self.images.shape}")
        if np.any(self.sigmas <= 0):
            raise InvalidInputError("sigmas must be strictly positive")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def side(self) -> int:
        return self.images.shape[-1]

    def subset(self, idx: Sequence[int]) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        scale = None if self.image_scale is None else self.image_scale[idx]
        return replace(self, inputs=self.inputs[idx], scalars=self.scalars[idx], sigmas=self.sigmas[idx],
                       images=self.images[idx], meta=dict(self.meta), image_scale=scale)

    def point(self, i: int) -> DesignPoint:
        return DesignPoint.from_array(self.inputs[i])

    def outputs(self) -> MultiModalOutput:
        return MultiModalOutput(self.scalars, self.images, self.sigmas)

    def output(self, i: int) -> MultiModalOutput:
        return MultiModalOutput(self.scalars[i], self.images[i], self.sigmas[i])

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            raise InvalidInputError("nothing to concatenate")
        scale = None
        if all(p.image_scale is not None for p in parts):
            scale = np.concatenate([p.image_scale for p in parts])
        return cls(
            inputs=np.concatenate([p.inputs for p in parts]),
            scalars=np.concatenate([p.scalars for p in parts]),
            sigmas=np.concatenate([p.sigmas for p in parts]),
            images=np.concatenate([p.images for p in parts]),
            meta=dict(parts[0].meta),
            normalized=parts[0].normalized,
            image_scale=scale,
        )
