"""
Deterministic toy simulator standing in for the radiation-hydrodynamics database.

Scalars are smooth nonlinear functions of the nine inputs; the image is an
elliptical super-Gaussian hot spot. All constants come from a versioned
coefficient manifest (generator_v1.json by default).
"""

import json
import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

from diffcore import InvalidInputError

from .schema import INPUT_NAMES, N_INPUTS, MultiModalOutput, DesignPoint, input_bounds, out_of_range

_log = logging.getLogger(__name__)

DEFAULT_MANIFEST = Path(__file__).with_name("generator_v1.json")

REQUIRED_COEFFICIENTS = (
    "drive_energy", "drive_power", "drive_trough", "asym_m10", "asym_m20",
    "vel_0", "vel_dopant", "vel_preheat",
    "tion_0", "tion_scale", "tion_preheat", "tion_cross", "tion_asym",
    "bt_0", "bt_drive", "bt_preheat",
    "dsr_0", "dsr_dopant", "dsr_preheat", "dsr_scale", "dsr_asym",
    "r_0", "r_preheat", "r_asym",
    "xy_0", "xy_scale", "xy_cross", "xy_drive", "xy_preheat", "xy_asym",
    "dt_0", "dt_scale", "dt_cross", "dt_drive", "dt_preheat", "dt_asym", "dt_dopant",
    "bwg_0", "bwg_preheat", "bws_0", "bws_preheat", "bws_asym",
)


class ImagePhysics(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    field_of_view: float = Field(gt=0)
    falloff_exponent: float = Field(gt=0)
    ellipticity_gain: float
    ellipticity_t1: float
    ellipticity_t2: float
    intensity_gain: float = Field(gt=0)


class GeneratorPhysics(BaseModel):
    """Coefficient manifest of the toy generator."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    version: str
    preheat_ref: float = Field(gt=0)
    dopant_ref: float = Field(gt=0)
    bang_time_offset: float
    sigma_fraction: float = Field(0.05, gt=0)
    reference_size: int = Field(4000, ge=2)
    reference_seed: int = 0
    image: ImagePhysics
    coefficients: Dict[str, float]

    _reference_std: Optional[np.ndarray] = PrivateAttr(default=None)

    @field_validator("coefficients")
    @classmethod
    def _all_coefficients(cls, value: Dict[str, float]):
        missing = [k for k in REQUIRED_COEFFICIENTS if k not in value]
        if missing:
            raise ValueError(f"generator manifest misses coefficients {missing}")
        return value

    def with_sigma_fraction(self, fraction: float) -> "GeneratorPhysics":
        return self.model_copy(update={"sigma_fraction": fraction})

    def reference_std(self) -> np.ndarray:
        """Population std of every scalar over a fixed uniform reference sample."""
        if self._reference_std is None:
            rng = np.random.default_rng(self.reference_seed)
            lo, hi = input_bounds()
            x = lo + (hi - lo) * rng.random((self.reference_size, N_INPUTS))
            self._reference_std = scalar_response(x, self).std(axis=0)
        return self._reference_std

    def sigma(self) -> np.ndarray:
        return self.sigma_fraction * self.reference_std()


def load_physics(path: Optional[Union[str, Path]] = None) -> GeneratorPhysics:
    path = Path(path) if path else DEFAULT_MANIFEST
    if not path.exists():
        raise InvalidInputError(f"generator manifest not found: {path}")
    physics = GeneratorPhysics.model_validate(json.loads(path.read_text(encoding="utf-8")))
    _log.debug("loaded generator %s from %s", physics.version, path)
    return physics


def _columns(x: np.ndarray) -> Mapping[str, np.ndarray]:
    return {name: x[:, i] for i, name in enumerate(INPUT_NAMES)}


def _asymmetry_penalty(col: Mapping[str, np.ndarray], c: Mapping[str, float]) -> np.ndarray:
    m10 = col["asym_mode10"] / 0.01
    m20 = (col["asym_mode20_t1"] / 0.06) ** 2 + (col["asym_mode20_t2"] / 0.06) ** 2
    return c["asym_m10"] * m10 ** 2 + c["asym_m20"] * m20


def scalar_response(x: np.ndarray, physics: GeneratorPhysics) -> np.ndarray:
    """Noise-free scalars for an (n, 9) input array, in Table 2 order."""
    c = physics.coefficients
    col = _columns(np.atleast_2d(x))
    s = col["scale"]
    ph = col["preheat"] / physics.preheat_ref
    dp = col["dopant_fraction"] / physics.dopant_ref
    drive = 1.0 + c["drive_energy"] * col["energy_adj"] + c["drive_power"] * col["power_adj"] \
        - c["drive_trough"] * col["trough_adj"]
    pa = _asymmetry_penalty(col, c)

    velocity = c["vel_0"] * np.sqrt(drive) * (1.0 - c["vel_dopant"] * dp) * (1.0 - c["vel_preheat"] * ph)
    tion = (c["tion_0"] * (velocity / c["vel_0"]) ** 2 * s ** c["tion_scale"]
            * (1.0 - c["tion_preheat"] * ph * (1.0 + c["tion_cross"] * dp)) * (1.0 - c["tion_asym"] * pa))
    bang = c["bt_0"] * s * drive ** (-c["bt_drive"]) + c["bt_preheat"] * ph
    dsr = (c["dsr_0"] * (1.0 + c["dsr_dopant"] * dp) * (1.0 - c["dsr_preheat"] * ph)
           * s ** c["dsr_scale"] * (1.0 - c["dsr_asym"] * pa))
    radius = c["r_0"] * s * (1.0 + c["r_preheat"] * ph) * np.sqrt(c["vel_0"] / velocity) * (1.0 + c["r_asym"] * pa)
    # yields: the scale dependence weakens with preheat
    xray = (c["xy_0"] + c["xy_scale"] * np.log(s) * (1.0 - c["xy_cross"] * ph) + c["xy_drive"] * np.log(drive)
            + c["xy_preheat"] * ph - c["xy_asym"] * pa)
    neutron = (c["dt_0"] + c["dt_scale"] * np.log(s) * (1.0 - c["dt_cross"] * ph) + c["dt_drive"] * np.log(drive)
               - c["dt_preheat"] * ph - c["dt_asym"] * pa - c["dt_dopant"] * dp)
    bw_grh = c["bwg_0"] * s * (1.0 + c["bwg_preheat"] * ph) / np.sqrt(drive)
    bw_spider = c["bws_0"] * s * (1.0 + c["bws_preheat"] * ph) * drive ** -0.4 * (1.0 + c["bws_asym"] * pa)

    return np.stack([
        bang, bang + physics.bang_time_offset, dsr, tion, radius, velocity, xray, neutron, bw_grh, bw_spider,
    ], axis=1)


def ellipticity(x: np.ndarray, physics: GeneratorPhysics) -> np.ndarray:
    """Signed ellipticity in (-1, 1); positive is oblate (wider than tall)."""
    col = _columns(np.atleast_2d(x))
    img = physics.image
    arg = img.ellipticity_t1 * col["asym_mode20_t1"] + img.ellipticity_t2 * col["asym_mode20_t2"]
    return np.tanh(img.ellipticity_gain * arg)


def render_images(x: np.ndarray, scalars: np.ndarray, physics: GeneratorPhysics, side: int) -> np.ndarray:
    """Hot-spot images (n, side, side) for inputs x and their scalars."""
    img = physics.image
    radius_px = side * scalars[:, 4] / img.field_of_view
    e = ellipticity(x, physics)
    sx = radius_px * np.exp(0.5 * e)
    sy = radius_px * np.exp(-0.5 * e)
    grid = np.arange(side, dtype=np.float64) - (side - 1) / 2.0
    rows, cols = grid[None, :, None], grid[None, None, :]
    rho2 = (cols / sx[:, None, None]) ** 2 + (rows / sy[:, None, None]) ** 2
    shape = np.exp(-rho2 ** (0.5 * img.falloff_exponent))
    total = img.intensity_gain * 10.0 ** (scalars[:, 6] - physics.coefficients["xy_0"])
    return shape * (total / shape.sum(axis=(1, 2)))[:, None, None]


def simulate_batch(x: np.ndarray, physics: GeneratorPhysics, side: int = 32,
                   noise_rng: Optional[np.random.Generator] = None):
    """Vectorized simulate: returns (scalars, images, sigmas) for (n, 9) inputs."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != N_INPUTS:
        raise InvalidInputError(f"inputs must have {N_INPUTS} columns, got {x.shape[1]}")
    bad = out_of_range(x)
    if bad:
        raise InvalidInputError(f"inputs out of range for {bad}")
    if side < 4:
        raise InvalidInputError(f"image side must be at least 4, got {side}")
    scalars = scalar_response(x, physics)
    images = render_images(x, scalars, physics, side)
    sigmas = np.broadcast_to(physics.sigma(), scalars.shape).copy()
    if noise_rng is not None:
        scalars = scalars + noise_rng.normal(0.0, 1.0, scalars.shape) * sigmas
    return scalars, images, sigmas


def simulate(x: DesignPoint, physics: Optional[GeneratorPhysics] = None, noise_seed: Optional[int] = None,
             side: int = 32) -> MultiModalOutput:
    physics = physics or load_physics()
    rng = None if noise_seed is None else np.random.default_rng(noise_seed)
    values = x.as_array() if isinstance(x, DesignPoint) else np.asarray(x, dtype=np.float64)
    scalars, images, sigmas = simulate_batch(values[None, :], physics, side, rng)
    return MultiModalOutput(scalars[0], images[0], sigmas[0])
