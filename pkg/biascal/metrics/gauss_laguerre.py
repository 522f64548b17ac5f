"""
Three-number image parameterization from two Gauss-Laguerre modes and the peak intensity.

Modes are evaluated about the intensity centroid with angles measured from
the horizontal (column) axis, so an image wider than tall (oblate) gets a
positive (0, 2, COS) coefficient and the same image rotated by 90 degrees
gets the negated value.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import eval_genlaguerre

from diffcore import InvalidInputError

DESCRIPTOR_NAMES = ["radius_mode", "shape_mode", "max_amplitude"]


class BasisConfig(BaseModel):
    """Waist (pixels, default side/4) and centering of the basis."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    waist: Optional[float] = Field(None, gt=0)
    center: str = Field("centroid", pattern="^(centroid|geometric)$")


@dataclass(frozen=True)
class ImageDescriptors:
    radius_mode: float
    shape_mode: float
    max_amplitude: float

    def as_array(self) -> np.ndarray:
        return np.array([self.radius_mode, self.shape_mode, self.max_amplitude])


def basis_function(p: int, m: int, dx: np.ndarray, dy: np.ndarray, waist: float) -> np.ndarray:
    """L_p^|m|(r²/w²) exp(-r²/2w²) cos(mθ) on offsets from the center.

    θ is undefined at r = 0, so for m != 0 a sample exactly at the center gets 0.
    """
    r2 = (dx * dx + dy * dy) / (waist * waist)
    radial = eval_genlaguerre(p, abs(m), r2) * np.exp(-0.5 * r2)
    if m == 0:
        return radial
    angular = np.where(r2 > 0.0, np.cos(m * np.arctan2(dy, dx)), 0.0)
    return radial * angular


def mode_coefficient(image: np.ndarray, p: int, m: int, cx: float, cy: float, waist: float) -> float:
    """Discrete inner product Σ I·B of the image with one basis function."""
    rows, cols = np.indices(image.shape, dtype=np.float64)
    # rows grow downwards; flip so that θ is counter-clockwise from +x
    basis = basis_function(p, m, cols - cx, cy - rows, waist)
    return float(np.sum(image * basis))


def image_descriptors(image, cfg: Optional[BasisConfig] = None) -> ImageDescriptors:
    cfg = cfg or BasisConfig()
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise InvalidInputError(f"descriptors need a square 2-D image, got shape {image.shape}")
    if not np.all(np.isfinite(image)) or np.any(image < 0):
        raise InvalidInputError("descriptors need finite non-negative intensities")
    total = float(image.sum())
    if total == 0.0:
        raise InvalidInputError("descriptors are undefined for an all-zero image")
    side = image.shape[0]
    waist = cfg.waist if cfg.waist is not None else side / 4.0
    if cfg.center == "centroid":
        rows, cols = np.indices(image.shape, dtype=np.float64)
        cy, cx = float((rows * image).sum() / total), float((cols * image).sum() / total)
    else:
        cy = cx = (side - 1) / 2.0
    return ImageDescriptors(
        radius_mode=mode_coefficient(image, 0, 0, cx, cy, waist),
        shape_mode=mode_coefficient(image, 0, 2, cx, cy, waist),
        max_amplitude=float(image.max()),
    )


def describe_images(images: Sequence[np.ndarray], cfg: Optional[BasisConfig] = None) -> np.ndarray:
    """(n, 3) descriptor table in DESCRIPTOR_NAMES order; negative pixels are clipped."""
    return np.array([image_descriptors(np.clip(img, 0.0, None), cfg).as_array() for img in images])
