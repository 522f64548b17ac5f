"""
Output compressor: image PCA scores rescaled onto [0, 1] next to min-max scalars,
optionally followed by a PCA over the concatenation
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from sklearn.decomposition import PCA

from diffcore import InvalidInputError
from toydata import N_SCALARS, MultiModalOutput

_log = logging.getLogger(__name__)


def _unit_range(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(min, range) per column; a zero range is replaced by 1."""
    low = values.min(axis=0)
    span = values.max(axis=0) - low
    return low, np.where(span > 0, span, 1.0)


@dataclass(frozen=True)
class OutputCompressor:
    """T(y): the map from multi-modal outputs to the compressed vector y′.

    `image_basis` rows and `all_basis` rows are orthonormal principal axes.
    """

    image_mean: np.ndarray
    image_basis: np.ndarray
    score_min: np.ndarray
    score_range: np.ndarray
    scalar_min: np.ndarray
    scalar_range: np.ndarray
    all_mean: Optional[np.ndarray] = None
    all_basis: Optional[np.ndarray] = None
    fitted_on: Dict[str, Any] = field(default_factory=dict)

    @property
    def k_img(self) -> int:
        return self.image_basis.shape[0]

    @property
    def k_all(self) -> Optional[int]:
        return None if self.all_basis is None else self.all_basis.shape[0]

    @property
    def side(self) -> int:
        return int(round(np.sqrt(self.image_basis.shape[1])))

    @property
    def dim(self) -> int:
        """Length of the compressed vector."""
        return self.k_all if self.all_basis is not None else self.k_img + N_SCALARS

    def _stack(self, scalars: np.ndarray, images: np.ndarray) -> np.ndarray:
        flat = images.reshape(len(images), -1)
        if flat.shape[1] != self.image_basis.shape[1]:
            raise InvalidInputError(
                f"compressor was fitted on {self.image_basis.shape[1]} pixels, got {flat.shape[1]}")
        scores = (flat - self.image_mean) @ self.image_basis.T
        return np.hstack([(scores - self.score_min) / self.score_range,
                          (scalars - self.scalar_min) / self.scalar_range])

    def compress(self, scalars: np.ndarray, images: np.ndarray) -> np.ndarray:
        """(n, 10) physical scalars and (n, H, W) images -> (n, dim)."""
        stacked = self._stack(np.atleast_2d(scalars), images.reshape((-1,) + images.shape[-2:]))
        if self.all_basis is None:
            return stacked
        return (stacked - self.all_mean) @ self.all_basis.T

    def decompress(self, codes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Transpose of the bases plus the stored means; images are not clipped."""
        codes = np.atleast_2d(codes)
        if codes.shape[1] != self.dim:
            raise InvalidInputError(f"expected {self.dim} compressed components, got {codes.shape[1]}")
        stacked = codes @ self.all_basis + self.all_mean if self.all_basis is not None else codes
        scores = stacked[:, :self.k_img] * self.score_range + self.score_min
        scalars = stacked[:, self.k_img:] * self.scalar_range + self.scalar_min
        images = scores @ self.image_basis + self.image_mean
        return scalars, images.reshape(len(codes), self.side, self.side)

    def compress_output(self, output: MultiModalOutput) -> np.ndarray:
        return self.compress(output.scalars, output.image)

    def decompress_output(self, codes: np.ndarray) -> MultiModalOutput:
        """Decompressed outputs with negative pixels clipped, as model predictions are."""
        scalars, images = self.decompress(codes)
        return MultiModalOutput(scalars, np.clip(images, 0.0, None))


def fit_compressor(scalars: np.ndarray, images: np.ndarray, k_img: int = 4,
                   k_all: Optional[int] = None) -> OutputCompressor:
    """Fit the image PCA (and the optional all-output PCA) on simulated outputs.

    `images` are the mean-normalized images the surrogate works with.
    """
    scalars = np.atleast_2d(np.asarray(scalars, dtype=np.float64))
    images = np.asarray(images, dtype=np.float64)
    n = len(images)
    flat = images.reshape(n, -1)
    pixels = flat.shape[1]
    if len(scalars) != n:
        raise InvalidInputError(f"{len(scalars)} scalar rows for {n} images")
    if k_img < 1 or k_img >= n or k_img > pixels:
        raise InvalidInputError(
            f"k_img must be at least 1, below the sample count {n} and at most the pixel count {pixels}; got {k_img}")

    image_pca = PCA(n_components=k_img, svd_solver="full").fit(flat)
    scores = image_pca.transform(flat)
    score_min, score_range = _unit_range(scores)
    scalar_min, scalar_range = _unit_range(scalars)
    compressor = OutputCompressor(
        image_mean=image_pca.mean_.copy(),
        image_basis=image_pca.components_.copy(),
        score_min=score_min,
        score_range=score_range,
        scalar_min=scalar_min,
        scalar_range=scalar_range,
        fitted_on={"n_samples": n, "image_side": images.shape[-1],
                   "explained_variance_ratio": [float(v) for v in image_pca.explained_variance_ratio_]},
    )
    if k_all is None:
        return compressor

    stacked = compressor.compress(scalars, images)
    if k_all < 1 or k_all >= n or k_all > stacked.shape[1]:
        raise InvalidInputError(
            f"k_all must be at least 1, below the sample count {n} and at most {stacked.shape[1]}; got {k_all}")
    all_pca = PCA(n_components=k_all, svd_solver="full").fit(stacked)
    _log.debug("all-output PCA keeps %.4f of the variance", float(all_pca.explained_variance_ratio_.sum()))
    meta = dict(compressor.fitted_on, all_explained_variance_ratio=[float(v) for v in all_pca.explained_variance_ratio_])
    return OutputCompressor(
        image_mean=compressor.image_mean, image_basis=compressor.image_basis,
        score_min=score_min, score_range=score_range, scalar_min=scalar_min, scalar_range=scalar_range,
        all_mean=all_pca.mean_.copy(), all_basis=all_pca.components_.copy(), fitted_on=meta,
    )
