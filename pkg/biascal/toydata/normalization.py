"""
Min-max normalization of scalars and inputs, mean normalization of images
"""

from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from diffcore import InvalidInputError

from .schema import INPUT_NAMES, SCALAR_NAMES, Dataset, input_bounds


class NormStats(BaseModel):
    """Statistics needed to normalize a dataset and to map predictions back."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scalar_names: List[str]
    scalar_min: List[float]
    scalar_max: List[float]
    input_names: List[str]
    input_min: List[float]
    input_max: List[float]

    @model_validator(mode="after")
    def _check_lengths(self):
        if not (len(self.scalar_names) == len(self.scalar_min) == len(self.scalar_max)):
            raise ValueError("scalar statistics disagree in length")
        if not (len(self.input_names) == len(self.input_min) == len(self.input_max)):
            raise ValueError("input statistics disagree in length")
        return self

    @property
    def scalar_range(self) -> np.ndarray:
        return np.asarray(self.scalar_max) - np.asarray(self.scalar_min)

    def scalars_to_unit(self, scalars: np.ndarray) -> np.ndarray:
        return (np.asarray(scalars) - np.asarray(self.scalar_min)) / self.scalar_range

    def scalars_to_physical(self, scalars: np.ndarray) -> np.ndarray:
        return np.asarray(scalars) * self.scalar_range + np.asarray(self.scalar_min)

    def sigmas_to_unit(self, sigmas: np.ndarray) -> np.ndarray:
        return np.asarray(sigmas) / self.scalar_range

    def inputs_to_unit(self, inputs: np.ndarray, names: Optional[Sequence[str]] = None) -> np.ndarray:
        """Map input columns (all nine, or `names` in that order) onto [0, 1]."""
        names = self.input_names if names is None else list(names)
        idx = [self.input_names.index(n) for n in names]
        lo, hi = np.asarray(self.input_min)[idx], np.asarray(self.input_max)[idx]
        return (np.asarray(inputs, dtype=np.float64) - lo) / (hi - lo)

    def inputs_to_physical(self, inputs: np.ndarray, names: Optional[Sequence[str]] = None) -> np.ndarray:
        names = self.input_names if names is None else list(names)
        idx = [self.input_names.index(n) for n in names]
        lo, hi = np.asarray(self.input_min)[idx], np.asarray(self.input_max)[idx]
        return np.asarray(inputs, dtype=np.float64) * (hi - lo) + lo


def compute_stats(dataset: Dataset) -> NormStats:
    lo, hi = dataset.scalars.min(axis=0), dataset.scalars.max(axis=0)
    constant = [name for name, a, b in zip(SCALAR_NAMES, lo, hi) if not b > a]
    if constant:
        raise InvalidInputError(f"constant scalar column(s) cannot be min-max normalized: {constant}")
    in_lo, in_hi = input_bounds()
    return NormStats(
        scalar_names=list(SCALAR_NAMES), scalar_min=lo.tolist(), scalar_max=hi.tolist(),
        input_names=list(INPUT_NAMES), input_min=in_lo.tolist(), input_max=in_hi.tolist(),
    )


def image_means(images: np.ndarray) -> np.ndarray:
    means = images.mean(axis=(-2, -1))
    if np.any(means <= 0):
        raise InvalidInputError("cannot mean-normalize an image with zero total intensity")
    return means


def normalize(dataset: Dataset, stats: Optional[NormStats] = None) -> Tuple[Dataset, NormStats]:
    """Normalized copy of `dataset` plus the stats used (computed when not given)."""
    if dataset.normalized:
        raise InvalidInputError("dataset is already normalized")
    if stats is None:
        stats = compute_stats(dataset)
    elif stats.scalar_names != SCALAR_NAMES or stats.input_names != INPUT_NAMES:
        raise InvalidInputError("normalization stats come from an incompatible dataset")
    means = image_means(dataset.images)
    meta = dict(dataset.meta, norm_stats=stats.model_dump())
    normed = replace(
        dataset,
        inputs=stats.inputs_to_unit(dataset.inputs),
        scalars=stats.scalars_to_unit(dataset.scalars),
        sigmas=stats.sigmas_to_unit(dataset.sigmas),
        images=dataset.images / means[:, None, None],
        meta=meta,
        normalized=True,
        image_scale=means,
    )
    return normed, stats


def denormalize(dataset: Dataset, stats: NormStats) -> Dataset:
    if not dataset.normalized:
        raise InvalidInputError("dataset is not normalized")
    images = dataset.images
    if dataset.image_scale is not None:
        images = images * dataset.image_scale[:, None, None]
    meta = {k: v for k, v in dataset.meta.items() if k != "norm_stats"}
    return replace(
        dataset,
        inputs=stats.inputs_to_physical(dataset.inputs),
        scalars=stats.scalars_to_physical(dataset.scalars),
        sigmas=dataset.sigmas * stats.scalar_range,
        images=images,
        meta=meta,
        normalized=False,
        image_scale=None,
    )
