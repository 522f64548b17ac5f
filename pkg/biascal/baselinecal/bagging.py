"""
Baseline output calibration: apply, bootstrap-aggregate and the cross-validation adapter
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core import BaseCalibrator
from diffcore import InvalidInputError
from surrogate import SurrogateModel, observed, physical_inputs, predict
from toydata import Dataset, DesignPoint, MultiModalOutput

from .compressor import OutputCompressor, fit_compressor
from .linear_map import DEFAULT_RIDGE, LinearCalibrator, fit_linear

_log = logging.getLogger(__name__)


class BaselineConfig(BaseModel):
    """PCA(4) images next to the ten raw scalars, ridge-fitted linear map."""

    model_config = ConfigDict(extra="forbid")

    k_img: int = Field(4, ge=1)
    k_all: Optional[int] = Field(None, ge=1)
    ridge: float = Field(DEFAULT_RIDGE, ge=0)


@dataclass(frozen=True)
class BaselineModel:
    """A fitted compressor with one or more linear maps (more than one means bagging)."""

    compressor: OutputCompressor
    calibrators: Tuple[LinearCalibrator, ...]
    config: BaselineConfig = field(default_factory=BaselineConfig)

    def predict(self, model: SurrogateModel, x) -> MultiModalOutput:
        if len(self.calibrators) == 1:
            return apply_baseline(model, self.compressor, self.calibrators[0], x)
        return bagged_predict(self.calibrators, model, self.compressor, x)


def compressor_for(model: SurrogateModel, simulations: Dataset, cfg: BaselineConfig) -> OutputCompressor:
    """Fit the compressor on simulated outputs in the surrogate's output units."""
    scalars, images = observed(model, simulations)
    compressor = fit_compressor(scalars, images, cfg.k_img, cfg.k_all)
    _log.info("[OK] Output compressor fitted on %d simulations (%d components)", len(simulations), compressor.dim)
    return compressor


def fit_baseline(model: SurrogateModel, compressor: OutputCompressor, experiments: Dataset,
                 ridge: float = DEFAULT_RIDGE) -> LinearCalibrator:
    """L from compressed S(x_exp) to compressed y_exp."""
    if len(experiments) < 1:
        raise InvalidInputError("baseline calibration needs at least one training experiment")
    scalars, images = observed(model, experiments)
    y_sim = compressor.compress_output(predict(model, physical_inputs(model, experiments)))
    y_exp = compressor.compress(scalars, images)
    return fit_linear(y_sim, y_exp, ridge)


def _is_single(x) -> bool:
    return isinstance(x, DesignPoint) or np.ndim(x) == 1


def apply_baseline(model: SurrogateModel, compressor: OutputCompressor, calibrator: LinearCalibrator,
                   x) -> MultiModalOutput:
    """y_corr = T⁻¹(L(T(S(x))))."""
    pred = predict(model, x)
    corrected = compressor.decompress_output(calibrator.apply(compressor.compress_output(pred)))
    return corrected.row(0) if _is_single(x) else corrected


def aggregate_outputs(outputs: Sequence[MultiModalOutput]) -> MultiModalOutput:
    """Element-wise mean of equally shaped outputs."""
    if not outputs:
        raise InvalidInputError("nothing to aggregate")
    return MultiModalOutput(np.mean([o.scalars for o in outputs], axis=0),
                            np.mean([o.image for o in outputs], axis=0))


def bagged_predict(calibrators: Sequence[LinearCalibrator], model: SurrogateModel,
                   compressor: OutputCompressor, x) -> MultiModalOutput:
    """Bootstrap aggregation: the mean of the individual baseline predictions."""
    if not calibrators:
        raise InvalidInputError("bagged prediction needs at least one calibrator")
    return aggregate_outputs([apply_baseline(model, compressor, c, x) for c in calibrators])


class BaselineCalibrator(BaseCalibrator):
    """Cross-validation adapter; the compressor is fitted once on simulations."""

    def __init__(self, surrogate: SurrogateModel, compressor: OutputCompressor, cfg: BaselineConfig):
        super().__init__(surrogate)
        self.compressor = compressor
        self.cfg = cfg

    def fit(self, experiments: Dataset, seed: int) -> LinearCalibrator:
        return fit_baseline(self.surrogate, self.compressor, experiments, self.cfg.ridge)

    def predict(self, fitted: LinearCalibrator, x) -> MultiModalOutput:
        return apply_baseline(self.surrogate, self.compressor, fitted, x)

    def describe(self):
        return {"name": self.name, **self.cfg.model_dump(mode="json"), "dim": self.compressor.dim}
