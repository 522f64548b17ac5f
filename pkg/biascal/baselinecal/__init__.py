"""
Baseline output calibration: PCA compression plus a ridge-fitted linear map
"""

from .bagging import (
    BaselineCalibrator,
    BaselineConfig,
    BaselineModel,
    aggregate_outputs,
    apply_baseline,
    bagged_predict,
    compressor_for,
    fit_baseline,
)
from .compressor import OutputCompressor, fit_compressor
from .linear_map import DEFAULT_RIDGE, LinearCalibrator, fit_linear

__all__ = [
    'OutputCompressor', 'fit_compressor',
    'LinearCalibrator', 'fit_linear', 'DEFAULT_RIDGE',
    'BaselineConfig', 'BaselineModel', 'BaselineCalibrator', 'compressor_for', 'fit_baseline',
    'apply_baseline', 'aggregate_outputs', 'bagged_predict',
]
