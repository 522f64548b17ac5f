"""
Transfer-learning calibration of a trained surrogate against few experiments
"""

from .config import LossMode, Strategy, TLConfig, retrain_plan
from .objective import TLObjective, residual_terms, tl_loss
from .transfer import CalibratedModel, TransferCalibrator, experiment_batch, predict_calibrated, transfer_learn

__all__ = [
    'Strategy', 'LossMode', 'TLConfig', 'retrain_plan',
    'tl_loss', 'residual_terms', 'TLObjective',
    'CalibratedModel', 'transfer_learn', 'predict_calibrated', 'experiment_batch', 'TransferCalibrator',
]
