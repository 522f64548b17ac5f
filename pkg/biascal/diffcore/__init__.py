"""
Differentiable-computation substrate: layers, graph passes, optimizer, gradient checks
"""

from .errors import (
    BiascalError,
    InvalidInputError,
    NonFiniteGradientError,
    ShapeMismatchError,
    SingularSystemError,
    TrainingDivergedError,
)
from .gradcheck import gradient_check, numeric_gradient, squared_loss
from .layers import LayerSpec
from .network import ForwardTrace, ParameterSet, Topology, backward, forward, forward_trace
from .optimizer import Evaluation, Objective, OutputLoss, TrainConfig, TrainResult, optimize

__all__ = [
    'BiascalError', 'InvalidInputError', 'NonFiniteGradientError', 'ShapeMismatchError',
    'SingularSystemError', 'TrainingDivergedError',
    'LayerSpec', 'Topology', 'ParameterSet', 'ForwardTrace',
    'forward', 'forward_trace', 'backward',
    'TrainConfig', 'TrainResult', 'Evaluation', 'Objective', 'OutputLoss', 'optimize',
    'gradient_check', 'numeric_gradient', 'squared_loss',
]
