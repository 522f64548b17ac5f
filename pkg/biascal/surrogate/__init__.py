"""
Initial simulation-trained surrogate: autoencoder E/D, forward model F, inverse model I
"""

from .architecture import (
    ArchConfig,
    ArchManifest,
    decoder_topology,
    encoder_topology,
    forward_topology,
    inverse_topology,
)
from .model import (
    SurrogateModel,
    evaluate_r2,
    evaluate_reconstruction,
    observed,
    physical_inputs,
    predict,
    reconstruct,
    select_inputs,
    split_holdout,
)
from .training import (
    AutoencoderLoss,
    ForwardInverseLoss,
    StageFit,
    SurrogateFitReport,
    SurrogateTrainConfig,
    encoder_latents,
    imq_mmd,
    train_autoencoder,
    train_forward_inverse,
    train_surrogate,
    x_cycle_rms,
)

__all__ = [
    'ArchConfig', 'ArchManifest', 'encoder_topology', 'decoder_topology', 'forward_topology', 'inverse_topology',
    'SurrogateModel', 'predict', 'reconstruct', 'evaluate_r2', 'evaluate_reconstruction', 'observed',
    'physical_inputs', 'select_inputs', 'split_holdout',
    'SurrogateTrainConfig', 'SurrogateFitReport', 'StageFit', 'AutoencoderLoss', 'ForwardInverseLoss',
    'imq_mmd', 'encoder_latents', 'train_autoencoder', 'train_forward_inverse', 'train_surrogate', 'x_cycle_rms',
]
