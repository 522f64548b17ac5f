"""
Toy campaign data: schema, deterministic generator, synthetic campaigns, normalization
"""

from .campaign import NOMINAL_FIXED, PERTURBED_FIXED, CampaignSpec, generate_dataset, make_campaign, sample_inputs
from .generator import GeneratorPhysics, load_physics, simulate, simulate_batch
from .normalization import NormStats, compute_stats, denormalize, image_means, normalize
from .schema import (
    INPUT_NAMES,
    INPUT_RANGES,
    N_INPUTS,
    N_SCALARS,
    SCALAR_NAMES,
    Dataset,
    DesignPoint,
    MultiModalOutput,
)

__all__ = [
    'INPUT_NAMES', 'INPUT_RANGES', 'SCALAR_NAMES', 'N_INPUTS', 'N_SCALARS',
    'DesignPoint', 'MultiModalOutput', 'Dataset',
    'GeneratorPhysics', 'load_physics', 'simulate', 'simulate_batch',
    'CampaignSpec', 'NOMINAL_FIXED', 'PERTURBED_FIXED', 'sample_inputs', 'generate_dataset', 'make_campaign',
    'NormStats', 'compute_stats', 'normalize', 'denormalize', 'image_means',
]
