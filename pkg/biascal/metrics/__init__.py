"""
Scoring: R², χ²/N, bulk shift and Gauss-Laguerre image descriptors
"""

from .gauss_laguerre import (
    DESCRIPTOR_NAMES,
    BasisConfig,
    ImageDescriptors,
    basis_function,
    describe_images,
    image_descriptors,
)
from .scores import bulk_shift, chi2n, chi2n_columns, r2, r2_columns

__all__ = [
    'r2', 'r2_columns', 'chi2n', 'chi2n_columns', 'bulk_shift',
    'BasisConfig', 'ImageDescriptors', 'DESCRIPTOR_NAMES', 'basis_function', 'image_descriptors',
    'describe_images',
]
