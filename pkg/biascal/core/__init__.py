"""
Core system components

The pipeline orchestrator is imported from `core.pipeline` directly; only the
seed manager and the calibrator base class are exported here because the
library packages depend on them.
"""

from .calibrator import BaseCalibrator
from .state_manager import SeedManager

__all__ = ['BaseCalibrator', 'SeedManager']
