"""
Cross-validation protocols, the synthetic end-to-end protocol and report emission
"""

from .crossval import Observations, Rows, run_crossval, safe_r2, summarize
from .report import (
    CalibrationReport,
    FailedSplit,
    ObservedTable,
    PredictionTable,
    SplitRecord,
    emit_report,
    scalar_metrics_table,
)
from .splits import Protocol, Split, SplitPlan, make_splits
from .synthetic import run_synthetic_protocol

__all__ = [
    'Protocol', 'Split', 'SplitPlan', 'make_splits',
    'Observations', 'Rows', 'summarize', 'safe_r2', 'run_crossval', 'run_synthetic_protocol',
    'CalibrationReport', 'PredictionTable', 'ObservedTable', 'SplitRecord', 'FailedSplit',
    'emit_report', 'scalar_metrics_table',
]
