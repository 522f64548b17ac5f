"""
CalibrationReport and its file emission (CSV tables, plots, index manifest)
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field

from diffcore import InvalidInputError
from metrics import DESCRIPTOR_NAMES
from toydata import SCALAR_NAMES

_log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
INDEX_FILE = "index.json"


class PredictionTable(BaseModel):
    """Rows of one predictor: which split predicted which sample, and what."""

    split_ids: List[int] = Field(default_factory=list)
    samples: List[int] = Field(default_factory=list)
    scalars: List[List[float]] = Field(default_factory=list)
    descriptors: List[List[float]] = Field(default_factory=list)
    # per row and scalar: squared normalized residual below the initial model's
    improved: List[List[bool]] = Field(default_factory=list)


class ObservedTable(BaseModel):
    samples: List[int]
    scalars: List[List[float]]
    sigmas: List[List[float]]
    descriptors: List[List[float]]


class SplitRecord(BaseModel):
    split_id: int
    seed: int
    train: List[int]
    validation: List[int]


class FailedSplit(BaseModel):
    split_id: int
    message: str


class CalibrationReport(BaseModel):
    """Per-scalar and per-descriptor scores of the initial and calibrated predictors.

    χ²/N and R² of a calibrated predictor are computed over its validation
    predictions concatenated across all splits.
    """

    protocol: str
    scalar_names: List[str] = Field(default_factory=lambda: list(SCALAR_NAMES))
    descriptor_names: List[str] = Field(default_factory=lambda: list(DESCRIPTOR_NAMES))
    observed: ObservedTable
    predictions: Dict[str, PredictionTable]
    chi2n: Dict[str, List[float]]
    r2: Dict[str, List[Optional[float]]]
    descriptor_r2: Dict[str, List[Optional[float]]]
    bagged_chi2n: Dict[str, List[float]] = Field(default_factory=dict)
    bulk_shift: Dict[str, List[float]] = Field(default_factory=dict)
    splits: List[SplitRecord] = Field(default_factory=list)
    failed_splits: List[FailedSplit] = Field(default_factory=list)
    complete: bool = True
    loss_traces: Dict[int, List[float]] = Field(default_factory=dict)
    runtime: Dict[str, float] = Field(default_factory=dict)
    settings: Dict[str, Any] = Field(default_factory=dict)

    @property
    def predictors(self) -> List[str]:
        return list(self.chi2n)

    def improved_scalars(self, predictor: str, reference: str = "initial") -> List[bool]:
        """Per scalar: did `predictor` reach a strictly lower χ²/N than `reference`."""
        return [a < b for a, b in zip(self.chi2n[predictor], self.chi2n[reference])]

    def improved_count(self, predictor: str, reference: str = "initial") -> int:
        return sum(self.improved_scalars(predictor, reference))


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def scalar_metrics_table(report: CalibrationReport) -> pd.DataFrame:
    table = pd.DataFrame({"scalar": report.scalar_names})
    for predictor in report.predictors:
        table[f"chi2n_{predictor}"] = report.chi2n[predictor]
        table[f"r2_{predictor}"] = report.r2[predictor]
        if predictor != "initial" and "initial" in report.chi2n:
            table[f"improved_{predictor}"] = report.improved_scalars(predictor)
    for predictor, values in report.bagged_chi2n.items():
        table[f"bagged_chi2n_{predictor}"] = values
    for predictor, values in report.bulk_shift.items():
        table[f"bulk_shift_{predictor}"] = values
    return table


def descriptor_metrics_table(report: CalibrationReport) -> pd.DataFrame:
    table = pd.DataFrame({"descriptor": report.descriptor_names})
    for predictor, values in report.descriptor_r2.items():
        table[f"r2_{predictor}"] = values
    return table


def _columns(names: List[str], rows: List[List[Any]]) -> Dict[str, List[Any]]:
    return {name: [row[j] for row in rows] for j, name in enumerate(names)}


def observed_table(report: CalibrationReport) -> pd.DataFrame:
    obs = report.observed
    return pd.DataFrame({
        "sample": obs.samples,
        **_columns(report.scalar_names, obs.scalars),
        **_columns([f"sigma_{n}" for n in report.scalar_names], obs.sigmas),
        **_columns(report.descriptor_names, obs.descriptors),
    })


def prediction_table(report: CalibrationReport, predictor: str) -> pd.DataFrame:
    rows = report.predictions[predictor]
    columns = {"split_id": rows.split_ids, "sample": rows.samples, **_columns(report.scalar_names, rows.scalars)}
    if rows.improved:
        columns.update(_columns([f"improved_{n}" for n in report.scalar_names], rows.improved))
    return pd.DataFrame(columns)


def descriptor_scatter_table(report: CalibrationReport, predictor: str) -> pd.DataFrame:
    """Observed against predicted descriptors, one row per prediction."""
    rows = report.predictions[predictor]
    where = {s: i for i, s in enumerate(report.observed.samples)}
    columns = {"split_id": rows.split_ids, "sample": rows.samples}
    for j, name in enumerate(report.descriptor_names):
        columns[f"{name}_observed"] = [report.observed.descriptors[where[s]][j] for s in rows.samples]
        columns[f"{name}_predicted"] = [d[j] for d in rows.descriptors]
    return pd.DataFrame(columns)


def loss_trace_table(report: CalibrationReport) -> pd.DataFrame:
    records = [(split_id, i, value) for split_id, trace in sorted(report.loss_traces.items())
               for i, value in enumerate(trace)]
    return pd.DataFrame(records, columns=["split_id", "iteration", "loss"])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as e:
        raise InvalidInputError(f"cannot write the report to {out}: {e}") from e
    return out


def emit_report(report: CalibrationReport, out_dir, plots: bool = True) -> Dict[str, str]:
    """Write CSV tables (and scatter plots) plus an index manifest of content hashes.

    Returns the index: file name -> sha256.
    """
    out = _prepare(out_dir)
    tables = {
        "scalars_metrics.csv": scalar_metrics_table(report),
        "descriptor_metrics.csv": descriptor_metrics_table(report),
        "observed.csv": observed_table(report),
    }
    for predictor in report.predictions:
        tables[f"predictions_{predictor}.csv"] = prediction_table(report, predictor)
        tables[f"descriptors_{predictor}.csv"] = descriptor_scatter_table(report, predictor)
    if report.loss_traces:
        tables["loss_traces.csv"] = loss_trace_table(report)
    if report.failed_splits:
        tables["failed_splits.csv"] = pd.DataFrame([f.model_dump() for f in report.failed_splits])

    written: List[str] = []
    for name, table in tables.items():
        table.to_csv(out / name, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        written.append(name)
    if plots:
        from .plots import plot_report
        written.extend(plot_report(report, out))

    index = {name: _sha256(out / name) for name in sorted(written)}
    (out / INDEX_FILE).write_text(json.dumps({"files": index}, indent=2, sort_keys=True), encoding="utf-8")
    _log.info("[OK] Report written to %s (%d files)", out, len(index))
    return index
