"""
Calibration pipeline orchestrator: one method per command-line subcommand
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import pandas as pd

from baselinecal import BaselineModel, compressor_for, fit_baseline
from config import Settings
from diffcore import InvalidInputError
from harness import CalibrationReport, emit_report, run_crossval, run_synthetic_protocol
from services import DatasetStorageService, ModelStorageService, ReportStorageService
from surrogate import (
    SurrogateFitReport,
    SurrogateModel,
    evaluate_r2,
    evaluate_reconstruction,
    split_holdout,
    train_surrogate,
)
from toydata import Dataset, GeneratorPhysics, load_physics, make_campaign
from transfercal import CalibratedModel, transfer_learn

_log = logging.getLogger(__name__)

DATASETS = ("sim", "exp_train", "exp_validation")


class CalibrationPipeline:
    """Runs the generate -> train -> calibrate -> evaluate chain against one output directory.

    Layout under `out_dir`:
      data/<sim|exp_train|exp_validation>/   datasets
      models/<surrogate|tl|baseline>/        fitted models
      reports/<name>/                        report.json plus emitted tables and plots
    """

    def __init__(self, settings: Settings, out_dir: Union[str, Path], threads: int = 1,
                 generator_manifest: Optional[Union[str, Path]] = None):
        self.settings = settings
        self.out_dir = Path(out_dir)
        self.threads = threads
        self.generator_manifest = generator_manifest
        self.datasets = DatasetStorageService(self.out_dir / "data")
        self.models = ModelStorageService(self.out_dir / "models")
        self.reports = ReportStorageService(self.out_dir / "reports")
        self._physics: Optional[GeneratorPhysics] = None

    @property
    def physics(self) -> GeneratorPhysics:
        if self._physics is None:
            self._physics = load_physics(self.generator_manifest)
        return self._physics

    def _dataset(self, name: str) -> Dataset:
        return self.datasets.load(name)

    def _surrogate(self) -> SurrogateModel:
        return self.models.load_surrogate("surrogate")

    def _publish(self, report: CalibrationReport, name: str) -> Dict[str, str]:
        self.reports.save(report, name)
        return emit_report(report, self.reports.storage_dir / name)

    # -- subcommands -------------------------------------------------------

    def generate_data(self) -> Dict[str, Path]:
        campaign = make_campaign(self.settings.campaign, self.physics)
        return {name: self.datasets.save(dataset, name) for name, dataset in zip(DATASETS, campaign)}

    def train_surrogate(self) -> Tuple[SurrogateModel, SurrogateFitReport]:
        model, fit = train_surrogate(self._dataset("sim"), self.settings.surrogate,
                                     input_names=self.settings.campaign.free_inputs)
        directory = self.models.save_surrogate(model, "surrogate")
        (directory / "fit_report.json").write_text(fit.model_dump_json(indent=2), encoding="utf-8")
        return model, fit

    def evaluate_surrogate(self) -> pd.DataFrame:
        """Held-out reconstruction and D(F(x)) R² per scalar and for the pixels."""
        model, sim = self._surrogate(), self._dataset("sim")
        cfg = self.settings.surrogate
        _, hold_idx = split_holdout(len(sim), cfg.holdout_fraction, cfg.seed)
        if len(hold_idx) < 2:
            raise InvalidInputError(
                f"evaluate-surrogate needs at least 2 held-out simulations; surrogate.holdout_fraction="
                f"{cfg.holdout_fraction} holds out {len(hold_idx)} of {len(sim)}")
        held = sim.subset(hold_idx)
        forward, recon = evaluate_r2(model, held), evaluate_reconstruction(model, held)
        table = pd.DataFrame({
            "output": list(forward),
            "reconstruction_r2": [recon[k] for k in forward],
            "forward_r2": [forward[k] for k in forward],
        })
        path = self.models.storage_dir / "surrogate" / "evaluation.csv"
        table.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
        _log.info("[OK] Surrogate evaluation written to %s", path)
        return table

    def transfer_learn(self) -> CalibratedModel:
        calibrated = transfer_learn(self._surrogate(), self._dataset("exp_train"), self.settings.tl)
        self.models.save_calibrated(calibrated, "tl", base_path=self.models.storage_dir / "surrogate")
        return calibrated

    def baseline(self) -> BaselineModel:
        model, cfg = self._surrogate(), self.settings.baseline
        compressor = compressor_for(model, self._dataset("sim"), cfg)
        calibrator = fit_baseline(model, compressor, self._dataset("exp_train"), cfg.ridge)
        baseline = BaselineModel(compressor, (calibrator,), cfg)
        self.models.save_baseline(baseline, "baseline")
        return baseline

    def experiment_pool(self) -> Dataset:
        """The first `splits.n_samples` shots of training plus validation experiments."""
        pool = Dataset.concat([self._dataset("exp_train"), self._dataset("exp_validation")])
        return pool.subset(range(min(self.settings.splits.n_samples, len(pool))))

    def crossval(self, with_baseline: bool = True) -> CalibrationReport:
        plan = self.settings.splits.model_copy(update={"splits": []})
        report = run_crossval(
            self._surrogate(), self.experiment_pool(), plan, self.settings.tl,
            self.settings.baseline if with_baseline else None,
            simulations=self._dataset("sim") if with_baseline else None,
            threads=self.threads,
        )
        self._publish(report, f"crossval_{plan.protocol.value.lower()}")
        return report

    def synthetic_protocol(self, reuse_surrogate: bool = False) -> CalibrationReport:
        model = self._surrogate() if reuse_surrogate else None
        report = run_synthetic_protocol(self.settings.campaign, self.settings.surrogate, self.settings.tl,
                                        physics=self.physics, model=model)
        self._publish(report, "synthetic")
        return report

    def report(self, name: str) -> Dict[str, str]:
        """Re-emit the tables and plots of a saved report."""
        return emit_report(self.reports.load(name), self.reports.storage_dir / name)

    def summary(self, report: CalibrationReport) -> str:
        """Short human-readable χ²/N table for the console."""
        table = pd.DataFrame({p: report.chi2n[p] for p in report.predictors}, index=report.scalar_names)
        return table.to_string(float_format=lambda v: f"{v:.3f}")

