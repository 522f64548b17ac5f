"""
Cross-validation of the calibrators over a split plan of experiments
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from baselinecal import BaselineCalibrator, BaselineConfig, OutputCompressor, compressor_for
from core import BaseCalibrator, SeedManager
from diffcore import InvalidInputError
from metrics import BasisConfig, chi2n_columns, describe_images, r2
from surrogate import SurrogateModel, observed, physical_inputs, predict
from toydata import Dataset, MultiModalOutput
from transfercal import TLConfig, TransferCalibrator

from .report import CalibrationReport, FailedSplit, ObservedTable, PredictionTable, SplitRecord
from .splits import Protocol, Split, SplitPlan, make_splits

_log = logging.getLogger(__name__)


@dataclass
class Observations:
    """Physical scalars, sigmas, mean-normalized images and their descriptors."""

    scalars: np.ndarray
    sigmas: np.ndarray
    images: np.ndarray
    descriptors: np.ndarray

    @classmethod
    def of(cls, model: SurrogateModel, experiments: Dataset,
           basis: Optional[BasisConfig] = None) -> "Observations":
        scalars, images = observed(model, experiments)
        sigmas = experiments.sigmas * model.stats.scalar_range if experiments.normalized else experiments.sigmas
        return cls(scalars, sigmas, images, describe_images(images, basis))


@dataclass
class Rows:
    """Predictions of one predictor, row-aligned with the samples they predict."""

    split_ids: List[int] = field(default_factory=list)
    samples: List[int] = field(default_factory=list)
    scalars: List[np.ndarray] = field(default_factory=list)
    descriptors: List[np.ndarray] = field(default_factory=list)

    def add(self, split_id: int, samples: Sequence[int], output: MultiModalOutput,
            basis: Optional[BasisConfig] = None, descriptors: Optional[np.ndarray] = None) -> None:
        if descriptors is None:
            descriptors = describe_images(np.reshape(output.image, (-1,) + output.image.shape[-2:]), basis)
        self.split_ids.extend([split_id] * len(samples))
        self.samples.extend(int(s) for s in samples)
        self.scalars.extend(np.atleast_2d(output.scalars))
        self.descriptors.extend(descriptors)

    def stacked(self):
        return np.asarray(self.samples, dtype=np.int64), np.asarray(self.scalars), np.asarray(self.descriptors)


def safe_r2(obs: np.ndarray, pred: np.ndarray) -> Optional[float]:
    """R², or None where it is undefined (constant or single observations)."""
    try:
        return r2(obs, pred)
    except InvalidInputError:
        return None


def _squared_residuals(obs: Observations, samples: np.ndarray, scalars: np.ndarray) -> np.ndarray:
    return ((obs.scalars[samples] - scalars) / obs.sigmas[samples]) ** 2


def summarize(obs: Observations, sample_ids: Sequence[int], rows: Mapping[str, Rows], protocol: str,
              bagged: bool = False) -> CalibrationReport:
    """Assemble a report; every predictor is scored over its concatenated rows.

    `sample_ids` are the experiment indices `obs` is aligned with.
    """
    where = {int(s): i for i, s in enumerate(sample_ids)}
    chi2n, r2s, desc_r2, bagged_chi2n, tables = {}, {}, {}, {}, {}
    initial_sq = None
    if "initial" in rows:
        samples, scalars, _ = rows["initial"].stacked()
        local = np.array([where[s] for s in samples])
        initial_sq = dict(zip(samples.tolist(), _squared_residuals(obs, local, scalars)))
    for name, predictor_rows in rows.items():
        samples, scalars, descriptors = predictor_rows.stacked()
        if not len(samples):
            continue
        local = np.array([where[s] for s in samples])
        chi2n[name] = chi2n_columns(obs.scalars[local], scalars, obs.sigmas[local]).tolist()
        r2s[name] = [safe_r2(obs.scalars[local, j], scalars[:, j]) for j in range(scalars.shape[1])]
        desc_r2[name] = [safe_r2(obs.descriptors[local, j], descriptors[:, j]) for j in range(descriptors.shape[1])]
        improved = []
        if name != "initial" and initial_sq is not None:
            sq = _squared_residuals(obs, local, scalars)
            improved = [(row < initial_sq[s]).tolist() for row, s in zip(sq, samples.tolist())]
        if bagged and name != "initial":
            unique = sorted(set(samples.tolist()))
            means = np.array([scalars[samples == s].mean(axis=0) for s in unique])
            idx = np.array([where[s] for s in unique])
            bagged_chi2n[name] = chi2n_columns(obs.scalars[idx], means, obs.sigmas[idx]).tolist()
        tables[name] = PredictionTable(
            split_ids=list(predictor_rows.split_ids), samples=samples.tolist(), scalars=scalars.tolist(),
            descriptors=descriptors.tolist(), improved=improved,
        )
    observed_rows = ObservedTable(samples=[int(s) for s in sample_ids], scalars=obs.scalars.tolist(),
                                  sigmas=obs.sigmas.tolist(), descriptors=obs.descriptors.tolist())
    return CalibrationReport(protocol=protocol, observed=observed_rows, predictions=tables, chi2n=chi2n,
                             r2=r2s, descriptor_r2=desc_r2, bagged_chi2n=bagged_chi2n)


@dataclass
class SplitOutcome:
    split: Split
    seed: int
    outputs: Dict[str, MultiModalOutput] = field(default_factory=dict)
    descriptors: Dict[str, np.ndarray] = field(default_factory=dict)
    trace: List[float] = field(default_factory=list)
    error: Optional[str] = None


def _run_split(split: Split, seed: int, experiments: Dataset, x: np.ndarray,
               calibrators: Mapping[str, BaseCalibrator], basis: Optional[BasisConfig]) -> SplitOutcome:
    outcome = SplitOutcome(split=split, seed=seed)
    try:
        train = experiments.subset(split.train)
        for name, calibrator in calibrators.items():
            fitted, output = calibrator.run(train, x[split.validation], seed)
            outcome.outputs[name] = output
            outcome.descriptors[name] = describe_images(output.image, basis)
            if name == "tl":
                outcome.trace = list(fitted.trace)
    except Exception as e:
        _log.exception("[ERROR] split %d failed", split.split_id)
        outcome.error = f"{type(e).__name__}: {e}"
        outcome.outputs, outcome.descriptors = {}, {}
    return outcome


def run_crossval(model: SurrogateModel, experiments: Dataset, plan: SplitPlan, tl_cfg: TLConfig,
                 baseline_cfg: Optional[BaselineConfig] = None, *,
                 compressor: Optional[OutputCompressor] = None, simulations: Optional[Dataset] = None,
                 threads: int = 1, basis: Optional[BasisConfig] = None) -> CalibrationReport:
    """Calibrate on each split's training experiments and score its validation predictions.

    The baseline runs only when `baseline_cfg` is given; its compressor is
    either passed in or fitted on `simulations`. Splits run on up to `threads`
    worker threads and are merged by split id.
    """
    start = time.time()
    plan = make_splits(plan.model_copy(update={"n_samples": len(experiments)})
                       if not plan.splits else plan)
    if plan.n_samples != len(experiments):
        raise InvalidInputError(f"plan covers {plan.n_samples} samples, experiments hold {len(experiments)}")
    obs = Observations.of(model, experiments, basis)
    x = physical_inputs(model, experiments)

    # initial predictions are made once per experiment, independent of the plan
    initial = Rows()
    initial.add(-1, range(len(experiments)), predict(model, x), basis)

    calibrators: Dict[str, BaseCalibrator] = {"tl": TransferCalibrator(model, tl_cfg)}
    if baseline_cfg is not None:
        if compressor is None:
            if simulations is None:
                raise InvalidInputError("the baseline needs a fitted compressor or simulations to fit one on")
            compressor = compressor_for(model, simulations, baseline_cfg)
        calibrators["baseline"] = BaselineCalibrator(model, compressor, baseline_cfg)

    seeds = SeedManager(plan.seed)
    split_seeds = {s.split_id: seeds.split_seed(s.split_id) for s in plan.splits}
    workers = max(1, min(int(threads), len(plan.splits)))
    _log.info("[INFO] Running %d splits on %d thread(s)", len(plan.splits), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_split, s, split_seeds[s.split_id], experiments, x, calibrators, basis)
                   for s in plan.splits]
        outcomes = sorted((f.result() for f in futures), key=lambda o: o.split.split_id)

    rows = {"initial": initial, **{name: Rows() for name in calibrators}}
    failed, traces = [], {}
    for outcome in outcomes:
        if outcome.error is not None:
            failed.append(FailedSplit(split_id=outcome.split.split_id, message=outcome.error))
            continue
        for name, output in outcome.outputs.items():
            rows[name].add(outcome.split.split_id, outcome.split.validation, output,
                           descriptors=outcome.descriptors[name])
        traces[outcome.split.split_id] = outcome.trace

    report = summarize(obs, range(len(experiments)), rows, plan.protocol.value,
                       bagged=plan.protocol == Protocol.HOLDOUT_X15)
    report.splits = [SplitRecord(split_id=o.split.split_id, seed=o.seed, train=o.split.train,
                                 validation=o.split.validation) for o in outcomes]
    report.failed_splits = failed
    report.complete = not failed
    report.loss_traces = traces
    elapsed = time.time() - start
    report.runtime = {"seconds": elapsed, "seconds_per_split": elapsed / max(1, len(outcomes))}
    report.settings = {
        "plan": plan.model_dump(mode="json", exclude={"splits"}),
        "calibrators": {name: c.describe() for name, c in calibrators.items()},
        "base_model": model.content_hash(),
        "threads": workers,
    }
    if failed:
        _log.warning("%d of %d splits failed; the report is incomplete", len(failed), len(outcomes))
    _log.info("[OK] Cross-validation finished in %.1fs: TL improved χ²/N for %d/%d scalars",
              elapsed, report.improved_count("tl") if "tl" in report.chi2n else 0, len(report.scalar_names))
    return report
