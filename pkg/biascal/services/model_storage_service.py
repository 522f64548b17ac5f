"""
File storage for surrogate, transfer-learned and baseline models
"""

import logging
from pathlib import Path
from typing import Dict

import pandas as pd

from baselinecal import BaselineConfig, BaselineModel, LinearCalibrator, OutputCompressor
from diffcore import InvalidInputError
from surrogate import ArchManifest, SurrogateModel
from toydata import NormStats
from transfercal import CalibratedModel, TLConfig

from .file_storage import FileStorageService, PathLike
from .parameter_storage_service import ParameterStorageService

_log = logging.getLogger(__name__)

COMPONENT_DIRS = {"encoder": "E", "decoder": "D", "forward": "F", "inverse": "I"}
COMPRESSOR_ARRAYS = ("image_mean", "image_basis", "score_min", "score_range", "scalar_min", "scalar_range",
                     "all_mean", "all_basis")


class ModelStorageService(FileStorageService):
    """Store models as directories.

    Storage layout:
      <surrogate>/      E/ D/ F/ I/ arch.json norm_stats.json model.json
      <calibrated>/     base_ref.json tlconfig.json loss_trace.csv <E|D|F>/ (retrained only)
      <baseline>/       compressor.json <array>.bin calibrator_<i>.json calibrator_<i>.<coef|intercept>.bin
    """

    def __init__(self, storage_dir: PathLike = "."):
        super().__init__(storage_dir)
        self.params = ParameterStorageService()

    # -- surrogate ---------------------------------------------------------

    def save_surrogate(self, model: SurrogateModel, name: PathLike) -> Path:
        directory = self._ensure_dir(self._path(name))
        for component, sub in COMPONENT_DIRS.items():
            self.params.save(getattr(model, component), directory / sub)
        self._write_json(directory / "arch.json", model.arch.model_dump(mode="json"))
        self._write_json(directory / "norm_stats.json", model.stats.model_dump(mode="json"))
        self._write_json(directory / "model.json", {"input_names": list(model.input_names),
                                                    "content_hash": model.content_hash()})
        _log.info("[OK] Saved surrogate to %s", directory)
        return directory

    def load_surrogate(self, name: PathLike) -> SurrogateModel:
        directory = self._path(name)
        meta = self._read_json(directory / "model.json")
        model = SurrogateModel(
            **{component: self.params.load(directory / sub) for component, sub in COMPONENT_DIRS.items()},
            arch=ArchManifest.model_validate(self._read_json(directory / "arch.json")),
            stats=NormStats.model_validate(self._read_json(directory / "norm_stats.json")),
            input_names=list(meta["input_names"]),
        )
        if model.content_hash() != meta.get("content_hash"):
            raise InvalidInputError(f"surrogate in {directory} does not match its recorded content hash")
        return model

    # -- transfer-learned --------------------------------------------------

    def save_calibrated(self, calibrated: CalibratedModel, name: PathLike, base_path: PathLike = "") -> Path:
        directory = self._ensure_dir(self._path(name))
        self._write_json(directory / "base_ref.json", {"content_hash": calibrated.base_hash,
                                                       "path": str(base_path),
                                                       "retrained": sorted(calibrated.retrained)})
        self._write_json(directory / "tlconfig.json", calibrated.config.model_dump(mode="json"))
        for component, params in calibrated.retrained.items():
            self.params.save(params, directory / COMPONENT_DIRS[component])
        records = [(stage, i, value) for stage, trace in enumerate(calibrated.stage_traces)
                   for i, value in enumerate(trace)]
        pd.DataFrame(records, columns=["stage", "iteration", "loss"]).to_csv(
            directory / "loss_trace.csv", index=False, float_format="%.17g", lineterminator="\n")
        _log.info("[OK] Saved transfer-learned model to %s", directory)
        return directory

    def load_calibrated(self, name: PathLike, base: SurrogateModel) -> CalibratedModel:
        directory = self._path(name)
        ref = self._read_json(directory / "base_ref.json")
        if ref["content_hash"] != base.content_hash():
            raise InvalidInputError(f"{directory} was calibrated from a different base surrogate")
        retrained = {c: self.params.load(directory / COMPONENT_DIRS[c]) for c in ref["retrained"]}
        trace = pd.read_csv(self._require(directory / "loss_trace.csv"), float_precision="round_trip")
        stage_traces = [group["loss"].tolist() for _, group in trace.groupby("stage", sort=True)]
        return CalibratedModel(
            base=base, retrained=retrained,
            config=TLConfig.model_validate(self._read_json(directory / "tlconfig.json")),
            trace=[v for t in stage_traces for v in t], stage_traces=stage_traces,
        )

    # -- baseline ----------------------------------------------------------

    def save_baseline(self, baseline: BaselineModel, name: PathLike) -> Path:
        directory = self._ensure_dir(self._path(name))
        compressor = baseline.compressor
        shapes: Dict[str, list] = {}
        for key in COMPRESSOR_ARRAYS:
            arr = getattr(compressor, key)
            if arr is not None:
                self._write_array(directory / f"{key}.bin", arr)
                shapes[key] = list(arr.shape)
        self._write_json(directory / "compressor.json", {"shapes": shapes, "fitted_on": compressor.fitted_on,
                                                         "config": baseline.config.model_dump(mode="json"),
                                                         "n_calibrators": len(baseline.calibrators)})
        for i, calibrator in enumerate(baseline.calibrators):
            self._write_array(directory / f"calibrator_{i}.coef.bin", calibrator.coef)
            self._write_array(directory / f"calibrator_{i}.intercept.bin", calibrator.intercept)
            self._write_json(directory / f"calibrator_{i}.json", {"dim": calibrator.dim, "ridge": calibrator.ridge})
        _log.info("[OK] Saved baseline (%d calibrator(s)) to %s", len(baseline.calibrators), directory)
        return directory

    def load_baseline(self, name: PathLike) -> BaselineModel:
        directory = self._path(name)
        manifest = self._read_json(directory / "compressor.json")
        arrays = {key: self._read_array(directory / f"{key}.bin", shape) for key, shape in manifest["shapes"].items()}
        compressor = OutputCompressor(**arrays, fitted_on=manifest.get("fitted_on", {}))
        calibrators = []
        for i in range(int(manifest["n_calibrators"])):
            meta = self._read_json(directory / f"calibrator_{i}.json")
            dim = int(meta["dim"])
            calibrators.append(LinearCalibrator(
                coef=self._read_array(directory / f"calibrator_{i}.coef.bin", (dim, dim)),
                intercept=self._read_array(directory / f"calibrator_{i}.intercept.bin", (dim,)),
                ridge=float(meta["ridge"]),
            ))
        if any(c.dim != compressor.dim for c in calibrators):
            raise InvalidInputError(f"calibrators in {directory} do not match the compressor dimension")
        return BaselineModel(compressor, tuple(calibrators), BaselineConfig.model_validate(manifest["config"]))
