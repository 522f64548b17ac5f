"""
File storage for datasets
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from diffcore import InvalidInputError
from toydata import INPUT_NAMES, SCALAR_NAMES, Dataset

from .file_storage import FileStorageService, PathLike

_log = logging.getLogger(__name__)

# round-trips float64 exactly
CSV_FLOAT_FORMAT = "%.17g"


class DatasetStorageService(FileStorageService):
    """Store datasets as directories of CSV tables plus a raw image block.

    Storage layout:
      <dir>/
        inputs.csv        # one column per design input
        scalars.csv       # one column per scalar
        sigmas.csv        # measurement errors, same columns
        images.bin        # (n, side, side) little-endian float64
        image_scale.bin   # per-image means, normalized datasets only
        manifest.json     # count, side, normalized flag, provenance
    """

    MANIFEST_FILE = "manifest.json"

    def _write_table(self, path: Path, values: np.ndarray, columns) -> None:
        pd.DataFrame(values, columns=columns).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT,
                                                     lineterminator="\n")

    def _read_table(self, path: Path, columns) -> np.ndarray:
        table = pd.read_csv(self._require(path), float_precision="round_trip")
        if list(table.columns) != list(columns):
            raise InvalidInputError(f"{path.name}: expected columns {list(columns)}, found {list(table.columns)}")
        return table.to_numpy(dtype=np.float64)

    def save(self, dataset: Dataset, name: PathLike) -> Path:
        directory = self._ensure_dir(self._path(name))
        self._write_table(directory / "inputs.csv", dataset.inputs, INPUT_NAMES)
        self._write_table(directory / "scalars.csv", dataset.scalars, SCALAR_NAMES)
        self._write_table(directory / "sigmas.csv", dataset.sigmas, SCALAR_NAMES)
        self._write_array(directory / "images.bin", dataset.images)
        if dataset.image_scale is not None:
            self._write_array(directory / "image_scale.bin", dataset.image_scale)
        self._write_json(directory / self.MANIFEST_FILE, {
            "count": len(dataset),
            "image_side": dataset.side,
            "normalized": dataset.normalized,
            "has_image_scale": dataset.image_scale is not None,
            "meta": dataset.meta,
        })
        _log.info("[OK] Saved %d samples to %s", len(dataset), directory)
        return directory

    def load(self, name: PathLike) -> Dataset:
        directory = self._path(name)
        manifest = self._read_json(directory / self.MANIFEST_FILE)
        n, side = int(manifest["count"]), int(manifest["image_side"])
        scale = self._read_array(directory / "image_scale.bin", (n,)) if manifest.get("has_image_scale") else None
        return Dataset(
            inputs=self._read_table(directory / "inputs.csv", INPUT_NAMES),
            scalars=self._read_table(directory / "scalars.csv", SCALAR_NAMES),
            sigmas=self._read_table(directory / "sigmas.csv", SCALAR_NAMES),
            images=self._read_array(directory / "images.bin", (n, side, side)),
            meta=manifest.get("meta", {}),
            normalized=bool(manifest.get("normalized", False)),
            image_scale=scale,
        )
