"""
Shared helpers of the file storage services
"""

import json
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np

from diffcore import InvalidInputError

PathLike = Union[str, Path]


class FileStorageService:
    """Base for services that keep artifacts as plain files under a storage directory.

    Names are resolved against the storage directory; absolute paths are used as given.
    """

    def __init__(self, storage_dir: PathLike = "."):
        self.storage_dir = Path(storage_dir)

    def _path(self, name: PathLike) -> Path:
        return self.storage_dir / name

    def _ensure_dir(self, directory: Path) -> Path:
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise InvalidInputError(f"cannot create directory {directory}: {e}") from e
        return directory

    def _require(self, path: Path) -> Path:
        if not path.exists():
            raise InvalidInputError(f"missing file: {path}")
        return path

    def _write_json(self, path: Path, data: Any) -> None:
        path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8")

    def _read_json(self, path: Path) -> Any:
        return json.loads(self._require(path).read_text(encoding="utf-8"))

    def _write_array(self, path: Path, arr: np.ndarray) -> None:
        """Little-endian float64, row-major."""
        np.ascontiguousarray(arr, dtype="<f8").tofile(path)

    def _read_array(self, path: Path, shape: Sequence[int]) -> np.ndarray:
        flat = np.fromfile(self._require(path), dtype="<f8")
        expected = int(np.prod(shape))
        if flat.size != expected:
            raise InvalidInputError(f"{path.name}: expected {expected} values, found {flat.size}")
        return flat.reshape(tuple(shape)).astype(np.float64)
