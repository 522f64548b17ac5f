"""
File storage for ParameterSets
"""

import logging
from pathlib import Path

from diffcore import InvalidInputError, ParameterSet, Topology
from diffcore.layers import param_shapes

from .file_storage import FileStorageService, PathLike

_log = logging.getLogger(__name__)


class ParameterStorageService(FileStorageService):
    """Store ParameterSets as plain directories.

    Storage layout:
      <dir>/
        topology.json            # layer graph manifest
        <layer>.<tensor>.bin     # little-endian float64, row-major
    """

    TOPOLOGY_FILE = "topology.json"

    def save(self, params: ParameterSet, name: PathLike) -> Path:
        directory = self._ensure_dir(self._path(name))
        self._write_json(directory / self.TOPOLOGY_FILE, params.topology.model_dump())
        for key, arr in params.items():
            self._write_array(directory / f"{key}.bin", arr)
        _log.debug("saved %d tensors to %s", len(params.tensor_names()), directory)
        return directory

    def load(self, name: PathLike) -> ParameterSet:
        directory = self._path(name)
        manifest_path = directory / self.TOPOLOGY_FILE
        if not manifest_path.exists():
            raise InvalidInputError(f"no {self.TOPOLOGY_FILE} in {directory}")
        topology = Topology.model_validate_json(manifest_path.read_text(encoding="utf-8"))
        tensors = {
            spec.name: {tname: self._read_array(directory / f"{spec.name}.{tname}.bin", shape)
                        for tname, shape in param_shapes(spec).items()}
            for spec in topology.layers
        }
        return ParameterSet(topology, tensors)
