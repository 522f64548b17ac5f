"""
JSON storage for calibration reports
"""

from pathlib import Path

from diffcore import InvalidInputError
from harness import CalibrationReport

from .file_storage import FileStorageService, PathLike


class ReportStorageService(FileStorageService):
    """Keep the full CalibrationReport next to its emitted tables.

    Storage layout:
      <dir>/report.json
    """

    REPORT_FILE = "report.json"

    def save(self, report: CalibrationReport, name: PathLike) -> Path:
        directory = self._ensure_dir(self._path(name))
        path = directory / self.REPORT_FILE
        path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        return path

    def load(self, name: PathLike) -> CalibrationReport:
        path = self._path(name)
        if path.is_dir():
            path = path / self.REPORT_FILE
        if not path.exists():
            raise InvalidInputError(f"no report at {path}")
        return CalibrationReport.model_validate_json(path.read_text(encoding="utf-8"))
