"""
Configuration settings for biascal
"""

import logging
import os
from pathlib import Path
from typing import Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from baselinecal import BaselineConfig
from diffcore import InvalidInputError
from harness import SplitPlan
from surrogate import SurrogateTrainConfig
from toydata import CampaignSpec
from transfercal import TLConfig

_log = logging.getLogger(__name__)

# Load .env file from project root (parent directory of biascal)
# override=True ensures .env file values take precedence over system environment variables
project_root = Path(__file__).parent.parent
env_path = project_root / '.env'
load_dotenv(dotenv_path=env_path, override=True)


def _clean_env_value(value: Optional[str]) -> Optional[str]:
    """Clean environment variable value by removing quotes and whitespace."""
    if not value:
        return value
    value = value.strip()
    if (value.startswith('"') and value.endswith('"')) or (value.startswith("'") and value.endswith("'")):
        value = value[1:-1]
    return value.strip()


class Config:
    """Environment-backed settings."""

    THREADS_RAW = _clean_env_value(os.getenv("BIASCAL_THREADS", "1"))
    LOG_LEVEL = (_clean_env_value(os.getenv("BIASCAL_LOG_LEVEL", "INFO")) or "INFO").upper()
    OUT_DIR = _clean_env_value(os.getenv("BIASCAL_OUT", "runs")) or "runs"
    GENERATOR_MANIFEST = _clean_env_value(os.getenv("BIASCAL_GENERATOR_MANIFEST") or "") or None

    LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

    @classmethod
    def threads(cls) -> int:
        """Split-level worker cap; malformed values fall back to 1."""
        try:
            return max(1, int(cls.THREADS_RAW))
        except (TypeError, ValueError):
            return 1

    @classmethod
    def validate(cls) -> bool:
        """Validate configuration."""
        try:
            if int(cls.THREADS_RAW) < 1:
                raise ValueError
        except (TypeError, ValueError):
            _log.error("[ERROR] BIASCAL_THREADS must be a positive integer, got %r", cls.THREADS_RAW)
            return False
        if cls.LOG_LEVEL not in cls.LOG_LEVELS:
            _log.error("[ERROR] BIASCAL_LOG_LEVEL must be one of %s, got %r", cls.LOG_LEVELS, cls.LOG_LEVEL)
            return False
        if cls.GENERATOR_MANIFEST and not Path(cls.GENERATOR_MANIFEST).is_file():
            _log.error("[ERROR] BIASCAL_GENERATOR_MANIFEST points to a missing file: %s", cls.GENERATOR_MANIFEST)
            return False
        return True


class Settings(BaseModel):
    """JSON run configuration: one section per component configuration."""

    model_config = ConfigDict(extra="forbid")

    campaign: CampaignSpec = Field(default_factory=CampaignSpec)
    surrogate: SurrogateTrainConfig = Field(default_factory=SurrogateTrainConfig)
    tl: TLConfig = Field(default_factory=TLConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    splits: SplitPlan = Field(default_factory=SplitPlan)

    def with_overrides(self, seed: Optional[int] = None, n_splits: Optional[int] = None,
                       strategy: Optional[str] = None, loss: Optional[str] = None) -> "Settings":
        """Apply command-line overrides; the seed reaches every seeded section."""
        data = self.model_dump()
        if seed is not None:
            for section in ("campaign", "surrogate", "tl", "splits"):
                data[section]["seed"] = seed
        if n_splits is not None:
            data["splits"]["n_splits"] = n_splits
        if strategy is not None:
            data["tl"]["strategy"] = strategy
        if loss is not None:
            data["tl"]["loss"] = loss
        return Settings.model_validate(data)


def load_settings(path: Union[str, Path, None] = None) -> Settings:
    """Settings from a JSON file, or the defaults when no path is given."""
    if path is None:
        return Settings()
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"config file not found: {path}")
    return Settings.model_validate_json(path.read_text(encoding="utf-8"))
