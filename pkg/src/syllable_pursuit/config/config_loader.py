"""
Configuration loader for the YAML pipeline configuration

Resolves the configuration file, validates it against PipelineConfig and
derives the fingerprint that ties archives and annotations to the
STFT/detection settings that produced them.
"""

import hashlib
from pathlib import Path
from typing import Any, Dict, List, Optional

import orjson
import yaml
from pydantic import ValidationError

from ..models.config_types import PipelineConfig
from ..models.synth_types import SynthCorpusConfig
from ..services.pipeline_errors import ConfigurationError
from .settings import settings


class ConfigLoader:
    """Pipeline configuration loader"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file or settings.config_file
        self._config: Optional[PipelineConfig] = None
        self.config_path: Optional[Path] = None

    def _candidate_paths(self) -> List[Path]:
        # Project root is 4 levels up: config_loader.py -> config -> syllable_pursuit -> src -> root
        project_root = Path(__file__).parent.parent.parent.parent
        return [
            Path(self.config_file),
            project_root / self.config_file,
            project_root / "config" / "pipeline.yml",
        ]

    def load_config(self) -> PipelineConfig:
        """Load and validate the configuration file"""
        if self._config is not None:
            return self._config

        possible_paths = self._candidate_paths()
        config_path = None
        for path in possible_paths:
            resolved_path = path.resolve()
            if resolved_path.is_file():
                config_path = resolved_path
                break

        if config_path is None:
            attempted_paths = [str(p.resolve()) for p in possible_paths]
            raise ConfigurationError(
                f"Configuration file not found. Tried: {', '.join(attempted_paths)}",
                self.config_file,
            )

        try:
            with open(config_path, "r", encoding="utf-8") as file:
                config_data = yaml.safe_load(file)
        except yaml.YAMLError as error:
            raise ConfigurationError(f"Invalid YAML in {config_path}: {error}", config_path) from error

        self._config = parse_config(config_data or {}, source=config_path)
        self.config_path = config_path
        return self._config

    def reload_config(self) -> PipelineConfig:
        """Force reload configuration from file"""
        self._config = None
        return self.load_config()


def parse_config(data: Dict[str, Any], source: Optional[Path] = None) -> PipelineConfig:
    """Validate a configuration mapping, reporting the offending keys"""
    if not isinstance(data, dict):
        raise ConfigurationError(f"Configuration root must be a mapping, got {type(data).__name__}", source)
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as error:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}" for item in error.errors()
        )
        where = f" in {source}" if source is not None else ""
        raise ConfigurationError(f"Invalid configuration{where}: {problems}", source) from error


def apply_overrides(config: PipelineConfig, **overrides: Any) -> PipelineConfig:
    """Return a re-validated copy with top-level and ``paths.*`` overrides applied"""
    data = config.model_dump(mode="json")
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "output_root":
            data["paths"]["output_root"] = str(value)
        else:
            data[key] = value
    return parse_config(data)


def config_fingerprint(config: PipelineConfig) -> str:
    """Fingerprint of the settings that shape spectrograms and patches"""
    payload = {
        "stft": config.stft.model_dump(mode="json"),
        "detect": config.detect.model_dump(mode="json"),
    }
    digest = hashlib.sha256(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS)).hexdigest()
    return digest[:16]


def load_synth_config(path: Optional[str] = None, seed: Optional[int] = None) -> SynthCorpusConfig:
    """Synthetic corpus settings from a YAML file (defaults when absent)"""
    data: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigurationError(f"Synthetic corpus configuration not found: {config_path}", config_path)
        try:
            data = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as error:
            raise ConfigurationError(f"Invalid YAML in {config_path}: {error}", config_path) from error
    if seed is not None:
        data = {**data, "seed": seed}
    try:
        return SynthCorpusConfig.model_validate(data)
    except ValidationError as error:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}" for item in error.errors()
        )
        raise ConfigurationError(f"Invalid synthetic corpus configuration: {problems}", path) from error
