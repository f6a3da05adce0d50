"""
Configuration module for syllable-pursuit

Provides process settings and the pipeline configuration loader.
"""

from .config_loader import ConfigLoader, apply_overrides, config_fingerprint, load_synth_config, parse_config
from .settings import Settings, settings

__all__ = ["ConfigLoader", "Settings", "apply_overrides", "config_fingerprint", "load_synth_config", "parse_config", "settings"]
