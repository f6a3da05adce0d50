"""
syllable-pursuit - template matching annotation of birdsong

Learns syllable templates from a small annotated support set by detection,
density-based clustering, split and merge, then annotates recordings with a
greedy matching pursuit over the spectrogram.
"""

from .config.config_loader import ConfigLoader  # noqa: F401
from .config.settings import settings  # noqa: F401

__version__ = "0.3.0"

__all__ = [
    "__version__",
    "ConfigLoader",
    "settings",
]
