"""Orchestration, configuration, figure presets and plot output."""

from .errors import ConfigError, DataError, StageError
from .presets import PRESETS, AnalysisPreset, get_preset

__all__ = ["ConfigError", "DataError", "StageError", "PRESETS", "AnalysisPreset", "get_preset"]
