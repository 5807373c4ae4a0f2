"""Configuration module for retroptics."""

from retroptics.config.presets import (
    PRESETS,
    PresetName,
    get_preset,
    list_presets,
    preset_kind,
)
from retroptics.config.settings import (
    DEFAULT_GRID_SIZE,
    DEFAULT_N_MAX,
    PHOTON_CAP,
    get_default_seed,
    get_log_dir,
    get_log_level,
)

__all__ = [
    "PRESETS",
    "PresetName",
    "get_preset",
    "list_presets",
    "preset_kind",
    "DEFAULT_GRID_SIZE",
    "DEFAULT_N_MAX",
    "PHOTON_CAP",
    "get_default_seed",
    "get_log_dir",
    "get_log_level",
]
