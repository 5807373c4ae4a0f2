"""Numerical defaults and environment-backed settings."""

import os
from pathlib import Path

from dotenv import load_dotenv

env_path = Path(__file__).parent.parent.parent / ".env"
load_dotenv(dotenv_path=env_path)

# Phase grids and truncation
DEFAULT_GRID_SIZE = 512
DEFAULT_N_MAX = 12
PHOTON_CAP = 16

# Tolerances
UNITARITY_TOL = 1e-9
ROOT_RESIDUAL_TOL = 1e-8
PSD_TOL = 1e-10
TAIL_TOL = 1e-12
FIRST_COLUMN_TOL = 1e-12

# Inverse Bernoulli amplification above which a warning is logged
ILL_CONDITIONED_AMPLIFICATION = 1e6

DEFAULT_SEED = 0
DEFAULT_LOG_DIR = Path.cwd() / "logs"


def get_default_seed() -> int:
    """Seed used when no --seed is given (RETROPTICS_SEED, else 0).

    Raises:
        ValueError: If RETROPTICS_SEED is set but not an integer
    """
    raw = os.getenv("RETROPTICS_SEED")
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"RETROPTICS_SEED must be an integer, got '{raw}'") from exc


def get_log_level() -> str:
    """Log level from RETROPTICS_LOG_LEVEL (default INFO)."""
    return os.getenv("RETROPTICS_LOG_LEVEL", "INFO").upper()


def get_log_dir() -> Path:
    """Log directory from RETROPTICS_LOG_DIR (default ./logs)."""
    raw = os.getenv("RETROPTICS_LOG_DIR")
    return Path(raw) if raw else DEFAULT_LOG_DIR
