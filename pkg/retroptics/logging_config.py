"""Logging configuration for retroptics.

Library modules log through ``logging.getLogger(__name__)`` and never attach
handlers; the CLI (or an embedding application) calls :func:`setup_logging`
once to decide where records go.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any

from retroptics.config.settings import get_log_dir

LOGGER_NAME = "retroptics"


def setup_logging(
    log_level: str = "INFO",
    log_to_file: bool = False,
    log_to_console: bool = True,
    log_dir: Path | None = None,
) -> logging.Logger:
    """
    Configure the ``retroptics`` logger.

    Console records go to stderr so that ``--json`` payloads on stdout stay
    machine readable.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Whether to log to a timestamped file (default: False)
        log_to_console: Whether to log to stderr (default: True)
        log_dir: Custom log directory (default: RETROPTICS_LOG_DIR or ./logs)

    Returns:
        logging.Logger: Configured logger instance

    Example:
        >>> logger = setup_logging(log_level="DEBUG", log_to_file=False)
        >>> logger.info("Simulation started")
    """
    level = getattr(logging, log_level.upper())
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.close()
    logger.handlers = []

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    if log_to_console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if log_to_file:
        log_directory = log_dir or get_log_dir()
        log_directory.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        log_file = log_directory / f"retroptics_{timestamp}.log"

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        logger.info(f"Logging to file: {log_file}")

    return logger


def log_command(
    logger: logging.Logger,
    command: str,
    parameters: dict[str, Any],
    result: Any = None,
    error: Exception | None = None,
):
    """
    Log a CLI command invocation.

    Args:
        logger: Logger instance
        command: Sub-command name (design, decompose, simulate, analyze)
        parameters: Parsed command parameters
        result: Command result (optional)
        error: Exception if the command failed (optional)

    Example:
        >>> logger = setup_logging(log_to_file=False)
        >>> log_command(logger, "design", {"unitary": "dft"}, result={"efficiency": 0.13})
    """
    if error:
        logger.error(
            f"Command FAILED: {command}",
            extra={
                "command": command,
                "parameters": parameters,
                "error": str(error),
                "error_type": type(error).__name__,
            },
        )
    elif result:
        logger.info(
            f"Command SUCCESS: {command}",
            extra={"command": command, "parameters": parameters, "has_result": True},
        )
    else:
        logger.info(
            f"Command STARTED: {command}",
            extra={"command": command, "parameters": parameters},
        )


def log_design_event(
    logger: logging.Logger,
    target_degree: int,
    unitary_kind: str,
    efficiency: float | None = None,
):
    """
    Log the outcome of a retrodictive state design.

    Args:
        logger: Logger instance
        target_degree: Highest photon number in the target state
        unitary_kind: How the multiport was chosen (dft, optimize, file, preset)
        efficiency: Relative success probability P_psi, if computed
    """
    extra = {"target_degree": target_degree, "unitary_kind": unitary_kind}
    if efficiency is None:
        logger.info(f"Design STARTED: degree {target_degree} via {unitary_kind}", extra=extra)
        return
    extra["efficiency"] = efficiency
    logger.info(
        f"Design SUCCESS: degree {target_degree} via {unitary_kind}, P_psi={efficiency:.6g}",
        extra=extra,
    )


def log_simulation_run(
    logger: logging.Logger,
    experiment: str,
    trials: int,
    seed: int,
    workers: int = 1,
):
    """
    Log a Monte Carlo simulation run.

    Args:
        logger: Logger instance
        experiment: Experiment kind (eight_port, double_bs, single_bs)
        trials: Number of sampled detection events
        seed: Base seed; worker k uses seed + k
        workers: Number of sampling workers
    """
    logger.info(
        f"Simulation run: {experiment} ({trials} trials, seed {seed}, {workers} worker(s))",
        extra={
            "experiment": experiment,
            "trials": trials,
            "seed": seed,
            "workers": workers,
        },
    )


def log_validation_result(
    logger: logging.Logger,
    check_name: str,
    is_valid: bool,
    issues: dict[str, Any] | None = None,
):
    """
    Log a numerical validation result.

    Args:
        logger: Logger instance
        check_name: Name of the check (e.g. "unitarity", "root residual")
        is_valid: Whether the check passed
        issues: Offending values if any

    Example:
        >>> logger = setup_logging(log_to_file=False)
        >>> log_validation_result(
        ...     logger,
        ...     check_name="unitarity",
        ...     is_valid=False,
        ...     issues={"max_deviation": 3e-6}
        ... )
    """
    if is_valid:
        logger.info(
            f"Validation PASSED: {check_name}",
            extra={"check_name": check_name, "is_valid": True},
        )
    else:
        logger.warning(
            f"Validation FAILED: {check_name}",
            extra={"check_name": check_name, "is_valid": False, "issues": issues},
        )

