"""Tests for logging configuration."""

import logging
import sys
import tempfile
from pathlib import Path
from unittest.mock import MagicMock

from retroptics.logging_config import (
    log_command,
    log_design_event,
    log_simulation_run,
    log_validation_result,
    setup_logging,
)


def _detach(logger):
    """Remove and close every handler so temporary log files can go."""
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


class TestSetupLogging:
    """Test logging setup."""

    def test_setup_console_only(self):
        """Test setting up console logging only."""
        logger = setup_logging(log_to_file=False, log_to_console=True)

        assert logger.name == "retroptics"
        assert len(logger.handlers) == 1
        assert isinstance(logger.handlers[0], logging.StreamHandler)

    def test_console_goes_to_stderr(self):
        """Test console records stay off stdout."""
        logger = setup_logging(log_to_file=False, log_to_console=True)

        assert logger.handlers[0].stream is sys.stderr

    def test_setup_file_only(self):
        """Test setting up file logging only."""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = setup_logging(
                log_to_file=True, log_to_console=False, log_dir=Path(tmpdir)
            )

            assert len(logger.handlers) == 1
            assert isinstance(logger.handlers[0], logging.FileHandler)
            _detach(logger)

    def test_log_level_setting(self):
        """Test that log level is set correctly."""
        logger = setup_logging(log_level="debug", log_to_file=False)

        assert logger.level == logging.DEBUG

    def test_log_file_created(self):
        """Test that log file is created."""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = setup_logging(
                log_to_file=True, log_to_console=False, log_dir=Path(tmpdir)
            )

            log_files = list(Path(tmpdir).glob("*.log"))
            assert len(log_files) == 1
            assert log_files[0].name.startswith("retroptics_")
            _detach(logger)

    def test_repeated_setup_replaces_handlers(self):
        """Test calling setup twice does not duplicate handlers."""
        setup_logging(log_to_file=False)
        logger = setup_logging(log_to_file=False)

        assert len(logger.handlers) == 1

    def test_repeated_setup_closes_file_handler(self):
        """Test a replaced file handler is closed before the new setup."""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = setup_logging(
                log_to_file=True, log_to_console=False, log_dir=Path(tmpdir)
            )
            file_handler = logger.handlers[0]

            setup_logging(log_to_file=False, log_to_console=False)

            assert file_handler.stream is None
            assert file_handler not in logger.handlers

    def test_module_records_survive_removed_log_dir(self):
        """Test library records still emit once a file-logging run has cleaned up."""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = setup_logging(
                log_level="DEBUG", log_to_file=True, log_dir=Path(tmpdir)
            )
            _detach(logger)

        logging.getLogger("retroptics.tools.detection").debug("after cleanup")

        assert not any(
            isinstance(handler, logging.FileHandler) for handler in logger.handlers
        )


class TestLogCommand:
    """Test CLI command logging."""

    def test_started(self):
        """Test logging a command start."""
        logger = MagicMock()

        log_command(logger, "design", {"unitary": "dft"})

        logger.info.assert_called_once()
        assert "STARTED" in logger.info.call_args[0][0]

    def test_success(self):
        """Test logging a successful command."""
        logger = MagicMock()

        log_command(logger, "simulate", {"trials": 10}, result={"records": 4})

        logger.info.assert_called_once()
        assert "SUCCESS" in logger.info.call_args[0][0]
        assert logger.info.call_args[1]["extra"]["has_result"] is True

    def test_error(self):
        """Test logging a failed command."""
        logger = MagicMock()
        error = ValueError("missing phase setting: j=0.5")

        log_command(logger, "analyze", {"mode": "moments"}, error=error)

        logger.error.assert_called_once()
        extra = logger.error.call_args[1]["extra"]
        assert "FAILED" in logger.error.call_args[0][0]
        assert extra["error_type"] == "ValueError"
        assert extra["error"] == "missing phase setting: j=0.5"


class TestLogDesignEvent:
    """Test design event logging."""

    def test_started(self):
        """Test a design without efficiency is logged as started."""
        logger = MagicMock()

        log_design_event(logger, target_degree=2, unitary_kind="dft")

        assert "STARTED" in logger.info.call_args[0][0]
        assert "efficiency" not in logger.info.call_args[1]["extra"]

    def test_success(self):
        """Test the efficiency is reported on success."""
        logger = MagicMock()

        log_design_event(logger, target_degree=2, unitary_kind="optimize", efficiency=0.149)

        assert "P_psi=0.149" in logger.info.call_args[0][0]
        assert logger.info.call_args[1]["extra"]["efficiency"] == 0.149


class TestLogSimulationRun:
    """Test simulation run logging."""

    def test_run(self):
        """Test trials, seed and workers are carried in extra."""
        logger = MagicMock()

        log_simulation_run(logger, "eight_port", trials=1000, seed=3, workers=2)

        message = logger.info.call_args[0][0]
        assert "eight_port" in message
        assert "seed 3" in message
        assert logger.info.call_args[1]["extra"]["workers"] == 2


class TestLogValidationResult:
    """Test validation result logging."""

    def test_log_validation_passed(self):
        """Test logging successful validation."""
        logger = MagicMock()

        log_validation_result(logger, check_name="unitarity", is_valid=True)

        logger.info.assert_called_once()
        assert "PASSED" in logger.info.call_args[0][0]

    def test_log_validation_failed(self):
        """Test logging failed validation."""
        logger = MagicMock()
        issues = {"max_deviation": 3e-6}

        log_validation_result(logger, check_name="unitarity", is_valid=False, issues=issues)

        logger.warning.assert_called_once()
        call_args = logger.warning.call_args
        assert "FAILED" in call_args[0][0]
        assert call_args[1]["extra"]["issues"] == issues


class TestIntegration:
    """Test integrated logging scenarios."""

    def test_complete_workflow_logging(self):
        """Test logging a design and a simulation to a file."""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = setup_logging(
                log_level="DEBUG",
                log_to_file=True,
                log_to_console=False,
                log_dir=Path(tmpdir),
            )

            log_command(logger, "design", {"target": "1,1,1"})
            log_design_event(logger, 2, "two_bs", efficiency=0.06708)
            log_simulation_run(logger, "eight_port", 1000, 0)
            log_validation_result(logger, check_name="reck round trip", is_valid=True)
            log_command(logger, "design", {"target": "1,1,1"}, result="ok")

            log_files = list(Path(tmpdir).glob("*.log"))
            assert len(log_files) == 1
            assert log_files[0].stat().st_size > 0
            _detach(logger)
