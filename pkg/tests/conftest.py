"""Shared pytest fixtures."""

import logging

import pytest

from retroptics.logging_config import LOGGER_NAME


@pytest.fixture(autouse=True)
def isolated_package_logger():
    """Restore the package logger's handlers and level after each test."""
    logger = logging.getLogger(LOGGER_NAME)
    handlers = list(logger.handlers)
    level = logger.level

    yield logger

    for handler in logger.handlers:
        if handler not in handlers:
            handler.close()
    logger.handlers = handlers
    logger.setLevel(level)
