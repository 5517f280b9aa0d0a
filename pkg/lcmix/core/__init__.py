"""Core module exports."""

from .exceptions import (
    EXIT_ESTIMATION_FAILURE,
    EXIT_INPUT_ERROR,
    EXIT_NUMERICAL_WARNING,
    LCMixException,
)
from .logging_config import configure_logging

__all__ = [
    "EXIT_ESTIMATION_FAILURE",
    "EXIT_INPUT_ERROR",
    "EXIT_NUMERICAL_WARNING",
    "LCMixException",
    "configure_logging",
]
