"""Process-wide logging setup."""

import logging
from typing import Optional

from lcmix.config import settings


def configure_logging(level: Optional[str] = None) -> None:
    """Configure the root logger from ``settings.LOG_LEVEL``/``settings.LOG_FORMAT``."""
    level_name = (level or settings.LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=settings.LOG_FORMAT, force=True)
