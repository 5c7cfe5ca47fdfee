import logging

import coloredlogs

from .config import SETTINGS

# Set up logging
logger = logging.getLogger('summinglab')
coloredlogs.install(
    level=SETTINGS.log_level, logger=logger, fmt='%(asctime)s %(levelname)s %(message)s'
)


def set_log_level(level: str) -> None:
    """Change the console level at runtime (used by the CLI)."""
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)


def log_debug(*args, **kwargs):
    """Log a debug message."""
    logger.debug(*args, **kwargs)


def log_info(*args, **kwargs):
    """Log an info message."""
    logger.info(*args, **kwargs)


def log_warning(*args, **kwargs):
    """Log a warning message."""
    logger.warning(*args, **kwargs)


def log_error(*args, **kwargs):
    """Log an error message."""
    logger.error(*args, **kwargs)
