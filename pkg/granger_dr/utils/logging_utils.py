import logging
import sys

from granger_dr.config.config import RuntimeConfig

_HANDLER_NAME = "granger_dr"


def setup_logging(level=None):
    """Set up logging configuration"""
    config = RuntimeConfig()
    level = (level or config.LOG_LEVEL).upper()

    # Configure root logger
    logger = logging.getLogger()
    logger.setLevel(level)

    # stdout carries the CLI tables, so log records go to stderr
    handler = next((h for h in logger.handlers if h.get_name() == _HANDLER_NAME), None)
    if handler is None:
        handler = logging.StreamHandler(sys.stderr)
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        logger.addHandler(handler)
    handler.setLevel(level)

    return logger
