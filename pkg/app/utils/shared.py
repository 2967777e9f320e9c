# Native and installed modules
import logging
import sys

# Custom modules
import config


log = logging.getLogger("workbench")


def configure_logging(level=None):
    """Attach the status-line handler to the workbench logger once."""

    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(config.LOG_FORMAT))
        log.addHandler(handler)
        log.propagate = False
    log.setLevel(level or config.LOG_LEVEL)
    return log
