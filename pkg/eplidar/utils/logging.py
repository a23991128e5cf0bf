import logging
import sys

LOG_FORMAT = "[%(levelname)s] %(message)s"


def setup_logging(level: str = "INFO") -> None:
    """Route every eplidar logger to stderr, one level-prefixed line per event."""
    root = logging.getLogger("eplidar")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level.upper())
    root.propagate = False
