from __future__ import annotations

import logging


def configure_logging(level: str | None = "WARNING") -> None:
    """Configure stdlib logging once for the app.

    Records go to stderr; stdout is reserved for command results.
    """
    level = (level or "WARNING").upper()

    root = logging.getLogger()
    if root.handlers:
        # Avoid double-configuring when called multiple times.
        root.setLevel(level)
        _tune_third_party_loggers()
        return

    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
    )

    _tune_third_party_loggers()


def _tune_third_party_loggers() -> None:
    # matplotlib/numexpr backends pulled in by pandas log import chatter at INFO.
    for name in ("numexpr", "matplotlib"):
        logging.getLogger(name).setLevel(logging.WARNING)
