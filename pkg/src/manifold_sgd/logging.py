"""Logging configuration for manifold-sgd."""

import logging
from typing import Any, Literal

from rich.logging import RichHandler

from manifold_sgd.config import get_settings


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance, namespaced under 'manifold_sgd'.

    Args:
        name: The name for the logger.

    Returns:
        A configured logger instance.
    """
    if not name.startswith("manifold_sgd."):
        name = f"manifold_sgd.{name}"
    return logging.getLogger(name)


def configure_logging(
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] | int | None = None,
    **rich_kwargs: Any,
) -> None:
    """
    Configure logging for the library using RichHandler.

    Args:
        level: The minimum log level to display (defaults to settings).
        **rich_kwargs: Additional arguments for RichHandler.
    """
    settings = get_settings()
    if not settings.log_enabled:
        return

    root_logger = logging.getLogger("manifold_sgd")
    root_logger.setLevel(level if level is not None else settings.log_level)

    if not root_logger.handlers:
        handler = RichHandler(rich_tracebacks=settings.rich_tracebacks, **rich_kwargs)
        root_logger.addHandler(handler)

    root_logger.propagate = True


# Initialize logging with default settings
configure_logging()
