"""Generic utilities."""
import logging
import math
import os
from typing import Optional

from loguru import logger

WORKERS_ENV = 'JSDBOUND_WORKERS'


class InterceptHandler(logging.Handler):
    def emit(self, record):
        # Get corresponding Loguru level if it exists
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # Find caller from where originated the logged message
        frame, depth = logging.currentframe(), 2
        while frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def resolve_workers(requested: Optional[int] = None, default: int = 1) -> int:
    """Pick the worker count: explicit value first, then the environment variable, then the default."""
    if requested is not None:
        return max(1, int(requested))
    env_value = os.environ.get(WORKERS_ENV)
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f'Ignoring invalid {WORKERS_ENV}={env_value!r}')
    return max(1, int(default))


def format_nats(value: float, precision: int = 7) -> str:
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if math.isnan(value):
        return 'nan'
    return f'{value:.{precision}f}'


def window_length(count: int, fraction: float) -> int:
    """Number of trailing items kept when averaging over the last ``fraction`` of ``count`` items."""
    if count <= 0:
        return 0
    return min(count, max(1, int(math.ceil(fraction * count - 1e-9))))
