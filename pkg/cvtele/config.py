"""Runtime settings for the cvtele simulator.

Values are read once from the environment at import time. Every variable uses the
``CVTELE_`` prefix; CLI flags override them per run. A malformed value stops the
import with :class:`~cvtele.errors.ConfigError` instead of falling back silently.
"""

from __future__ import annotations

import math
import os
from typing import Callable, TypeVar

from .errors import ConfigError

T = TypeVar("T", int, float)


def _env(name: str, default: T, parse: Callable[[str], T]) -> T:
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    try:
        value = parse(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}={raw!r} is not a valid {parse.__name__}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"{name}={raw!r} must be finite")
    return value


def _env_float(name: str, default: float) -> float:
    return _env(name, default, float)


def _env_int(name: str, default: int) -> int:
    return _env(name, default, int)


APP_NAME = "cvtele"
NORM_TOL = max(0.0, _env_float("CVTELE_NORM_TOL", 1e-9))
ORACLE_TOL = max(0.0, _env_float("CVTELE_ORACLE_TOL", 1e-8))
DENSITY_FLOOR = max(0.0, _env_float("CVTELE_DENSITY_FLOOR", 1e-300))
CONV_TOL = max(0.0, _env_float("CVTELE_CONV_TOL", 1e-6))
ENVELOPE_MIN_RATE = max(1e-12, _env_float("CVTELE_ENVELOPE_MIN_RATE", 1e-4))
# Radial Gauss-Laguerre nodes for the fidelity quadrature; the error estimate reruns at half.
QUAD_NODES = max(8, _env_int("CVTELE_QUAD_NODES", 64))
THREADS = max(1, _env_int("CVTELE_THREADS", os.cpu_count() or 1))
LOG_LEVEL = os.environ.get("CVTELE_LOG_LEVEL", "WARNING").strip().upper() or "WARNING"
