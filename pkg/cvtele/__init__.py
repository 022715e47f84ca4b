"""cvtele: continuous-variable quantum teleportation in a truncated Fock space."""

from __future__ import annotations

from .errors import (
    ConfigError,
    CutoffExceeded,
    CvTeleError,
    DimensionMismatch,
    EnvelopeFailure,
    InvalidInput,
    InvalidParam,
    UnsupportedMethod,
)
from .fock import FockVector, cat_state, coherent_state, number_state
from .transfer import ConditionalOutcome, TeleportParams, apply_transfer, build_transfer, povm_element

__version__ = "0.1.0"

__all__ = [
    "ConditionalOutcome",
    "ConfigError",
    "CutoffExceeded",
    "CvTeleError",
    "DimensionMismatch",
    "EnvelopeFailure",
    "FockVector",
    "InvalidInput",
    "InvalidParam",
    "TeleportParams",
    "UnsupportedMethod",
    "apply_transfer",
    "build_transfer",
    "cat_state",
    "coherent_state",
    "number_state",
    "povm_element",
]
