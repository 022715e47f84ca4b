"""Exception types raised by cvtele."""

from __future__ import annotations


class CvTeleError(Exception):
    """Base class for every error the simulator raises on purpose."""


class InvalidParam(CvTeleError, ValueError):
    """A physical parameter (q, g, s, dB, amplitude) is out of range or not finite."""


class InvalidInput(CvTeleError, ValueError):
    """An input state violates a precondition, e.g. it is not normalized."""


class DimensionMismatch(CvTeleError, ValueError):
    """Two Fock-space objects use different cutoffs."""


class CutoffExceeded(CvTeleError, ValueError):
    """A requested photon number does not fit in the truncated space."""


class EnvelopeFailure(CvTeleError, RuntimeError):
    """Rejection sampling accepted too few proposals; widen the proposal."""

    def __init__(self, message: str, acceptance_rate: float) -> None:
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class UnsupportedMethod(CvTeleError, ValueError):
    """An estimator was asked to run on an input it cannot handle."""


class ConfigError(CvTeleError, ValueError):
    """A run configuration could not be parsed or is inconsistent."""
