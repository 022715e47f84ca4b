"""Transfer operator T(beta) of continuous-variable teleportation and its POVM.

T(beta) = sqrt((1-q^2)/pi) * D(g beta) * sum_n q^n |n><n| * D(-beta) maps the input
state to sqrt(P(beta)) |psi_out(beta)>. Everything is a dense matrix at cutoff N.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import CONV_TOL, DENSITY_FLOOR, NORM_TOL
from .errors import DimensionMismatch, InvalidInput, InvalidParam
from .fock import (
    FockVector,
    OperatorMatrix,
    amplitude,
    check_cutoff,
    displacement_batch,
    displacement_block,
    ladder_matrices,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TeleportParams:
    """Entanglement q in [0, 1), gain g >= 0 and Fock cutoff N."""

    q: float
    g: float
    N: int

    def __post_init__(self) -> None:
        q, g = float(self.q), float(self.g)
        if not math.isfinite(q) or not 0.0 <= q < 1.0:
            raise InvalidParam(f"entanglement q must lie in [0, 1), got {self.q!r}")
        if not math.isfinite(g) or g < 0.0:
            raise InvalidParam(f"gain g must be finite and >= 0, got {self.g!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "N", check_cutoff(self.N, minimum=1))

    @property
    def prefactor(self) -> float:
        return math.sqrt((1.0 - self.q ** 2) / math.pi)

    def with_cutoff(self, N: int) -> "TeleportParams":
        return dataclasses.replace(self, N=N)


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    params: TeleportParams
    beta: complex


@dataclass(frozen=True)
class ConditionalOutcome:
    """One measurement result: density P(beta) per unit d^2 beta and the output state.

    ``out_state`` is normalized unless ``degenerate`` is set, in which case it holds
    the raw (tiny) vector T(beta)|psi_in>. ``converged`` is None until a cutoff
    doubling check has been run.
    """

    beta: complex
    density: float
    out_state: FockVector
    degenerate: bool = False
    converged: Optional[bool] = None


def _number_weights(q: float, N: int) -> np.ndarray:
    return q ** np.arange(N + 1, dtype=float)


@dataclass(frozen=True)
class SchmidtCoefficients:
    q: float
    coefficients: np.ndarray
    truncation_weight: float


def epr_state(q: float, N: int) -> SchmidtCoefficients:
    """Schmidt coefficients sqrt(1-q^2) q^n of the two-mode squeezed resource, n <= N."""
    q = float(q)
    if not math.isfinite(q) or not 0.0 <= q < 1.0:
        raise InvalidParam(f"entanglement q must lie in [0, 1), got {q!r}")
    N = check_cutoff(N)
    coefficients = math.sqrt(1.0 - q ** 2) * _number_weights(q, N)
    coefficients.setflags(write=False)
    # geometric tail: sum_{n > N} (1-q^2) q^2n = q^(2N+2)
    return SchmidtCoefficients(q, coefficients, q ** (2 * N + 2))


def _check_input(params: TeleportParams, psi_in: FockVector) -> None:
    if psi_in.cutoff != params.N:
        raise DimensionMismatch(f"input cutoff {psi_in.cutoff} does not match N={params.N}")
    if not psi_in.is_normalized(NORM_TOL):
        raise InvalidInput(f"input state is not normalized (norm^2={psi_in.norm_sq:.12g})")


def inner_cutoff(N: int, beta: complex, g: float = 1.0) -> int:
    """Photon number the intermediate sum over |n><n| runs to.

    Each displacement element is exact, so only this sum is truncated; it must
    reach past (sqrt(N) + |beta|)^2 for columns near the cutoff to be complete.
    Rounded up to a multiple of 16 so index tables can be reused.
    """
    spread = math.sqrt(N) + max(1.0, g) * abs(beta)
    inner = max(N, int(math.ceil(spread ** 2 + 6 * spread + 10)))
    return -(-inner // 16) * 16


def build_transfer(params: TeleportParams, beta: complex, inner: Optional[int] = None) -> TransferMatrix:
    """Dense T(beta) at cutoff N.

    ``inner`` bounds the sum over the intermediate number states; the default
    comes from :func:`inner_cutoff`, and ``inner=N`` gives the plain product of
    cutoff-N matrices.
    """
    beta = amplitude(beta)
    N = params.N
    if (abs(params.g * beta) + math.sqrt(N) / 2) ** 2 > N:
        logger.warning("|g beta|=%.3g is close to the cutoff N=%d; results may be truncated", abs(params.g * beta), N)
    M = inner_cutoff(N, beta, params.g) if inner is None else max(N, int(inner))
    # D(g beta) diag(q^n) D(-beta) with the diagonal folded into the columns
    left = displacement_block(params.g * beta, N, M) * _number_weights(params.q, M)[None, :]
    entries = params.prefactor * (left @ displacement_block(-beta, M, N))
    entries.setflags(write=False)
    return TransferMatrix(entries, params, beta)


def _outcome(beta: complex, vector: np.ndarray) -> ConditionalOutcome:
    density = float(np.vdot(vector, vector).real)
    if density > DENSITY_FLOOR:
        return ConditionalOutcome(beta, density, FockVector(vector / math.sqrt(density)))
    logger.warning("degenerate outcome at beta=%s (density %.3g)", beta, density)
    return ConditionalOutcome(beta, density, FockVector(vector), degenerate=True)


def apply_transfer(params: TeleportParams, beta: complex, psi_in: FockVector) -> ConditionalOutcome:
    _check_input(params, psi_in)
    transfer = build_transfer(params, beta)
    return _outcome(transfer.beta, transfer.entries @ psi_in.amps)


def povm_element(params: TeleportParams, beta: complex) -> OperatorMatrix:
    """T^dagger(beta) T(beta) = (1-q^2)/pi * D(beta) diag(q^2n) D(-beta).

    Built from q and N only; the gain never enters.
    """
    beta = amplitude(beta)
    return _povm_block(params.q, beta, params.N, inner_cutoff(params.N, beta))


def _povm_block(q: float, beta: complex, rows: int, inner: int) -> np.ndarray:
    disp = displacement_block(beta, rows, inner)
    weights = (1.0 - q ** 2) / math.pi * _number_weights(q, inner) ** 2
    element = (disp * weights[None, :]) @ disp.conj().T
    return (element + element.conj().T) / 2


def outcome_density(params: TeleportParams, beta: complex, psi_in: FockVector) -> float:
    """P(beta) = <psi_in| T^dagger T |psi_in>."""
    _check_input(params, psi_in)
    element = povm_element(params, beta)
    return max(0.0, float(np.vdot(psi_in.amps, element @ psi_in.amps).real))


def oracle_conditional_state(params: TeleportParams, beta: complex, psi_in: FockVector) -> ConditionalOutcome:
    """Conditional output assembled stage by stage, without a transfer matrix.

    The two-mode resource sqrt(1-q^2) sum q^n |n>_r |n>_b is written out as a
    coefficient matrix, the input and reference modes are projected onto
    (1/sqrt(pi)) sum_n <n|D(-beta) x <n|, and only then is the output mode
    displaced by D(g beta).
    """
    _check_input(params, psi_in)
    beta = amplitude(beta)
    N, q = params.N, params.q
    M = inner_cutoff(N, beta, params.g)
    resource = np.diag(epr_state(q, M).coefficients)  # [reference, remote]
    projection = displacement_block(-beta, M, N)  # [n, input]
    remote = np.zeros(M + 1, dtype=complex)
    for n in range(M + 1):
        overlap = complex(np.dot(projection[n], psi_in.amps))
        remote += overlap * resource[n] / math.sqrt(math.pi)
    return _outcome(beta, displacement_block(params.g * beta, N, M) @ remote)


def converged_outcome(
    params: TeleportParams,
    beta: complex,
    make_input: Callable[[int], FockVector],
) -> ConditionalOutcome:
    """apply_transfer at N, re-run at 2N and flag the result when they disagree by more than CONV_TOL."""
    coarse = apply_transfer(params, beta, make_input(params.N))
    fine = apply_transfer(params.with_cutoff(2 * params.N), beta, make_input(2 * params.N))
    size = params.N + 1
    drift = max(
        abs(coarse.density - fine.density),
        float(np.max(np.abs(coarse.out_state.amps - fine.out_state.amps[:size]))),
        float(np.linalg.norm(fine.out_state.amps[size:])),
    )
    converged = drift <= CONV_TOL
    if not converged:
        logger.warning("cutoff N=%d not converged at beta=%s (drift %.3g)", params.N, beta, drift)
    return dataclasses.replace(coarse, converged=converged)


def commutation_residual(params: TeleportParams, beta: complex, block: Optional[int] = None) -> float:
    """Max |T a^dagger - ((1-q^2) beta* + q a^dagger) T| over the m, n <= block corner.

    Only meaningful at g = q.
    """
    if params.g != params.q:
        raise InvalidParam(f"operator ordering identity needs g == q, got g={params.g}, q={params.q}")
    beta = amplitude(beta)
    N, q = params.N, params.q
    block = N // 2 if block is None else min(int(block), N)
    transfer = build_transfer(params, beta).entries
    _, adag = ladder_matrices(N)
    shifted = (1.0 - q ** 2) * beta.conjugate() * np.eye(N + 1) + q * adag
    residual = transfer @ adag - shifted @ transfer
    return float(np.max(np.abs(residual[: block + 1, : block + 1])))


def povm_completeness_residual(q: float, radius: float, step: float, N: int, n_max: int = 10) -> float:
    """Riemann sum of the POVM over a square grid clipped to |beta| <= radius.

    Returns the max entrywise deviation from the identity on the n <= n_max corner.
    """
    if not 0.0 <= q < 1.0:
        raise InvalidParam(f"entanglement q must lie in [0, 1), got {q!r}")
    if radius <= 0 or step <= 0:
        raise InvalidParam("completeness grid needs positive radius and step")
    N = check_cutoff(N, minimum=1)
    n_max = min(int(n_max), N)
    axis = np.arange(-radius, radius + step / 2, step)
    x, y = np.meshgrid(axis, axis)
    inside = x * x + y * y <= radius * radius
    points = (x + 1j * y)[inside]
    weights = (1.0 - q ** 2) / math.pi * _number_weights(q, N) ** 2
    total = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    # rows n <= n_max of the POVM only need the matching rows of D(beta)
    for start in range(0, points.size, 512):
        disp = displacement_batch(points[start : start + 512], n_max, N)
        left = (disp * weights).transpose(1, 0, 2).reshape(n_max + 1, -1)
        right = disp.transpose(1, 0, 2).reshape(n_max + 1, -1)
        total += left @ right.conj().T
    total = (total + total.conj().T) / 2 * step * step
    return float(np.max(np.abs(total - np.eye(n_max + 1))))
