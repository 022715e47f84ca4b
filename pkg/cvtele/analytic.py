"""Closed-form teleportation results.

These are the fast evaluators used by sweeps and the reference values the
numeric transfer matrices are checked against.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import comb, gammaln

from .errors import CutoffExceeded, InvalidParam
from .fock import (
    FockVector,
    amplitude,
    check_cutoff,
    coherent_state,
    displacement_block,
    displacement_matrix,
    ladder_matrices,
)
from .transfer import SchmidtCoefficients, TeleportParams, commutation_residual, epr_state  # noqa: F401


def _check_q(q: float) -> float:
    q = float(q)
    if not math.isfinite(q) or not 0.0 <= q < 1.0:
        raise InvalidParam(f"entanglement q must lie in [0, 1), got {q!r}")
    return q


@dataclass(frozen=True)
class SqueezeSpec:
    q: float
    s: float
    db: float


def squeeze_convert(q: Optional[float] = None, s: Optional[float] = None, db: Optional[float] = None) -> SqueezeSpec:
    """Convert between entanglement q, squeezing factor s and noise suppression in dB.

    q = (1-s)/(1+s) and db = -10 log10(s); exactly one argument must be given.
    """
    given = [name for name, value in (("q", q), ("s", s), ("db", db)) if value is not None]
    if len(given) != 1:
        raise InvalidParam(f"give exactly one of q, s, db (got {given or 'none'})")
    if q is not None:
        q = _check_q(q)
        s = (1.0 - q) / (1.0 + q)
    elif db is not None:
        db = float(db)
        if not math.isfinite(db) or db < 0.0:
            raise InvalidParam(f"noise suppression must be >= 0 dB, got {db!r}")
        s = 10.0 ** (-db / 10.0)
    else:
        s = float(s)
        if not math.isfinite(s) or not 0.0 < s <= 1.0:
            raise InvalidParam(f"squeezing factor must lie in (0, 1], got {s!r}")
    q_value = (1.0 - s) / (1.0 + s) if q is None else q
    db_value = -10.0 * math.log10(s) if db is None else db
    return SqueezeSpec(q_value, s, db_value)


@dataclass(frozen=True)
class CoherentTeleportResult:
    """T(beta)|alpha> = prob_factor * phase * |out_amplitude>."""

    prob_factor: float
    phase: complex
    out_amplitude: complex

    @property
    def density(self) -> float:
        return self.prob_factor ** 2


def coherent_output_closed_form(params: TeleportParams, alpha: complex, beta: complex) -> CoherentTeleportResult:
    alpha, beta = amplitude(alpha), amplitude(beta)
    q, g = params.q, params.g
    prob_factor = params.prefactor * math.exp(-(1.0 - q ** 2) * abs(alpha - beta) ** 2 / 2)
    # (alpha beta* - beta alpha*) is purely imaginary
    phase = cmath.exp((1.0 - g * q) * (alpha * beta.conjugate() - beta * alpha.conjugate()) / 2)
    return CoherentTeleportResult(prob_factor, phase, q * alpha + (g - q) * beta)


def coherent_output_vector(result: CoherentTeleportResult, N: int) -> np.ndarray:
    """Unnormalized Fock amplitudes of prob_factor * phase * |out_amplitude>."""
    return result.prob_factor * result.phase * coherent_state(result.out_amplitude, N).amps


def fluctuation_density(q: float, phi):
    """P(phi) = (1-q^2)/pi exp(-(1-q^2)|phi|^2); accepts scalars or arrays."""
    q = _check_q(q)
    weight = 1.0 - q ** 2
    return weight / math.pi * np.exp(-weight * np.abs(phi) ** 2)


def fluctuation_second_moment(q: float) -> float:
    """<|phi|^2> under P(phi); each quadrature carries half."""
    return 1.0 / (1.0 - _check_q(q) ** 2)


def coherent_fidelity_closed_form(params: TeleportParams, alpha: complex) -> float:
    """Average |<alpha|g alpha + (g-q) phi>|^2 over P(phi).

    Equals (1+q)/2 at unit gain and exp(-(1-q)^2 |alpha|^2) at g = q.
    """
    alpha = amplitude(alpha)
    weight = 1.0 - params.q ** 2
    slope = (params.g - params.q) ** 2
    offset = abs((params.g - 1.0) * alpha) ** 2
    return weight / (weight + slope) * math.exp(-weight * offset / (weight + slope))


def gain_covariance(params: TeleportParams) -> float:
    """Cov(Re phi, Re(out - g alpha)) = (g-q) * Var(Re phi) = (g-q) / (2(1-q^2))."""
    return (params.g - params.q) / (2.0 * (1.0 - params.q ** 2))


@dataclass(frozen=True)
class OperatorOrdering:
    """T a^dagger = (shift + scale a^dagger) T at g = q, with the numeric residual."""

    shift: complex
    scale: float
    residual: float


def transfer_ladder_commutation(params: TeleportParams, beta: complex, block: Optional[int] = None) -> OperatorOrdering:
    if params.g != params.q:
        raise InvalidParam(f"operator ordering identity needs g == q, got g={params.g}, q={params.q}")
    beta = amplitude(beta)
    shift = (1.0 - params.q ** 2) * beta.conjugate()
    return OperatorOrdering(shift, params.q, commutation_residual(params, beta, block))


@dataclass(frozen=True)
class BeamSplitterView:
    reflectivity: float
    transmission_factor: float
    back_action: complex


def beam_splitter_view(q: float, beta: complex) -> BeamSplitterView:
    """Read the g = q ordering as a beam splitter of reflectivity 1-q^2.

    The creation operator is transmitted with amplitude q and the lost part is
    replaced by the back-action amplitude sqrt(1-q^2) beta*.
    """
    q = _check_q(q)
    beta = amplitude(beta)
    return BeamSplitterView(1.0 - q ** 2, q, math.sqrt(1.0 - q ** 2) * beta.conjugate())


def number_state_output_closed_form(params: TeleportParams, n: int, beta: complex, N: int) -> FockVector:
    """T(beta)|n> via the binomial expansion of ((1-q^2) beta* + q a^dagger)^n |0>.

    Returns sqrt(P) |psi_out> as an unnormalized FockVector: its norm_sq is the
    outcome density, and :func:`split_density` separates the two.
    """
    N = check_cutoff(N)
    if int(n) != n or n < 0:
        raise InvalidParam(f"photon number must be a non-negative integer, got {n!r}")
    n = int(n)
    if 2 * n > N:
        raise CutoffExceeded(f"|{n}> needs a cutoff of at least {2 * n}, got N={N}")
    beta = amplitude(beta)
    q, g = params.q, params.g
    shift = (1.0 - q ** 2) * beta.conjugate()
    k = np.arange(n + 1)
    # C(n,k) shift^(n-k) q^k sqrt(k!) for the |k> component
    terms = comb(n, k) * shift ** (n - k) * q ** k * np.exp(0.5 * gammaln(k + 1))
    polynomial = np.zeros(N + 1, dtype=complex)
    polynomial[: n + 1] = terms
    scale = math.sqrt((1.0 - q ** 2) / (math.pi * math.factorial(n))) * math.exp(-(1.0 - q ** 2) * abs(beta) ** 2 / 2)
    return FockVector(scale * (displacement_matrix((g - q) * beta, N) @ polynomial), 0.0, f"transfer:number:{n}")


def split_density(vector: FockVector | np.ndarray) -> Tuple[float, FockVector]:
    """Turn sqrt(P)|psi_out> into (P, |psi_out>)."""
    amps = vector.amps if isinstance(vector, FockVector) else np.asarray(vector, dtype=complex)
    density = float(np.vdot(amps, amps).real)
    if density <= 0.0:
        raise InvalidParam("zero vector carries no output state")
    label = vector.label if isinstance(vector, FockVector) else ""
    return density, FockVector(amps / math.sqrt(density), 0.0, label)


def displaced_number_moments(n: int, beta: complex, N: int) -> Tuple[float, float]:
    """Moments of the POVM eigenstate D(beta)|n> around beta.

    Returns <(a^dagger - beta*)(a - beta)> (= n) and the symmetrized
    <{(a - beta)^dagger, a - beta}>/2 (= n + 1/2, the squared circle radius).
    """
    N = check_cutoff(N, minimum=1)
    beta = amplitude(beta)
    if int(n) != n or not 0 <= n <= N:
        raise CutoffExceeded(f"|{n}> does not fit below cutoff N={N}")
    state = displacement_block(beta, N, N)[:, int(n)]
    a, adag = ladder_matrices(N)
    lowered = a @ state - beta * state
    raised = adag @ state - beta.conjugate() * state
    number = float(np.vdot(lowered, lowered).real)
    symmetrized = 0.5 * (number + float(np.vdot(raised, raised).real))
    return number, symmetrized
