"""Single-mode Fock-space primitives.

States are amplitude arrays over |0>..|N>; operators are dense (N+1)x(N+1)
complex numpy arrays. Every value is immutable once built and every function is
pure, so sweep workers can share them freely.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .config import NORM_TOL
from .errors import CutoffExceeded, DimensionMismatch, InvalidParam

logger = logging.getLogger(__name__)

# Dense (N+1)x(N+1) complex matrix; the cutoff is shape[0] - 1.
OperatorMatrix = np.ndarray


def amplitude(value: complex | float | int) -> complex:
    """Coerce a field amplitude (alpha, beta, phi) to ``complex`` and reject NaN/Inf."""
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidParam(f"amplitude must be finite, got {value!r}")
    return z


def check_cutoff(N: int, minimum: int = 0) -> int:
    if int(N) != N or N < minimum:
        raise InvalidParam(f"cutoff must be an integer >= {minimum}, got {N!r}")
    return int(N)


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class FockVector:
    """Pure single-mode state c_0..c_N.

    ``truncation_weight`` is the probability the constructor could not place below
    the cutoff (1 - sum |c_n|^2 for states that are normalized on the full space).
    It is metadata only; nothing here renormalizes behind the caller's back.
    """

    amps: np.ndarray
    truncation_weight: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=complex, copy=True).reshape(-1)
        if amps.size == 0:
            raise InvalidParam("a Fock vector needs at least the vacuum amplitude")
        if not np.all(np.isfinite(amps)):
            raise InvalidParam("Fock amplitudes must be finite")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def cutoff(self) -> int:
        return self.amps.size - 1

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq - 1.0) <= tol

    def normalized(self) -> "FockVector":
        norm_sq = self.norm_sq
        if norm_sq <= 0.0:
            raise InvalidParam("cannot normalize the zero vector")
        return FockVector(self.amps / math.sqrt(norm_sq), 0.0, self.label)


def number_state(n: int, N: int) -> FockVector:
    N = check_cutoff(N)
    if int(n) != n or n < 0:
        raise InvalidParam(f"photon number must be a non-negative integer, got {n!r}")
    if n > N:
        raise CutoffExceeded(f"|{n}> does not fit below cutoff N={N}")
    amps = np.zeros(N + 1, dtype=complex)
    amps[int(n)] = 1.0
    return FockVector(amps, 0.0, f"number:{int(n)}")


def vacuum(N: int) -> FockVector:
    return number_state(0, N)


def coherent_state(alpha: complex, N: int) -> FockVector:
    """|alpha> truncated at N, with the lost Poisson tail reported as truncation weight."""
    alpha = amplitude(alpha)
    N = check_cutoff(N)
    if abs(alpha) ** 2 > N / 4:
        logger.warning("coherent amplitude |alpha|^2=%.3g is large for cutoff N=%d", abs(alpha) ** 2, N)
    # c_n = c_{n-1} * alpha / sqrt(n)
    steps = np.ones(N + 1, dtype=complex)
    steps[1:] = alpha / np.sqrt(np.arange(1, N + 1))
    amps = math.exp(-abs(alpha) ** 2 / 2) * np.cumprod(steps)
    weight = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    return FockVector(amps, weight, f"coherent:{alpha}")


def cat_state(alpha: complex, N: int, parity: int = 1) -> FockVector:
    """(|alpha> + parity |-alpha>) normalized on the untruncated space."""
    alpha = amplitude(alpha)
    if parity not in (1, -1):
        raise InvalidParam(f"cat parity must be +1 or -1, got {parity!r}")
    norm_sq = 2.0 * (1.0 + parity * math.exp(-2.0 * abs(alpha) ** 2))
    if norm_sq <= 1e-14:
        raise InvalidParam("odd cat state with alpha=0 is the zero vector")
    amps = (coherent_state(alpha, N).amps + parity * coherent_state(-alpha, N).amps) / math.sqrt(norm_sq)
    weight = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    return FockVector(amps, weight, f"cat:{alpha}")


def from_amplitudes(values: Iterable[complex], N: int, normalize: bool = False) -> FockVector:
    """Wrap user amplitudes, zero-padding up to N+1 entries."""
    N = check_cutoff(N)
    raw = np.asarray(list(values), dtype=complex)
    if raw.size > N + 1:
        raise CutoffExceeded(f"{raw.size} amplitudes do not fit below cutoff N={N}")
    amps = np.zeros(N + 1, dtype=complex)
    amps[: raw.size] = raw
    psi = FockVector(amps, 0.0, "custom")
    return psi.normalized() if normalize else psi


def pad(psi: FockVector, N: int) -> FockVector:
    """Embed ``psi`` into a space with a cutoff at least as large."""
    N = check_cutoff(N)
    if N < psi.cutoff:
        raise CutoffExceeded(f"cannot pad a cutoff-{psi.cutoff} vector down to N={N}")
    amps = np.zeros(N + 1, dtype=complex)
    amps[: psi.amps.size] = psi.amps
    return FockVector(amps, psi.truncation_weight, psi.label)


def ladder_matrices(N: int) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """Annihilation and creation operators; <n-1|a|n> = sqrt(n)."""
    N = check_cutoff(N, minimum=1)
    a = np.diag(np.sqrt(np.arange(1, N + 1, dtype=float)), k=1).astype(complex)
    adag = a.conj().T.copy()
    return _frozen(a), _frozen(adag)


def _laguerre_table(x: float | np.ndarray, kmax: int, dmax: int) -> np.ndarray:
    # table[k, ..., d] = L_k^(d)(x), filled by the three-term recurrence in k for all d
    # at once; an array x adds its own axes between k and d
    x = np.asarray(x, dtype=float)[..., None]
    d = np.arange(dmax + 1, dtype=float)
    table = np.zeros((kmax + 1,) + np.broadcast_shapes(x.shape, d.shape))
    table[0] = 1.0
    if kmax >= 1:
        table[1] = 1.0 + d - x
    for k in range(1, kmax):
        table[k + 1] = ((2 * k + 1 + d - x) * table[k] - (k + d) * table[k - 1]) / (k + 1)
    return table


@lru_cache(maxsize=64)
def _block_indices(rows: int, cols: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    m, n = np.indices((rows + 1, cols + 1))
    lo = np.minimum(m, n)
    d = np.abs(m - n)
    log_fact = 0.5 * (gammaln(lo + 1) - gammaln(lo + d + 1))
    lower = m >= n
    for arr in (lo, d, log_fact, lower):
        arr.setflags(write=False)
    return lo, d, log_fact, lower


def displacement_batch(betas: Iterable[complex] | np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Elements <m|D(beta_b)|n> for a whole batch of amplitudes.

    Returns shape (len(betas), rows + 1, cols + 1). One Laguerre recurrence covers
    every amplitude in the batch, so samplers and grid sums score many points per call.
    """
    betas = np.asarray(betas, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(betas)):
        raise InvalidParam("displacement amplitudes must be finite")
    rows, cols = check_cutoff(rows), check_cutoff(cols)
    lo, d, log_fact, lower = _block_indices(rows, cols)
    x = np.abs(betas) ** 2
    theta = np.angle(betas)
    with np.errstate(divide="ignore", invalid="ignore"):
        # beta = 0 leaves only the d = 0 diagonal
        scaled = np.where(d[..., None] == 0, 0.0, d[..., None] * np.log(np.abs(betas)))
    log_pref = log_fact[..., None] - x / 2 + scaled
    # lower triangle carries beta^d, upper triangle (-beta*)^d
    angle = np.where(lower[..., None], d[..., None] * theta, d[..., None] * (math.pi - theta))
    laguerre = _laguerre_table(x, min(rows, cols), max(rows, cols))[lo, :, d]
    return np.moveaxis(np.exp(log_pref + 1j * angle) * laguerre, -1, 0)


def displacement_block(beta: complex, rows: int, cols: int) -> np.ndarray:
    """Elements <m|D(beta)|n> for m <= rows, n <= cols.

    Every element is exact for the untruncated operator; truncation only enters
    when blocks are multiplied together.
    """
    beta = amplitude(beta)
    rows, cols = check_cutoff(rows), check_cutoff(cols)
    if beta == 0:
        return np.eye(rows + 1, cols + 1, dtype=complex)
    return displacement_batch([beta], rows, cols)[0]


def displacement_matrix(beta: complex, N: int) -> OperatorMatrix:
    """<m|D(beta)|n> from the associated-Laguerre closed form.

    For m >= n the element is sqrt(n!/m!) beta^(m-n) exp(-|beta|^2/2) L_n^(m-n)(|beta|^2);
    the upper triangle follows from D(beta)^dagger = D(-beta). Prefactors are taken in
    log space so large cutoffs do not overflow the factorials.
    """
    return _frozen(displacement_block(beta, N, N))


def displacement_matrix_expm(beta: complex, N: int) -> OperatorMatrix:
    """exp(beta a^dagger - beta* a) on the truncated space.

    Only agrees with :func:`displacement_matrix` well away from the cutoff; kept
    as an independent reference for tests.
    """
    beta = amplitude(beta)
    a, adag = ladder_matrices(max(1, N))
    return _frozen(expm(beta * adag - beta.conjugate() * a)[: N + 1, : N + 1])


def require_same_cutoff(u: FockVector, v: FockVector) -> None:
    if u.cutoff != v.cutoff:
        raise DimensionMismatch(f"cutoff mismatch: {u.cutoff} vs {v.cutoff}")


def inner_product(u: FockVector, v: FockVector) -> complex:
    """<u|v> = sum conj(u_n) v_n."""
    require_same_cutoff(u, v)
    return complex(np.vdot(u.amps, v.amps))


def expectation(psi: FockVector, op: OperatorMatrix) -> complex:
    if op.shape != (psi.cutoff + 1, psi.cutoff + 1):
        raise DimensionMismatch(f"operator shape {op.shape} does not match cutoff {psi.cutoff}")
    return complex(np.vdot(psi.amps, op @ psi.amps))


def photon_number_distribution(psi: FockVector) -> np.ndarray:
    return np.abs(psi.amps) ** 2


def fidelity(u: FockVector, v: FockVector) -> float:
    """|<u|v>|^2 for pure states."""
    return abs(inner_product(u, v)) ** 2
