"""Monte Carlo measurement statistics, averaged outputs and fidelity estimators.

RNG contract: every entry point accepts an int seed, a ``numpy.random.SeedSequence``
or a ready ``Generator``; ints and seed sequences become ``Generator(PCG64(...))``.
Sweeps spawn one child ``SeedSequence`` per grid point, in grid order, from the
root seed, so results do not depend on how many workers ran them.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import roots_laguerre

from .analytic import fluctuation_second_moment
from .config import CONV_TOL, ENVELOPE_MIN_RATE, QUAD_NODES, THREADS
from .errors import EnvelopeFailure, InvalidParam, UnsupportedMethod
from .fock import FockVector, amplitude, coherent_state, displacement_batch, ladder_matrices, pad
from .transfer import TeleportParams, apply_transfer, converged_outcome, inner_cutoff

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.SeedSequence, np.random.Generator]

# Proposal radius^2 in units of the expected |beta - <a>|^2.
ENVELOPE_SPREAD = 4.0

# Proposals scored per displacement batch; bounds the Laguerre table held in memory.
SCORE_CHUNK = 256


def make_rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class DensityMatrix:
    """Ensemble-averaged output state; trace_weight is the trace actually carried."""

    entries: np.ndarray
    trace_weight: float
    degenerate_count: int = 0

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def fidelity_to(self, psi: FockVector) -> float:
        return float(np.vdot(psi.amps, self.entries @ psi.amps).real)

    def population(self, n: int) -> float:
        return float(self.entries[n, n].real)


@dataclass(frozen=True)
class SweepPoint:
    q: float
    g: float
    N: int
    fidelity_mean: float
    fidelity_stderr: float
    n_samples: int
    phi_second_moment: float
    converged: bool = True
    method: str = "montecarlo"


def _moments(psi: FockVector) -> Tuple[complex, float]:
    a, _ = ladder_matrices(max(1, psi.cutoff))
    amps = pad(psi, max(1, psi.cutoff)).amps
    lowered = a @ amps
    mean = complex(np.vdot(amps, lowered))
    spread = float(np.vdot(lowered, lowered).real) - abs(mean) ** 2
    return mean, max(0.0, spread)


def _support(psi: FockVector) -> int:
    # amplitudes below 1e-15 of the largest cannot move P(beta) at double precision
    magnitudes = np.abs(psi.amps)
    nonzero = np.flatnonzero(magnitudes > 1e-15 * magnitudes.max())
    return int(nonzero[-1]) if nonzero.size else 0


def _weight_cutoff(q: float) -> int:
    # beyond this photon number q^2n < 1e-16 and the POVM diagonal adds nothing
    if q == 0.0:
        return 0
    return int(math.ceil(8.0 * math.log(10.0) / -math.log(q)))


def _density_batch(q: float, N: int, support: int, amps: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """P(beta) for every proposal in ``betas``.

    <n|D(-beta)|psi> only needs the columns the input occupies, and one shared
    inner cutoff sized for the farthest proposal serves the whole chunk.
    """
    densities = np.empty(betas.size)
    for start in range(0, betas.size, SCORE_CHUNK):
        chunk = betas[start : start + SCORE_CHUNK]
        inner = min(inner_cutoff(N, float(np.max(np.abs(chunk)))), _weight_cutoff(q))
        overlaps = displacement_batch(-chunk, inner, support) @ amps[: support + 1]
        weights = (1.0 - q ** 2) / math.pi * q ** (2 * np.arange(inner + 1, dtype=float))
        densities[start : start + SCORE_CHUNK] = np.abs(overlaps) ** 2 @ weights
    return densities


def sample_outcomes(
    params: TeleportParams,
    psi_in: FockVector,
    n: int,
    seed: Seed,
    alpha: Optional[complex] = None,
) -> np.ndarray:
    """Draw n outcomes beta from P(beta).

    With ``alpha`` set, ``psi_in`` is taken to be |alpha> and beta = alpha + phi is
    drawn exactly from the Gaussian P(phi). Otherwise rejection sampling runs with
    a Gaussian proposal centred on <a>, scaled so the envelope dominates the
    contraction bound (1-q^2)/pi inside ENVELOPE_SPREAD expected variances.
    """
    if n < 1:
        raise InvalidParam(f"need at least one sample, got {n!r}")
    rng = make_rng(seed)
    weight = 1.0 - params.q ** 2
    if alpha is not None:
        alpha = amplitude(alpha)
        sigma = math.sqrt(1.0 / (2.0 * weight))
        return alpha + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

    mean, spread = _moments(psi_in)
    radius_sq = ENVELOPE_SPREAD * (spread + fluctuation_second_moment(params.q))
    sigma = math.sqrt(radius_sq / 2.0)
    peak = weight / math.pi
    support = _support(psi_in)
    max_proposals = int(math.ceil(n / ENVELOPE_MIN_RATE))
    # acceptance of a normalized P(beta) under the envelope
    expected_rate = 1.0 / (math.e * weight * radius_sq)

    accepted: List[complex] = []
    proposed = 0
    clipped = 0
    while len(accepted) < n:
        if proposed >= max_proposals:
            rate = len(accepted) / max(1, proposed)
            raise EnvelopeFailure(f"rejection acceptance rate {rate:.3g} below {ENVELOPE_MIN_RATE:g}", rate)
        rate = len(accepted) / proposed if accepted else expected_rate
        wanted = int(math.ceil(1.2 * (n - len(accepted)) / rate))
        batch = min(max_proposals - proposed, max(256, min(wanted, 1 << 16)))
        betas = mean + sigma * (rng.standard_normal(batch) + 1j * rng.standard_normal(batch))
        uniforms = rng.random(batch)
        proposed += batch
        envelope = peak * np.exp(1.0 - np.abs(betas - mean) ** 2 / radius_sq)
        ratio = _density_batch(params.q, params.N, support, psi_in.amps, betas) / envelope
        clipped += int(np.count_nonzero(ratio > 1.0))
        accepted.extend(betas[uniforms < ratio][: n - len(accepted)].tolist())
    if clipped:
        logger.warning("envelope fell below P(beta) at %d of %d proposals", clipped, proposed)
    return np.asarray(accepted, dtype=complex)


def sample_outcome(params: TeleportParams, psi_in: FockVector, rng_seed: Seed, alpha: Optional[complex] = None) -> complex:
    return complex(sample_outcomes(params, psi_in, 1, rng_seed, alpha)[0])


def _outputs(params: TeleportParams, psi_in: FockVector, betas: np.ndarray) -> Tuple[np.ndarray, int]:
    states = np.zeros((betas.size, params.N + 1), dtype=complex)
    degenerate = 0
    for i, beta in enumerate(betas):
        outcome = apply_transfer(params, complex(beta), psi_in)
        if outcome.degenerate:
            degenerate += 1
            continue
        states[i] = outcome.out_state.amps
    return states, degenerate


def average_output(
    params: TeleportParams,
    psi_in: FockVector,
    n_samples: int,
    rng_seed: Seed,
    alpha: Optional[complex] = None,
) -> DensityMatrix:
    """(1/n) sum_i |psi_out(beta_i)><psi_out(beta_i)| over sampled outcomes.

    Degenerate outcomes contribute nothing, so the trace drops below one by the
    fraction of them.
    """
    betas = sample_outcomes(params, psi_in, n_samples, rng_seed, alpha)
    states, degenerate = _outputs(params, psi_in, betas)
    entries = states.T @ states.conj() / n_samples
    entries = (entries + entries.conj().T) / 2
    if degenerate:
        logger.warning("%d of %d sampled outcomes were degenerate", degenerate, n_samples)
    return DensityMatrix(entries, float(np.trace(entries).real), degenerate)


def _quadrature_fidelity(params: TeleportParams, alpha: complex, nodes: int) -> float:
    # u = (1-q^2)|phi|^2 turns the radial integral into Gauss-Laguerre; the angle is periodic
    weight = 1.0 - params.q ** 2
    u, w = roots_laguerre(nodes)
    theta = 2.0 * math.pi * np.arange(2 * nodes) / (2 * nodes)
    phi = np.sqrt(u / weight)[:, None] * np.exp(1j * theta)[None, :]
    offset = (params.g - 1.0) * alpha
    overlap = np.exp(-np.abs(offset + (params.g - params.q) * phi) ** 2)
    return float(np.sum(w * overlap.mean(axis=1)))


def average_fidelity(
    params: TeleportParams,
    psi_in: FockVector,
    method: str = "quadrature",
    *,
    alpha: Optional[complex] = None,
    n_samples: int = 2000,
    rng_seed: Seed = 0,
    nodes: int = QUAD_NODES,
) -> SweepPoint:
    """F = integral of P(beta) |<psi_in|psi_out(beta)>|^2 d^2 beta.

    ``quadrature`` integrates the coherent-state closed forms on a Gauss-Laguerre x
    trapezoid grid and reports |F(nodes) - F(nodes/2)| as the error; it needs
    ``alpha``. ``montecarlo`` samples outcomes and runs the numeric transfer
    operator, reporting the standard error.
    """
    if method == "quadrature":
        if alpha is None:
            raise UnsupportedMethod("quadrature fidelity needs a coherent input (pass alpha)")
        alpha = amplitude(alpha)
        fine = _quadrature_fidelity(params, alpha, nodes)
        coarse = _quadrature_fidelity(params, alpha, max(2, nodes // 2))
        error = abs(fine - coarse)
        return SweepPoint(
            params.q, params.g, params.N, fine, error, 2 * nodes * nodes,
            fluctuation_second_moment(params.q), error <= CONV_TOL, "quadrature",
        )
    if method != "montecarlo":
        raise UnsupportedMethod(f"unknown fidelity method {method!r}")

    rng = make_rng(rng_seed)
    betas = sample_outcomes(params, psi_in, n_samples, rng, alpha)
    states, _ = _outputs(params, psi_in, betas)
    fidelities = np.abs(states.conj() @ psi_in.amps) ** 2
    stderr = float(np.std(fidelities, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    centre = alpha if alpha is not None else _moments(psi_in)[0]
    phi_m2 = float(np.mean(np.abs(betas - centre) ** 2))
    make_input: Callable[[int], FockVector]
    if alpha is not None:
        make_input = lambda size: coherent_state(alpha, size)  # noqa: E731
    else:
        make_input = lambda size: pad(psi_in, size)  # noqa: E731
    converged = bool(converged_outcome(params, complex(centre), make_input).converged)
    return SweepPoint(
        params.q, params.g, params.N, float(np.mean(fidelities)), stderr, n_samples,
        phi_m2, converged, "montecarlo",
    )


def gain_correlation(params: TeleportParams, alpha: complex, n_samples: int, rng_seed: Seed = 0) -> float:
    """Pearson correlation of Re(phi) with Re(<a>_out - g alpha) over sampled outcomes.

    The output amplitude is measured on the numerically teleported state. A
    constant output (g = q) has no correlation and returns 0.
    """
    alpha = amplitude(alpha)
    psi_in = coherent_state(alpha, params.N)
    betas = sample_outcomes(params, psi_in, n_samples, rng_seed, alpha)
    states, _ = _outputs(params, psi_in, betas)
    a, _ = ladder_matrices(params.N)
    out_amplitudes = np.einsum("ij,jk,ik->i", states.conj(), a, states)
    x = (betas - alpha).real
    y = (out_amplitudes - params.g * alpha).real
    if np.std(y) <= 1e-9 * (1.0 + abs(alpha)) or np.std(x) == 0.0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


InputFactory = Callable[[int], Tuple[FockVector, Optional[complex]]]


def _sweep_point(
    q: float,
    g: float,
    N: int,
    make_input: InputFactory,
    method: str,
    n_samples: int,
    seed: np.random.SeedSequence,
    nodes: int,
) -> SweepPoint:
    params = TeleportParams(q, g, N)
    psi_in, alpha = make_input(N)
    logger.info("sweep point q=%.6g g=%.6g", q, g)
    return average_fidelity(params, psi_in, method, alpha=alpha, n_samples=n_samples, rng_seed=seed, nodes=nodes)


def sweep(
    grid: Sequence[Tuple[float, float]],
    make_input: InputFactory,
    N: int,
    method: str = "quadrature",
    n_samples: int = 2000,
    seed: int = 0,
    threads: int = THREADS,
    nodes: int = QUAD_NODES,
) -> List[SweepPoint]:
    """Evaluate every (q, g) point; output order always follows ``grid``."""
    children = np.random.SeedSequence(int(seed)).spawn(len(grid))
    workers = max(1, min(int(threads), len(grid) or 1))
    jobs = [(q, g, N, make_input, method, n_samples, child, nodes) for (q, g), child in zip(grid, children)]
    if workers == 1:
        return [_sweep_point(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_sweep_point, *job) for job in jobs]
        return [future.result() for future in futures]


def merge_points(first: SweepPoint, second: SweepPoint) -> SweepPoint:
    """Pool two Monte Carlo estimates of the same (q, g, N), weighting by sample count."""
    if (first.q, first.g, first.N, first.method) != (second.q, second.g, second.N, second.method):
        raise InvalidParam("can only merge estimates of the same sweep point")
    if first.method != "montecarlo":
        raise UnsupportedMethod("only Monte Carlo estimates carry sample counts to merge")
    n1, n2 = first.n_samples, second.n_samples
    total = n1 + n2
    mean = (n1 * first.fidelity_mean + n2 * second.fidelity_mean) / total
    var1 = first.fidelity_stderr ** 2 * n1
    var2 = second.fidelity_stderr ** 2 * n2
    pooled = ((n1 - 1) * var1 + (n2 - 1) * var2 + n1 * n2 / total * (first.fidelity_mean - second.fidelity_mean) ** 2)
    pooled /= max(1, total - 1)
    return dataclasses.replace(
        first,
        fidelity_mean=mean,
        fidelity_stderr=math.sqrt(pooled / total),
        n_samples=total,
        phi_second_moment=(n1 * first.phi_second_moment + n2 * second.phi_second_moment) / total,
        converged=first.converged and second.converged,
    )
