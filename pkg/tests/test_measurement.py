import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chisquare

from cvtele import measurement
from cvtele.errors import EnvelopeFailure, InvalidParam, UnsupportedMethod
from cvtele.fock import coherent_state, number_state, vacuum
from cvtele.measurement import (
    average_fidelity,
    average_output,
    gain_correlation,
    make_rng,
    merge_points,
    sample_outcome,
    sample_outcomes,
    sweep,
)
from cvtele.transfer import TeleportParams, outcome_density


def coherent_input(alpha):
    return lambda N: (coherent_state(alpha, N), alpha)


def test_seeded_streams_are_reproducible():
    params = TeleportParams(0.5, 1.0, 20)
    psi = coherent_state(1.0, 20)
    first = sample_outcomes(params, psi, 50, 7, alpha=1.0)
    second = sample_outcomes(params, psi, 50, 7, alpha=1.0)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, sample_outcomes(params, psi, 50, 8, alpha=1.0))
    rejected = sample_outcomes(params, vacuum(20), 20, 3)
    assert np.array_equal(rejected, sample_outcomes(params, vacuum(20), 20, np.random.SeedSequence(3)))
    assert isinstance(sample_outcome(params, psi, 7, alpha=1.0), complex)


def test_make_rng_passes_generators_through():
    rng = make_rng(5)
    assert make_rng(rng) is rng
    with pytest.raises(InvalidParam):
        sample_outcomes(TeleportParams(0.5, 1.0, 10), vacuum(10), 0, 1)


@pytest.mark.parametrize("q", [0.0, 1 / 3, 0.9])
def test_coherent_outcome_statistics(q):
    n = 20_000
    alpha = 1.0 - 0.5j
    params = TeleportParams(q, 1.0, 20)
    phi = sample_outcomes(params, coherent_state(alpha, 20), n, 11, alpha=alpha) - alpha
    second = 1 / (1 - q ** 2)
    component_err = math.sqrt(second / 2 / n)
    assert abs(phi.real.mean()) <= 4 * component_err
    assert abs(phi.imag.mean()) <= 4 * component_err
    moment = np.abs(phi) ** 2
    assert abs(moment.mean() - second) <= 4 * moment.std(ddof=1) / math.sqrt(n)


def test_rejection_sampling_reproduces_vacuum_gaussian():
    q = 0.5
    n = 2000
    betas = sample_outcomes(TeleportParams(q, 1.0, 20), vacuum(20), n, 5)
    second = 1 / (1 - q ** 2)
    component_err = math.sqrt(second / 2 / n)
    assert abs(betas.real.mean()) <= 4 * component_err
    assert abs(betas.imag.mean()) <= 4 * component_err
    moment = np.abs(betas) ** 2
    assert abs(moment.mean() - second) <= 4 * moment.std(ddof=1) / math.sqrt(n)


def test_rejection_sampling_of_number_state_moments():
    q, n = 0.5, 1000
    betas = sample_outcomes(TeleportParams(q, 1.0, 30), number_state(3, 30), n, 1)
    assert betas.shape == (n,)
    # <|beta|^2> = <a^dagger a> + 1/(1-q^2) for a state with <a> = 0
    moment = np.abs(betas) ** 2
    assert abs(moment.mean() - (3 + 1 / (1 - q ** 2))) <= 4 * moment.std(ddof=1) / math.sqrt(n)
    assert abs(betas.mean()) <= 4 * math.sqrt(moment.mean() / n)


@pytest.mark.parametrize("photons", [0, 2])
def test_rejection_histogram_matches_outcome_density(photons):
    q, n, N = 0.5, 4000, 20
    params = TeleportParams(q, 1.0, N)
    psi = number_state(photons, N)
    betas = sample_outcomes(params, psi, n, 17)
    # number-state inputs give a radially symmetric P(beta)
    edges = np.append(np.linspace(0.0, 4.2, 15), 12.0)
    expected = np.array([
        quad(lambda r: 2 * math.pi * r * outcome_density(params, r, psi), lo, hi)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    counts = np.histogram(np.abs(betas), bins=edges)[0].astype(float)
    expected *= counts.sum() / expected.sum()
    while expected[-1] < 5:
        expected[-2] += expected[-1]
        counts[-2] += counts[-1]
        expected, counts = expected[:-1], counts[:-1]
    while expected[0] < 5:
        expected[1] += expected[0]
        counts[1] += counts[0]
        expected, counts = expected[1:], counts[1:]
    assert chisquare(counts, expected).pvalue > 0.01


def test_envelope_failure_is_reported(monkeypatch):
    monkeypatch.setattr(measurement, "ENVELOPE_MIN_RATE", 0.9)
    with pytest.raises(EnvelopeFailure) as info:
        sample_outcomes(TeleportParams(0.5, 1.0, 20), vacuum(20), 50, 1)
    assert info.value.acceptance_rate < 0.9


def test_matched_gain_average_is_pure_attenuated_state():
    q = 1 / 3
    rho = average_output(TeleportParams(q, q, 40), coherent_state(1.0, 40), 200, 2, alpha=1.0)
    assert np.allclose(rho.entries, rho.entries.conj().T, atol=1e-12)
    assert rho.trace_weight == pytest.approx(1.0, abs=1e-9)
    assert rho.eigenvalues().max() >= 1 - 1e-6
    assert rho.fidelity_to(coherent_state(q, 40)) >= 1 - 1e-6


def test_average_output_of_general_input_is_a_state():
    rho = average_output(TeleportParams(0.5, 1.0, 20), number_state(1, 20), 200, 4)
    assert np.allclose(rho.entries, rho.entries.conj().T, atol=1e-12)
    assert rho.eigenvalues().min() >= -1e-10
    assert rho.trace_weight <= 1 + 1e-9
    assert rho.cutoff == 20


def test_single_photon_back_action_loses_photons():
    populations = []
    for q in (0.3, 0.6, 0.9):
        rho = average_output(TeleportParams(q, q, 30), number_state(1, 30), 300, 9)
        vacuum_population = rho.population(0)
        # averaged over outcomes the vacuum share is 1 - q^2
        assert vacuum_population == pytest.approx(1 - q ** 2, abs=0.12)
        populations.append(vacuum_population)
    assert all(p > 0 for p in populations)
    assert populations[0] > populations[1] > populations[2]


def test_quadrature_fidelity_law():
    values = []
    for q in np.linspace(0.0, 0.95, 20):
        point = average_fidelity(TeleportParams(q, 1.0, 20), coherent_state(1.0, 20), alpha=1.0)
        assert point.fidelity_mean == pytest.approx((1 + q) / 2, abs=1e-6)
        assert point.converged
        assert point.method == "quadrature"
        values.append(point.fidelity_mean)
    assert values[0] == pytest.approx(0.5, abs=1e-12)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_quadrature_fidelity_at_matched_gain():
    q = 1 / 3
    point = average_fidelity(TeleportParams(q, q, 20), coherent_state(1.0, 20), alpha=1.0)
    assert point.fidelity_mean == pytest.approx(math.exp(-4 / 9), abs=1e-9)


def test_quadrature_needs_coherent_input():
    params = TeleportParams(0.5, 1.0, 20)
    with pytest.raises(UnsupportedMethod):
        average_fidelity(params, number_state(1, 20), "quadrature")
    with pytest.raises(UnsupportedMethod):
        average_fidelity(params, number_state(1, 20), "simpson")


@pytest.mark.parametrize("q", [0.0, 1 / 3, 0.5, 0.9])
@pytest.mark.parametrize("unit_gain", [True, False])
def test_monte_carlo_agrees_with_quadrature(q, unit_gain):
    g = 1.0 if unit_gain else q
    params = TeleportParams(q, g, 30)
    psi = coherent_state(0.8, 30)
    mc = average_fidelity(params, psi, "montecarlo", alpha=0.8, n_samples=500, rng_seed=21)
    quad = average_fidelity(params, psi, "quadrature", alpha=0.8)
    assert abs(mc.fidelity_mean - quad.fidelity_mean) <= max(4 * mc.fidelity_stderr, 1e-9)
    assert mc.n_samples == 500
    assert mc.converged


def test_classical_limit_fidelity_is_one_half():
    params = TeleportParams(0.0, 1.0, 30)
    point = average_fidelity(params, coherent_state(1.0, 30), "montecarlo", alpha=1.0, n_samples=2000, rng_seed=3)
    assert point.fidelity_mean == pytest.approx(0.5, abs=4 * point.fidelity_stderr)
    assert point.phi_second_moment == pytest.approx(1.0, abs=0.2)


def test_near_ideal_entanglement_fidelity():
    params = TeleportParams(0.99, 1.0, 40)
    psi = coherent_state(0.5, 40)
    assert average_fidelity(params, psi, alpha=0.5).fidelity_mean >= 0.98
    point = average_fidelity(params, psi, "montecarlo", alpha=0.5, n_samples=200, rng_seed=1)
    assert point.fidelity_mean >= 0.98


def test_gain_correlation_signs():
    assert gain_correlation(TeleportParams(1 / 3, 1.0, 30), 1.0, 300, 4) > 0.99
    assert gain_correlation(TeleportParams(0.5, 0.2, 30), 1.0, 300, 4) < -0.99
    assert gain_correlation(TeleportParams(1 / 3, 1 / 3, 30), 1.0, 300, 4) == 0.0


def test_sweep_order_and_worker_independence():
    grid = [(0.2, 1.0), (0.5, 1.0), (0.5, 0.5), (0.8, 1.0)]
    serial = sweep(grid, coherent_input(0.5), 20, "montecarlo", 100, seed=13, threads=1)
    parallel = sweep(grid, coherent_input(0.5), 20, "montecarlo", 100, seed=13, threads=4)
    assert [(p.q, p.g) for p in serial] == grid
    assert serial == parallel


def test_merge_points_weights_by_count():
    params = TeleportParams(0.5, 1.0, 20)
    psi = coherent_state(1.0, 20)
    a = average_fidelity(params, psi, "montecarlo", alpha=1.0, n_samples=100, rng_seed=1)
    b = average_fidelity(params, psi, "montecarlo", alpha=1.0, n_samples=300, rng_seed=2)
    merged = merge_points(a, b)
    assert merged.n_samples == 400
    assert merged.fidelity_mean == pytest.approx((100 * a.fidelity_mean + 300 * b.fidelity_mean) / 400)
    assert merged.fidelity_stderr < a.fidelity_stderr
    quad = average_fidelity(params, psi, alpha=1.0)
    with pytest.raises(UnsupportedMethod):
        merge_points(quad, quad)
    with pytest.raises(InvalidParam):
        merge_points(a, average_fidelity(TeleportParams(0.4, 1.0, 20), psi, "montecarlo", alpha=1.0, n_samples=10))
