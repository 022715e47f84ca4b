import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cvtele.errors import CutoffExceeded, DimensionMismatch, InvalidParam
from cvtele.fock import (
    FockVector,
    amplitude,
    cat_state,
    coherent_state,
    displacement_batch,
    displacement_block,
    displacement_matrix,
    displacement_matrix_expm,
    expectation,
    fidelity,
    from_amplitudes,
    inner_product,
    ladder_matrices,
    number_state,
    pad,
    photon_number_distribution,
    vacuum,
)

from conftest import disk_point


def test_number_state_basis_vectors():
    assert_allclose(number_state(0, 4).amps, [1, 0, 0, 0, 0])
    assert_allclose(number_state(3, 3).amps, [0, 0, 0, 1])
    with pytest.raises(CutoffExceeded):
        number_state(5, 4)
    with pytest.raises(InvalidParam):
        number_state(-1, 4)


def test_vacuum_is_number_zero():
    assert_allclose(vacuum(6).amps, number_state(0, 6).amps)


def test_coherent_state_amplitudes():
    assert_allclose(coherent_state(0, 10).amps, vacuum(10).amps)
    assert coherent_state(1.0, 40).amps[0] == pytest.approx(math.exp(-0.5), abs=1e-12)
    psi = coherent_state(2j, 40)
    assert psi.norm_sq >= 1 - 1e-10
    assert psi.truncation_weight <= 1e-10


def test_coherent_state_reports_truncation_without_renormalizing():
    psi = coherent_state(3.0, 8)
    assert psi.truncation_weight > 0.1
    assert psi.norm_sq == pytest.approx(1 - psi.truncation_weight, abs=1e-12)
    assert not psi.is_normalized()


def test_fock_vector_is_immutable():
    psi = number_state(1, 3)
    with pytest.raises(ValueError):
        psi.amps[0] = 1.0


def test_amplitude_rejects_non_finite():
    with pytest.raises(InvalidParam):
        amplitude(complex(float("nan"), 0))
    with pytest.raises(InvalidParam):
        coherent_state(complex(0, float("inf")), 10)


def test_displacement_at_zero_is_identity():
    assert_allclose(displacement_matrix(0, 12), np.eye(13))


def test_displacement_of_vacuum_is_coherent_state():
    beta = 1.2 - 0.4j
    D = displacement_matrix(beta, 40)
    assert_allclose(D[:, 0], coherent_state(beta, 40).amps, atol=1e-12)


def test_displacement_matches_matrix_exponential():
    beta = 0.7 + 0.3j
    laguerre = displacement_matrix(beta, 50)
    exponential = displacement_matrix_expm(beta, 50)
    assert np.max(np.abs(laguerre[:26, :26] - exponential[:26, :26])) <= 1e-8


def test_displacement_batch_matches_expm_per_amplitude():
    betas = np.array([0.0, -0.6, 0.7 + 0.3j, 1.1j, -0.4 - 0.9j])
    batch = displacement_batch(betas, 25, 12)
    assert batch.shape == (5, 26, 13)
    assert_allclose(batch[0], np.eye(26, 13), atol=1e-15)
    for beta, block in zip(betas, batch):
        exponential = displacement_matrix_expm(beta, 50)
        assert np.max(np.abs(block - exponential[:26, :13])) <= 1e-8
        assert_allclose(block, displacement_block(beta, 25, 12), atol=1e-14)
    with pytest.raises(InvalidParam):
        displacement_batch([1.0, np.nan], 4, 4)


def test_displacement_composition(rng):
    # rows and columns up to 30 stay well inside the classical turning point (sqrt(30) + 2)^2 < 100
    N = 100
    half = 30
    for _ in range(5):
        b1, b2 = disk_point(rng), disk_point(rng)
        product = displacement_matrix(b1, N) @ displacement_matrix(b2, N)
        phase = np.exp((b1 * b2.conjugate() - b1.conjugate() * b2) / 2)
        combined = phase * displacement_matrix(b1 + b2, N)
        assert np.max(np.abs(product[: half + 1, : half + 1] - combined[: half + 1, : half + 1])) <= 1e-7


def test_truncated_unitarity_of_low_columns(rng):
    for _ in range(5):
        D = displacement_matrix(disk_point(rng, 1.0), 60)
        assert_allclose(np.linalg.norm(D[:, :31], axis=0), 1.0, atol=1e-7)
        D = displacement_matrix(disk_point(rng), 100)
        norms = np.linalg.norm(D[:, :31], axis=0)
        assert_allclose(norms, 1.0, atol=1e-7)


def test_coherent_state_equals_displaced_vacuum_on_low_rows(rng):
    N = 40
    for _ in range(5):
        alpha = disk_point(rng)
        assert_allclose(
            coherent_state(alpha, N).amps[: N // 2 + 1],
            displacement_matrix(alpha, N)[: N // 2 + 1, 0],
            atol=1e-10,
        )


def test_displacement_large_cutoff_stays_finite():
    D = displacement_matrix(1.5, 180)
    assert np.all(np.isfinite(D))
    assert_allclose(np.linalg.norm(D[:, :90], axis=0), 1.0, atol=1e-9)


def test_ladder_matrices():
    a, adag = ladder_matrices(1)
    assert_allclose(a, [[0, 1], [0, 0]])
    a, adag = ladder_matrices(3)
    assert_allclose(adag @ a, np.diag([0, 1, 2, 3]))
    a, adag = ladder_matrices(20)
    expected = np.eye(21)
    expected[20, 20] = -20
    assert_allclose(a @ adag - adag @ a, expected, atol=1e-12)
    with pytest.raises(InvalidParam):
        ladder_matrices(0)


def test_inner_product():
    assert inner_product(number_state(2, 5), number_state(2, 5)) == 1
    assert inner_product(number_state(1, 5), number_state(2, 5)) == 0
    assert inner_product(coherent_state(1.0, 40), coherent_state(1 + 0j, 40)) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DimensionMismatch):
        inner_product(number_state(0, 4), number_state(0, 5))


def test_inner_product_conjugate_symmetric(rng):
    u = coherent_state(disk_point(rng), 30)
    v = cat_state(disk_point(rng), 30)
    assert inner_product(u, v) == pytest.approx(inner_product(v, u).conjugate(), abs=1e-14)
    assert inner_product(u, u).real > 0


def test_cat_state_is_normalized_and_even():
    psi = cat_state(1.5, 40)
    assert psi.norm_sq == pytest.approx(1.0, abs=1e-9)
    assert_allclose(psi.amps[1::2], 0.0, atol=1e-15)
    odd = cat_state(1.5, 40, parity=-1)
    assert_allclose(odd.amps[0::2], 0.0, atol=1e-15)
    with pytest.raises(InvalidParam):
        cat_state(0.0, 10, parity=-1)


def test_from_amplitudes_and_pad():
    psi = from_amplitudes([1, 1j], 4, normalize=True)
    assert psi.cutoff == 4
    assert psi.norm_sq == pytest.approx(1.0)
    with pytest.raises(CutoffExceeded):
        from_amplitudes([1, 0, 0], 1)
    wider = pad(psi, 9)
    assert wider.cutoff == 9
    assert_allclose(wider.amps[:5], psi.amps)
    with pytest.raises(CutoffExceeded):
        pad(wider, 4)


def test_expectation_and_number_distribution():
    psi = coherent_state(1.0, 40)
    a, adag = ladder_matrices(40)
    assert expectation(psi, adag @ a).real == pytest.approx(1.0, abs=1e-10)
    assert photon_number_distribution(psi).sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        expectation(psi, np.eye(3))


def test_fidelity_of_orthogonal_states_is_zero():
    assert fidelity(number_state(0, 3), number_state(1, 3)) == 0.0
    assert fidelity(FockVector([1, 0]), FockVector([1j, 0])) == pytest.approx(1.0)
