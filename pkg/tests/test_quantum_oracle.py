import numpy as np
import pytest

from loopcrit.oracle import enumerate_edge
from loopcrit.quantum_oracle import (DenseSymmetricMatrix, JacobiError, dot_product,
                                     eigen_residual, hamiltonian_nematic_2site,
                                     hamiltonian_xxz_2site, jacobi_eigh, nematic_observable,
                                     s1s1_observable, thermal_two_point)


def _eig(h):
    return np.sort(jacobi_eigh(h)[0])


def test_xxz_spectrum_and_structure():
    np.testing.assert_allclose(_eig(hamiltonian_xxz_2site(1.0)), [-0.5, -0.5, -0.5, 1.5],
                               atol=1e-13)
    for delta in (-1.0, -0.3, 0.0, 0.7, 1.0):
        h = hamiltonian_xxz_2site(delta)
        assert h.shape == (4, 4) and abs(np.trace(h)) < 1e-14
    assert np.all(np.diag(hamiltonian_xxz_2site(0.0)) == 0)


def test_nematic_spectra_by_total_spin():
    # S.S on two spin-1 sites is -2, -1, 1 on total spin 0, 1, 2
    np.testing.assert_allclose(_eig(hamiltonian_nematic_2site(0.0)), [-4] + [-1] * 8, atol=1e-12)
    np.testing.assert_allclose(_eig(hamiltonian_nematic_2site(1.0)), [-2] * 6 + [0] * 3,
                               atol=1e-12)
    np.testing.assert_allclose(_eig(dot_product(1.0)), [-2] + [-1] * 3 + [1] * 5, atol=1e-12)


def test_site_exchange_symmetry():
    swap = np.zeros((9, 9))
    for a in range(3):
        for b in range(3):
            swap[3 * a + b, 3 * b + a] = 1
    h = hamiltonian_nematic_2site(0.4)
    np.testing.assert_allclose(swap @ h @ swap, h, atol=1e-14)


def test_jacobi_against_numpy_and_residual():
    rng = np.random.default_rng(0)
    for n in (2, 4, 9):
        a = rng.normal(size=(n, n))
        a = a + a.T
        np.testing.assert_allclose(_eig(a), np.linalg.eigvalsh(a), atol=1e-12)
        assert eigen_residual(a) < 1e-10
    with pytest.raises(JacobiError):
        jacobi_eigh(np.ones((6, 6)) + np.diag(np.arange(6.0)), max_sweeps=0)


def test_symmetry_enforced():
    with pytest.raises(ValueError):
        DenseSymmetricMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_high_temperature_limit():
    assert abs(thermal_two_point(hamiltonian_xxz_2site(0.5), s1s1_observable(), 1e-9)) < 1e-9


def test_correspondences_spot():
    spin = thermal_two_point(hamiltonian_xxz_2site(0.0), s1s1_observable(), 0.8)
    assert abs(spin - 0.25 * enumerate_edge(0.8, 2.0, 0.5).prob_connected) < 1e-10
    spin = thermal_two_point(hamiltonian_nematic_2site(0.5), nematic_observable(), 0.6)
    assert abs(spin - 2 / 9 * enumerate_edge(0.6, 3.0, 0.5).prob_connected) < 1e-10
