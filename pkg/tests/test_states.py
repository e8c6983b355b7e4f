import numpy as np
import pytest
from hypothesis import given, strategies as st

from qig.checks import random_density, random_hermitian
from qig.errors import DomainError, ValidationError
from qig.states import (
    PAULI_X,
    affinity,
    as_density,
    bloch_to_density,
    density_to_bloch,
    eig_hermitian,
    free_energy,
    is_density,
    relative_entropy,
    sqrtm_psd,
    thermal_state,
    uhlmann_fidelity,
    von_neumann_entropy,
)

R_REF = (-0.41760, -0.60647, 0.47879)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 5)


def _pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


# --- validation -------------------------------------------------------------

def test_density_validation_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        as_density(np.array([[0.5, 0.1], [0.0, 0.5]]))  # not Hermitian
    with pytest.raises(ValidationError):
        as_density(np.diag([0.6, 0.6]))  # trace
    with pytest.raises(ValidationError):
        as_density(np.diag([1.2, -0.2]))  # negative eigenvalue
    with pytest.raises(ValidationError):
        as_density(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        as_density(np.array([[np.nan, 0], [0, 1]]))
    assert is_density(np.eye(3) / 3)


def test_validated_matrices_are_read_only():
    rho = as_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho[0, 0] = 1.0


# --- eigendecomposition -----------------------------------------------------

def test_eig_maximally_mixed():
    e = eig_hermitian(np.eye(2) / 2)
    np.testing.assert_allclose(e.values, [0.5, 0.5])


def test_eig_diagonal_descending():
    e = eig_hermitian(np.diag([0.06082, 0.93918]))
    np.testing.assert_allclose(e.values, [0.93918, 0.06082])


def test_eig_reference_state():
    e = eig_hermitian(bloch_to_density(R_REF))
    norm = np.linalg.norm(R_REF)
    np.testing.assert_allclose(e.values, [(1 + norm) / 2, (1 - norm) / 2], atol=1e-14)
    # rounded reference magnitudes
    np.testing.assert_allclose(e.values, [0.93918, 0.06082], atol=5e-5)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eig_hermitian(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_eig_phase_and_tie_convention():
    e = eig_hermitian(np.eye(3))
    # ties resolved by lexicographically descending eigenvector entries
    np.testing.assert_allclose(np.abs(e.vectors), np.eye(3), atol=1e-12)
    v = e.vectors
    for k in range(3):
        first = v[np.flatnonzero(np.abs(v[:, k]) > 1e-12)[0], k]
        assert abs(first.imag) < 1e-14 and first.real > 0


@given(seeds, dims)
def test_eig_reconstruction_and_orthonormality(seed, d):
    m = random_hermitian(np.random.default_rng(seed), d)
    e = eig_hermitian(m)
    assert np.all(np.diff(e.values) <= 0)
    v = e.vectors
    np.testing.assert_allclose(v @ np.diag(e.values) @ v.conj().T, m, atol=1e-9)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(d), atol=1e-9)


# --- entropy ----------------------------------------------------------------

def test_von_neumann_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2), abs=1e-14)
    p = np.array([0.93918, 0.06082])
    expected = -(0.93918 * np.log(0.93918) + 0.06082 * np.log(0.06082))
    assert von_neumann_entropy(np.diag(p)) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.229218, abs=1e-6)


@given(seeds, dims)
def test_entropy_range(seed, d):
    rho = random_density(np.random.default_rng(seed), d, mix=0.0)
    s = von_neumann_entropy(rho)
    assert -1e-12 <= s <= np.log(d) + 1e-12


# --- fidelity and affinity --------------------------------------------------

def test_fidelity_examples():
    rho = bloch_to_density(R_REF)
    assert uhlmann_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert uhlmann_fidelity(_pure([1, 0]), _pure([0, 1])) == pytest.approx(0.0, abs=1e-15)
    a, b = 0.3, 0.8
    expected = (np.sqrt(a * b) + np.sqrt((1 - a) * (1 - b))) ** 2
    assert uhlmann_fidelity(np.diag([a, 1 - a]), np.diag([b, 1 - b])) == pytest.approx(expected, abs=1e-12)


def test_affinity_examples():
    rho = bloch_to_density(R_REF)
    assert affinity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert affinity(_pure([1, 1j]), _pure([1, -1j])) == pytest.approx(0.0, abs=1e-12)
    a, b = 0.3, 0.8
    expected = np.sqrt(a * b) + np.sqrt((1 - a) * (1 - b))
    assert affinity(np.diag([a, 1 - a]), np.diag([b, 1 - b])) == pytest.approx(expected, abs=1e-12)


def test_fidelity_of_pure_states_is_overlap_squared():
    u, v = np.array([1, 2j, 0.5]), np.array([0.3, 1, -1j])
    overlap = abs(np.vdot(u, v)) ** 2 / (np.vdot(u, u).real * np.vdot(v, v).real)
    assert uhlmann_fidelity(_pure(u), _pure(v)) == pytest.approx(overlap, abs=1e-9)


@given(seeds, dims)
def test_fidelity_affinity_properties(seed, d):
    rng = np.random.default_rng(seed)
    r1, r2 = random_density(rng, d, mix=0.0), random_density(rng, d, mix=0.0)
    f12, f21 = uhlmann_fidelity(r1, r2), uhlmann_fidelity(r2, r1)
    a12, a21 = affinity(r1, r2), affinity(r2, r1)
    assert 0.0 <= f12 <= 1.0 and 0.0 <= a12 <= 1.0
    assert abs(f12 - f21) <= 1e-9 and abs(a12 - a21) <= 1e-9
    # SLD geodesic never exceeds the WY geodesic
    assert np.arccos(np.sqrt(f12)) <= np.arccos(a12) + 1e-9


def test_sqrtm_psd():
    rho = bloch_to_density(R_REF)
    s = sqrtm_psd(rho)
    np.testing.assert_allclose(s @ s, rho, atol=1e-14)


# --- relative entropy -------------------------------------------------------

def test_relative_entropy_examples():
    rho = bloch_to_density(R_REF)
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-15)
    assert relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(np.log(2), abs=1e-14)


def test_relative_entropy_diagonal_oracle():
    p = np.array([0.9391570006842656, 0.0608429993157345])
    q = np.array([0.37754066879814546, 0.6224593312018545])
    expected = float(np.sum(p * (np.log(p) - np.log(q))))
    assert relative_entropy(np.diag(p), np.diag(q)) == pytest.approx(expected, rel=1e-13)


def test_relative_entropy_support_violation():
    with pytest.raises(DomainError):
        relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0]))
    # the converse direction is finite
    assert relative_entropy(np.diag([1.0, 0.0]), np.diag([0.5, 0.5])) == pytest.approx(np.log(2))


def test_relative_entropy_close_states_no_cancellation():
    eps = 1e-7
    p = np.diag([0.5 + eps, 0.5 - eps])
    # D ~ 2 eps^2 for small deviations from the maximally mixed state
    assert relative_entropy(p, np.eye(2) / 2) == pytest.approx(2 * eps**2, rel=1e-6)


def test_relative_entropy_matches_matrix_log():
    rng = np.random.default_rng(3)
    s, t = random_density(rng, 3), random_density(rng, 3)

    def logm(m):
        w, v = np.linalg.eigh(m)
        return (v * np.log(w)) @ v.conj().T

    direct = np.real(np.trace(s @ (logm(s) - logm(t))))
    assert relative_entropy(s, t) == pytest.approx(direct, abs=1e-12)


@given(seeds, dims)
def test_relative_entropy_nonnegative(seed, d):
    rng = np.random.default_rng(seed)
    assert relative_entropy(random_density(rng, d), random_density(rng, d)) >= -1e-10


# --- Bloch representation ---------------------------------------------------

def test_bloch_examples():
    np.testing.assert_allclose(bloch_to_density((0, 0, 0)), np.eye(2) / 2)
    np.testing.assert_allclose(bloch_to_density((0, 0, 1)), np.diag([1, 0]))
    np.testing.assert_allclose(bloch_to_density((0, 0, 0.87836)), np.diag([0.93918, 0.06082]), atol=1e-12)
    with pytest.raises(ValidationError):
        bloch_to_density((0.8, 0.8, 0.0))


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_bloch_round_trip(x, y, z):
    r = np.array([x, y, z])
    n = np.linalg.norm(r)
    if n > 1:
        r = r / n
    np.testing.assert_allclose(density_to_bloch(bloch_to_density(r)), r, atol=1e-12)


# --- thermal states ---------------------------------------------------------

def test_thermal_state_and_free_energy():
    h = 2.5 * np.diag([1.0, -1.0])
    beta = 0.1
    tau = thermal_state(h, beta)
    pe = np.exp(-0.25) / (np.exp(-0.25) + np.exp(0.25))
    np.testing.assert_allclose(np.diag(tau).real, [pe, 1 - pe], atol=1e-15)
    assert pe == pytest.approx(0.37754, abs=1e-5)
    z = np.exp(-0.25) + np.exp(0.25)
    assert free_energy(h, beta) == pytest.approx(-np.log(z) / beta, rel=1e-14)


def test_thermal_state_non_diagonal_hamiltonian():
    h = PAULI_X
    tau = thermal_state(h, 1.0)
    expected = (np.cosh(1.0) * np.eye(2) - np.sinh(1.0) * PAULI_X) / (2 * np.cosh(1.0))
    np.testing.assert_allclose(tau, expected, atol=1e-14)
