import numpy as np
import pytest
from hypothesis import given, strategies as st

from qig.calculus import time_derivative
from qig.checks import random_density, random_lindbladian
from qig.errors import IntegrationError, ValidationError
from qig.gksl import (
    JumpPair,
    Lindbladian,
    current_average,
    eigenbasis_currents,
    integrate,
    spectral_frames,
    transition_rates,
)
from qig.markov import currents as classical_currents
from qig.markov import force_and_flow, from_rates, integrate_classical
from qig.mpemba import MpembaScenario, build_scenario
from qig.states import PAULI_X, PAULI_Y, PAULI_Z, bloch_to_density, density_to_bloch

S = MpembaScenario()
SYSTEM = build_scenario(S)
LIND = SYSTEM.lindbladian
GP, GM, GAMMA = S.gamma_plus, S.gamma_minus, S.relaxation_rate
UP = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|

seeds = st.integers(0, 2**32 - 1)


def bloch_rhs(r):
    """Independent qubit Bloch equations for H = eps/2 sigma_z with thermal damping."""
    rz_eq = (GP - GM) / GAMMA
    x, y, z = r
    return np.array([
        -GAMMA / 2 * x - S.epsilon * y,
        -GAMMA / 2 * y + S.epsilon * x,
        -GAMMA * (z - rz_eq),
    ])


# --- jump pairs and generator ----------------------------------------------

def test_jump_pair_validation():
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    JumpPair(op=a, partner=np.exp(-0.25) * a.conj().T, phi=0.5)
    with pytest.raises(ValidationError):
        JumpPair(op=a, partner=a.conj().T, phi=0.5)
    with pytest.raises(ValidationError):
        JumpPair(op=a, partner=None)  # self-dual operator must be Hermitian
    with pytest.raises(ValidationError):
        JumpPair(op=PAULI_Z, partner=None, phi=0.1)
    JumpPair(op=PAULI_Z)


def test_lindbladian_validation():
    with pytest.raises(ValidationError):
        Lindbladian(PAULI_Z, [])
    Lindbladian(PAULI_Z, [], allow_unitary=True)
    with pytest.raises(ValidationError):
        Lindbladian(PAULI_Z, [JumpPair(op=np.eye(3))])
    with pytest.raises(ValidationError):
        LIND.rhs(np.eye(3) / 3)


def test_mpemba_pair_entropy():
    (pair,) = LIND.pairs
    assert pair.phi == pytest.approx(S.beta * S.epsilon, rel=1e-14)
    assert pair.phi == pytest.approx(0.5, rel=1e-14)
    np.testing.assert_allclose(LIND.phis, [0.5, -0.5])
    np.testing.assert_array_equal(LIND.partner_index, [1, 0])


def test_rhs_fixed_point():
    assert np.max(np.abs(LIND.rhs(SYSTEM.thermal))) <= 1e-10
    np.testing.assert_allclose(np.diag(SYSTEM.thermal).real, [GP / GAMMA, GM / GAMMA], atol=1e-14)


def test_rhs_matches_bloch_equations():
    rho = SYSTEM.rho_ref
    drho = LIND.rhs(rho)
    rdot = np.array([np.trace(drho @ s).real for s in (PAULI_X, PAULI_Y, PAULI_Z)])
    np.testing.assert_allclose(rdot, bloch_rhs(density_to_bloch(rho)), atol=1e-13)


def test_rhs_reduces_to_rate_equation_without_hamiltonian():
    lind = Lindbladian(np.zeros((2, 2)), LIND.pairs)
    p = np.array([0.3, 0.7])
    drho = lind.rhs(np.diag(p))
    w = from_rates([[0.0, GP], [GM, 0.0]])
    np.testing.assert_allclose(np.diag(drho).real, w @ p, atol=1e-14)
    assert abs(drho[0, 1]) < 1e-15


@given(seeds, st.integers(2, 4))
def test_rhs_traceless_hermitian_and_superoperator(seed, d):
    rng = np.random.default_rng(seed)
    lind = random_lindbladian(rng, d)
    rho = random_density(rng, d)
    out = lind.rhs(rho)
    assert abs(np.trace(out)) <= 1e-12
    assert np.max(np.abs(out - out.conj().T)) <= 1e-12
    np.testing.assert_allclose((lind.superoperator() @ rho.reshape(-1)).reshape(d, d), out, atol=1e-12)


# --- integration ------------------------------------------------------------

def test_fixed_point_trajectory_is_constant():
    traj = integrate(LIND, SYSTEM.thermal, np.linspace(0, 2, 201))
    np.testing.assert_allclose(traj.states - SYSTEM.thermal, 0.0, atol=1e-14)


def test_rotated_state_stays_diagonal():
    traj = integrate(LIND, SYSTEM.rho_rot, np.linspace(0, 5, 5001))
    assert np.max(np.abs(traj.states[:, 0, 1])) <= 1e-12


def test_reference_coherence_and_population_decay():
    t = np.linspace(0, 4, 4001)
    traj = integrate(LIND, SYSTEM.rho_ref, t)
    c0 = abs(SYSTEM.rho_ref[0, 1])
    np.testing.assert_allclose(np.abs(traj.states[:, 0, 1]), c0 * np.exp(-GAMMA * t / 2), atol=1e-12)
    pe_eq = GP / GAMMA
    pe0 = SYSTEM.rho_ref[0, 0].real
    np.testing.assert_allclose(traj.states[:, 0, 0].real, pe_eq + (pe0 - pe_eq) * np.exp(-GAMMA * t), atol=1e-12)


def test_trajectory_invariants():
    rng = np.random.default_rng(11)
    lind = random_lindbladian(rng, 3)
    traj = integrate(lind, random_density(rng, 3), np.linspace(0, 2, 2001))
    tr = np.trace(traj.states, axis1=1, axis2=2)
    assert np.max(np.abs(tr - 1)) <= 1e-9
    assert np.max(np.abs(traj.states - np.conj(np.swapaxes(traj.states, 1, 2)))) <= 1e-9
    assert np.max(np.abs(np.trace(traj.derivs, axis1=1, axis2=2))) <= 1e-10
    np.testing.assert_allclose(traj.derivs, lind.rhs(traj.states))
    recon = np.einsum("nax,nx,nbx->nab", traj.vecs, traj.probs, traj.vecs.conj())
    np.testing.assert_allclose(recon, traj.states, atol=1e-12)


def test_unitary_evolution():
    lind = Lindbladian(PAULI_Z, [], allow_unitary=True)
    rho0 = bloch_to_density((0.6, 0.0, 0.0))
    t = np.linspace(0, 1, 1001)
    traj = integrate(lind, rho0, t)
    r = np.array([density_to_bloch(s) for s in traj.states])
    np.testing.assert_allclose(r[:, 0], 0.6 * np.cos(2 * t), atol=1e-11)
    np.testing.assert_allclose(r[:, 1], 0.6 * np.sin(2 * t), atol=1e-11)


def test_integration_error_on_positivity_violation(monkeypatch):
    from qig import gksl

    # propagate with a single huge step: the polynomial propagator overshoots
    monkeypatch.setattr(gksl.math, "ceil", lambda x: 1)
    with pytest.raises(IntegrationError, match="smaller time step"):
        integrate(LIND, bloch_to_density((0, 0, 1)), [0.0, 5.0])


def test_hellmann_feynman_matches_eigenvalue_differences():
    t = np.linspace(0, 3, 3001)
    traj = integrate(LIND, SYSTEM.rho_ref, t)
    fd = time_derivative(traj.probs, t, order=4)
    assert np.max(np.abs(fd - traj.pdots)) <= 1e-6


def test_level_crossing_tracked_continuously():
    # the rotated state passes through I/2; branches keep their identity
    traj = integrate(LIND, SYSTEM.rho_rot, np.linspace(0, 1, 1001))
    np.testing.assert_allclose(traj.probs, np.real(np.diagonal(traj.states, axis1=1, axis2=2)), atol=1e-12)
    assert traj.probs[0, 0] > traj.probs[0, 1] and traj.probs[-1, 0] < traj.probs[-1, 1]


def test_degenerate_frame_diagonalises_derivative():
    rho = np.eye(2, dtype=complex)[None] / 2
    d = (0.1 * PAULI_X)[None]
    probs, vecs, pdots = spectral_frames(rho, d)
    np.testing.assert_allclose(sorted(pdots[0]), [-0.1, 0.1], atol=1e-14)


# --- eigenbasis rates and currents ------------------------------------------

def test_transition_rates_energy_basis():
    w = transition_rates(LIND, np.eye(2))
    # channel 0 is emission (g <- e), channel 1 absorption (e <- g)
    assert w[1, 0, 1] == pytest.approx(GP, rel=1e-14)
    assert w[0, 1, 0] == pytest.approx(GM, rel=1e-14)
    assert w[1].sum() == pytest.approx(GP) and w[0].sum() == pytest.approx(GM)


def test_transition_rates_rotated_basis():
    theta = 0.4
    v = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    w = transition_rates(LIND, v)
    # |<x| sqrt(gp) |e><g| |y>|^2 = gp |<x|e>|^2 |<g|y>|^2
    expected = GP * np.outer(np.abs(v[0, :]) ** 2, np.abs(v[1, :]) ** 2)
    np.testing.assert_allclose(w[1], expected, atol=1e-14)


def test_transition_rates_zero_operator():
    lind = Lindbladian(PAULI_Z, [JumpPair(op=np.zeros((2, 2)))])
    np.testing.assert_array_equal(transition_rates(lind, np.eye(2)), 0.0)


def test_detailed_balance_at_fixed_point():
    p = np.diag(SYSTEM.thermal).real
    cur = eigenbasis_currents(LIND, p, np.eye(2))
    np.testing.assert_allclose(cur.currents, 0.0, atol=1e-14)
    off = ~np.eye(2, dtype=bool)
    assert np.all(np.isnan(cur.forces[:, ~off]))
    np.testing.assert_allclose(cur.forces[np.isfinite(cur.forces)], 0.0, atol=1e-12)


def test_eigenbasis_currents_match_classical_chain():
    t = np.linspace(0, 2, 2001)
    traj = integrate(LIND, SYSTEM.rho_rot, t)
    ctraj = integrate_classical(from_rates([[0.0, GP], [GM, 0.0]]), np.diag(SYSTEM.rho_rot).real, t)
    cur = eigenbasis_currents(LIND, traj.probs, traj.vecs)
    for i in (0, 500, 2000):
        w = from_rates([[0.0, GP], [GM, 0.0]])
        jc = classical_currents(w, ctraj.probs[i])
        np.testing.assert_allclose(cur.currents[i].sum(axis=0), jc, atol=1e-12)
        ff = force_and_flow(w, ctraj.probs[i])
        qf = np.nansum(np.where(cur.currents[i] != 0, cur.forces[i], np.nan), axis=0)
        np.testing.assert_allclose(qf[0, 1], ff.force[0, 1], rtol=1e-10)


@given(seeds)
def test_currents_reproduce_population_rates(seed):
    rng = np.random.default_rng(seed)
    lind = random_lindbladian(rng, 3)
    traj = integrate(lind, random_density(rng, 3), np.linspace(0, 0.05, 11))
    cur = eigenbasis_currents(lind, traj.probs, traj.vecs)
    np.testing.assert_allclose(cur.currents.sum(axis=(1, 3)), traj.pdots, atol=1e-8)
    # flows are the declared pair entropies wherever both rates are active
    k_idx = np.broadcast_to(lind.phis[None, :, None, None], cur.flows.shape)
    ok = np.isfinite(cur.flows)
    np.testing.assert_allclose(cur.flows[ok], k_idx[ok], atol=1e-9)
    # entropy production is non-negative
    assert np.all(current_average(cur.currents, cur.forces) >= -1e-12)
