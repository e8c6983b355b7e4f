"""Dense Hermitian linear algebra and state functionals for small systems.

Density matrices are plain ``numpy`` complex arrays.  The ``as_*`` helpers
validate and return read-only copies, so values handed around the library
behave as immutable.  Matrix functions (square roots, logarithms) always go
through an eigendecomposition.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError, ValidationError

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
EPS_FLOOR = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (PAULI_X, PAULI_Y, PAULI_Z):
    _m.setflags(write=False)


class EigenDecomposition(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex, copy=True)
    m.setflags(write=False)
    return m


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return _frozen(a)


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def as_hermitian(m, tol: float = TOL_HERM) -> np.ndarray:
    a = as_matrix(m)
    err = hermiticity_error(a)
    if err > tol:
        raise ValidationError(f"matrix is not Hermitian (max |M - M^dag| = {err:.3g})")
    return a


def as_density(m, tol: float = TOL_TRACE) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    a = as_hermitian(m)
    tr = np.trace(a)
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"trace is {tr.real:.12g}, expected 1")
    lo = np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0]
    if lo < -TOL_PSD:
        raise ValidationError(f"matrix has negative eigenvalue {lo:.3g}")
    return a


def is_density(m) -> bool:
    try:
        as_density(m)
    except ValidationError:
        return False
    return True


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so that its first non-negligible entry is real positive."""
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            c = col[idx[0]]
            vecs[:, k] = col * (abs(c) / c)
    return vecs


def eig_hermitian(m, tol_tie: float = EPS_FLOOR) -> EigenDecomposition:
    """Eigendecomposition with descending eigenvalues and a reproducible basis.

    Phases are fixed so the first non-negligible entry of every eigenvector is
    real and positive.  Eigenvalues equal within ``tol_tie`` are ordered by a
    lexicographic comparison of their eigenvectors (real parts, then
    imaginary parts).
    """
    a = as_hermitian(m)
    vals, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    vals = vals[::-1].copy()
    vecs = _fix_phases(vecs[:, ::-1])

    order = list(range(len(vals)))
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and abs(vals[start] - vals[stop]) < tol_tie:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            key = lambda k: tuple(np.round(vecs[:, k].real, 12)) + tuple(np.round(vecs[:, k].imag, 12))
            order[start:stop] = sorted(block, key=key, reverse=True)
        start = stop
    vals = vals[order]
    vecs = vecs[:, order]
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return EigenDecomposition(vals, vecs)


def clamp_spectrum(p: np.ndarray) -> np.ndarray:
    """Clamp eigenvalues in the numerical noise band ``[-TOL_PSD, EPS_FLOOR]`` to zero."""
    p = np.array(p, dtype=float, copy=True)
    p[p <= EPS_FLOOR] = 0.0
    return p


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def _apply(m: np.ndarray, fn) -> np.ndarray:
    vals, vecs = np.linalg.eigh(_herm(m))
    return (vecs * fn(vals)[..., None, :]) @ np.conj(np.swapaxes(vecs, -1, -2))


def sqrtm_psd(m) -> np.ndarray:
    """Principal square root of a PSD matrix (or a stack of them)."""
    return _apply(np.asarray(m, dtype=complex), lambda v: np.sqrt(clamp_spectrum(v)))


def shannon_entropy(p) -> float:
    p = clamp_spectrum(np.asarray(p, dtype=float))
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def von_neumann_entropy(rho) -> float:
    rho = as_density(rho)
    return shannon_entropy(np.linalg.eigvalsh(rho))


def fidelity_many(rho, states) -> np.ndarray:
    """Uhlmann fidelity of ``rho`` with every state in a stack (no validation)."""
    s = sqrtm_psd(rho)
    inner = np.linalg.eigvalsh(_herm(s @ np.asarray(states) @ s))
    val = np.sum(np.sqrt(clamp_spectrum(inner)), axis=-1) ** 2
    return np.clip(val, 0.0, 1.0)


def affinity_many(rho, states) -> np.ndarray:
    """Affinity of ``rho`` with every state in a stack (no validation)."""
    s = sqrtm_psd(rho)
    roots = sqrtm_psd(states)
    val = np.real(np.einsum("ab,...ba->...", s, roots))
    return np.clip(val, 0.0, 1.0)


def uhlmann_fidelity(rho1, rho2) -> float:
    """``(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))**2``, clipped to [0, 1]."""
    return float(fidelity_many(as_density(rho1), as_density(rho2)))


def affinity(rho1, rho2) -> float:
    """Quantum affinity ``Tr(sqrt(rho1) sqrt(rho2))``, clipped to [0, 1]."""
    return float(affinity_many(as_density(rho1), as_density(rho2)))


def _bregman_log(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise ``p log(p/q) - p + q`` for q > 0, accurate when p is close to q."""
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    out = np.empty(p.shape)
    zero = p <= 0
    out[zero] = q[zero]
    u = np.where(zero, 0.0, p / q - 1.0)
    small = ~zero & (np.abs(u) < 1e-3)
    big = ~zero & ~small
    # (1+u) log(1+u) - u = sum_{n>=2} (-1)^n u^n / (n (n-1))
    us = u[small]
    series = np.zeros_like(us)
    term = us * us
    for n in range(2, 9):
        series += (-1) ** n * term / (n * (n - 1))
        term = term * us
    out[small] = q[small] * series
    out[big] = q[big] * ((1.0 + u[big]) * np.log1p(u[big]) - u[big])
    return out


def relative_entropy_many(states, tau) -> np.ndarray:
    """Relative entropy of every state in a stack with respect to ``tau`` (no validation)."""
    p, u = np.linalg.eigh(_herm(np.asarray(states, dtype=complex)))
    q, v = np.linalg.eigh(_herm(np.asarray(tau, dtype=complex)))
    p, q = clamp_spectrum(p), clamp_spectrum(q)
    overlap = np.abs(np.conj(np.swapaxes(u, -1, -2)) @ v) ** 2  # [..., x, i] = |<x|i>|^2
    kernel = q <= 0
    if np.any(kernel):
        leak = np.sum(overlap[..., kernel] * p[..., :, None], axis=(-2, -1))
        if np.any(leak > EPS_FLOOR):
            raise DomainError("support of sigma is not contained in support of tau")
    keep = ~kernel
    terms = overlap[..., keep] * _bregman_log(p[..., :, None], q[keep])
    return np.sum(terms, axis=(-2, -1))


def relative_entropy(sigma, tau) -> float:
    """Quantum relative entropy ``Tr[sigma (log sigma - log tau)]`` in nats.

    Evaluated as ``sum_{x,i} |<x|i>|^2 (p_x log(p_x/q_i) - p_x + q_i)``, a sum
    of non-negative terms that stays accurate when ``sigma`` is close to ``tau``.

    Raises DomainError if the support of ``sigma`` is not contained in the
    support of ``tau`` (the divergence is infinite).
    """
    return float(relative_entropy_many(as_density(sigma), as_density(tau)))


def bloch_to_density(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,) or not np.all(np.isfinite(r)):
        raise ValidationError("Bloch vector must have three finite components")
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + 1e-12:
        raise ValidationError(f"Bloch vector length {norm:.12g} exceeds 1")
    return _frozen(0.5 * (np.eye(2) + r[0] * PAULI_X + r[1] * PAULI_Y + r[2] * PAULI_Z))


def density_to_bloch(rho) -> np.ndarray:
    rho = as_density(rho)
    if rho.shape != (2, 2):
        raise ValidationError("Bloch representation requires a qubit state")
    return np.array([np.real(np.trace(rho @ s)) for s in (PAULI_X, PAULI_Y, PAULI_Z)])


def thermal_state(hamiltonian, beta: float) -> np.ndarray:
    """Gibbs state ``exp(-beta H) / Z``."""
    h = as_hermitian(hamiltonian)
    e, v = np.linalg.eigh(h)
    w = np.exp(-beta * (e - e.min()))
    return _frozen((v * (w / w.sum())) @ v.conj().T)


def free_energy(hamiltonian, beta: float) -> float:
    """Equilibrium free energy ``-log(Z) / beta``."""
    e = np.linalg.eigvalsh(as_hermitian(hamiltonian))
    e0 = e.min()
    return float(e0 - np.log(np.sum(np.exp(-beta * (e - e0)))) / beta)
