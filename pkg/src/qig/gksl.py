"""GKSL master equations with locally detailed-balanced jump pairs.

A :class:`Lindbladian` is a Hamiltonian plus a list of :class:`JumpPair`.
Every pair contributes two jump channels ``L_k`` and ``L_k'`` with entropy
changes ``phi`` and ``-phi`` (a self-dual Hermitian operator contributes a
single channel with zero entropy change).  :func:`integrate` returns a
:class:`Trajectory` holding states, generator derivatives and the
instantaneous spectral decomposition needed by the geometric and
thermodynamic analyses.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .calculus import check_grid
from .errors import IntegrationError, ValidationError
from .states import EPS_FLOOR, as_density, as_hermitian, as_matrix

logger = logging.getLogger(__name__)

TOL_PAIR = 1e-10
TOL_DEGENERATE = 1e-9


@dataclass(frozen=True, eq=False)
class JumpPair:
    """Jump operators ``L_k = exp(phi/2) L_k'^dag`` with environment entropy change ``phi``.

    ``partner`` is ``L_k'``; pass ``None`` for a self-dual Hermitian operator,
    which must then have ``phi == 0``.
    """

    op: np.ndarray
    partner: Optional[np.ndarray] = None
    phi: float = 0.0

    def __post_init__(self):
        op = as_matrix(self.op)
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "phi", float(self.phi))
        if self.partner is None:
            if self.phi != 0.0:
                raise ValidationError("a self-dual jump operator must have phi = 0")
            as_hermitian(op, TOL_PAIR)
            return
        partner = as_matrix(self.partner)
        if partner.shape != op.shape:
            raise ValidationError("jump pair operators have different shapes")
        object.__setattr__(self, "partner", partner)
        err = float(np.max(np.abs(op - np.exp(self.phi / 2) * partner.conj().T)))
        if err > TOL_PAIR:
            raise ValidationError(
                f"pairing identity L_k = exp(phi/2) L_k'^dag violated by {err:.3g}"
            )

    def channels(self):
        if self.partner is None:
            return [(self.op, 0.0)]
        return [(self.op, self.phi), (self.partner, -self.phi)]


def _dissipator(ops: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Sum of ``L rho L^dag - {L^dag L, rho}/2``; ``rho`` may carry leading batch axes."""
    if ops.shape[0] == 0:
        return np.zeros_like(rho)
    ldag = np.conj(np.swapaxes(ops, -1, -2))
    jump = np.einsum("kab,...bc,kcd->...ad", ops, rho, ldag)
    decay = np.einsum("kab,kbc->ac", ldag, ops)
    return jump - 0.5 * (decay @ rho + rho @ decay)


@dataclass(frozen=True, eq=False)
class Lindbladian:
    hamiltonian: np.ndarray
    pairs: Sequence[JumpPair] = ()
    allow_unitary: bool = False
    ops: np.ndarray = field(init=False, repr=False)
    partner_index: np.ndarray = field(init=False, repr=False)
    phis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = as_hermitian(self.hamiltonian)
        object.__setattr__(self, "hamiltonian", h)
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs and not self.allow_unitary:
            raise ValidationError("no jump pairs given; pass allow_unitary=True for unitary dynamics")
        d = h.shape[0]
        ops, partner, phis = [], [], []
        for pair in pairs:
            if pair.op.shape != (d, d):
                raise ValidationError(f"jump operator shape {pair.op.shape} does not match H {h.shape}")
            chans = pair.channels()
            base = len(ops)
            for i, (op, phi) in enumerate(chans):
                ops.append(op)
                phis.append(phi)
                partner.append(base + (1 - i if len(chans) == 2 else 0))
        ops_arr = np.array(ops, dtype=complex).reshape(len(ops), d, d)
        for name, val in (("ops", ops_arr), ("partner_index", np.array(partner, dtype=int)),
                          ("phis", np.array(phis, dtype=float))):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def rhs(self, rho) -> np.ndarray:
        """``-i[H, rho] + sum_k D[L_k] rho``; accepts stacks of matrices."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape[-2:] != (self.dim, self.dim):
            raise ValidationError(f"state shape {rho.shape} does not match dimension {self.dim}")
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h) + _dissipator(self.ops, rho)
        return out

    def superoperator(self) -> np.ndarray:
        """Matrix of the generator acting on row-major vectorised density matrices."""
        d = self.dim
        eye = np.eye(d)
        h = self.hamiltonian
        sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        for op in self.ops:
            ldl = op.conj().T @ op
            sup += np.kron(op, op.conj()) - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
        return sup


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled GKSL evolution.

    ``probs`` / ``vecs`` hold the instantaneous spectrum and eigenbasis.  The
    eigenbranches are tracked by overlap between consecutive samples, so the
    probabilities follow continuous branches rather than being re-sorted at
    every sample (labels stay stable through level crossings).  ``pdots`` are
    the diagonal elements of ``derivs`` in that basis.
    """

    lindbladian: Lindbladian
    times: np.ndarray
    states: np.ndarray  # (n, d, d)
    derivs: np.ndarray  # (n, d, d), generator applied to each state
    probs: np.ndarray  # (n, d)
    vecs: np.ndarray  # (n, d, d), columns are eigenvectors
    pdots: np.ndarray  # (n, d)

    def __len__(self):
        return self.times.size

    def deriv_eigenbasis(self) -> np.ndarray:
        """Matrix elements ``<x(t)| d rho/dt |y(t)>`` for every sample."""
        v = self.vecs
        return np.conj(np.swapaxes(v, -1, -2)) @ self.derivs @ v


def _rk4_propagator(sup: np.ndarray, h: float) -> np.ndarray:
    a = h * sup
    term = np.eye(sup.shape[0], dtype=complex)
    prop = term.copy()
    for n in range(1, 5):
        term = term @ a / n
        prop = prop + term
    return prop


def integrate(lindbladian: Lindbladian, rho0, times) -> Trajectory:
    """Integrate the master equation with fixed-step RK4 and sample on ``times``.

    For a time-independent generator the classical RK4 stages collapse to the
    degree-4 Taylor polynomial of ``h L``, which is applied directly to the
    vectorised state.  Grid intervals are subdivided so that
    ``10 * dt * spectral_radius(L) <= 1``.  States are re-Hermitised after
    every step.  Time derivatives are evaluated from the generator at each
    sample, never by differencing states.
    """
    t = check_grid(times)
    rho = np.array(as_density(rho0), dtype=complex)
    d = lindbladian.dim
    if rho.shape != (d, d):
        raise ValidationError(f"initial state shape {rho.shape} does not match dimension {d}")

    sup = lindbladian.superoperator()
    radius = float(np.max(np.abs(np.linalg.eigvals(sup)))) if sup.size else 0.0
    cache: dict = {}

    states = np.empty((t.size, d, d), dtype=complex)
    states[0] = rho
    vec = rho.reshape(-1)
    for i in range(1, t.size):
        h = t[i] - t[i - 1]
        n_sub = max(1, math.ceil(10.0 * h * radius - 1e-9))
        key = (h, n_sub)
        prop = cache.get(key)
        if prop is None:
            prop = np.linalg.matrix_power(_rk4_propagator(sup, h / n_sub), n_sub)
            if len(cache) < 64:
                cache[key] = prop
        m = (prop @ vec).reshape(d, d)
        m = 0.5 * (m + m.conj().T)
        states[i] = m
        vec = m.reshape(-1)

    traces = np.real(np.trace(states, axis1=1, axis2=2))
    if np.max(np.abs(traces - 1.0)) > 1e-9:
        raise IntegrationError("trace drifted by more than 1e-9; use a smaller time step")
    lowest = np.linalg.eigvalsh(states)[:, 0]
    if lowest.min() < -1e-8:
        bad = int(np.argmin(lowest))
        raise IntegrationError(
            f"eigenvalue {lowest[bad]:.3g} < 0 at t={t[bad]:.6g}; use a smaller time step"
        )

    derivs = lindbladian.rhs(states)
    probs, vecs, pdots = spectral_frames(states, derivs)
    for arr in (t, states, derivs, probs, vecs, pdots):
        arr.setflags(write=False)
    return Trajectory(lindbladian, t, states, derivs, probs, vecs, pdots)


def _degenerate_fix(p: np.ndarray, v: np.ndarray, deriv: np.ndarray) -> np.ndarray:
    """Within blocks of (near-)equal eigenvalues, diagonalise the derivative."""
    v = v.copy()
    d = p.size
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and abs(p[stop] - p[start]) < TOL_DEGENERATE:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            sub = block.conj().T @ deriv @ block
            _, u = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            v[:, start:stop] = block @ u[:, ::-1]
        start = stop
    return v


def spectral_frames(states: np.ndarray, derivs: np.ndarray):
    """Instantaneous eigen-decomposition along a sampled path.

    Returns ``(probs, vecs, pdots)``.  The first sample is sorted descending;
    later samples are permuted to maximise overlap with their predecessor.
    ``pdots`` follows from first-order perturbation theory:
    ``pdot_x = <x| d rho/dt |x>``.
    """
    vals, vecs = np.linalg.eigh(0.5 * (states + np.conj(np.swapaxes(states, -1, -2))))
    vals = vals[:, ::-1].copy()
    vecs = vecs[:, :, ::-1].copy()
    # phase convention: first non-negligible component real positive
    n, d = vals.shape
    lead = np.argmax(np.abs(vecs) > 1e-12, axis=1)  # (n, d)
    c = np.take_along_axis(vecs, lead[:, None, :], axis=1)[:, 0, :]
    vecs = vecs * (np.abs(c) / np.where(c == 0, 1, c))[:, None, :]

    if d > 1:
        gaps = np.min(np.abs(np.diff(vals, axis=1)), axis=1)
        for i in np.flatnonzero(gaps < TOL_DEGENERATE):
            vecs[i] = _degenerate_fix(vals[i], vecs[i], derivs[i])

    for i in range(1, n):
        overlap = np.abs(vecs[i - 1].conj().T @ vecs[i]) ** 2
        perm = np.argmax(overlap, axis=1)
        if np.array_equal(perm, np.arange(d)):
            continue
        if len(set(perm.tolist())) != d:
            _, perm = linear_sum_assignment(-overlap)
        vecs[i] = vecs[i][:, perm]
        vals[i] = vals[i][perm]

    deig = np.conj(np.swapaxes(vecs, -1, -2)) @ derivs @ vecs
    pdots = np.real(np.diagonal(deig, axis1=1, axis2=2)).copy()
    return vals, vecs, pdots


def transition_rates(lindbladian: Lindbladian, vecs: np.ndarray) -> np.ndarray:
    """Rates ``w_k[x, y] = |<x|L_k|y>|^2`` in the given eigenbasis.

    ``vecs`` is ``(d, d)`` or a stack ``(n, d, d)``; the result has shape
    ``(K, d, d)`` or ``(n, K, d, d)``.
    """
    v = np.asarray(vecs)
    elems = np.einsum("...ax,kab,...by->...kxy", v.conj(), lindbladian.ops, v)
    return np.abs(elems) ** 2


@dataclass(frozen=True)
class EigenbasisCurrents:
    rates: np.ndarray  # w_k[x, y]
    currents: np.ndarray  # j_k[x, y]; zero on the diagonal
    forces: np.ndarray  # f_k[x, y]; NaN where excluded
    flows: np.ndarray  # phi_k[x, y]; NaN where the channel pair is inactive
    n_excluded: int  # live channel pairs dropped for vanishing populations


def eigenbasis_currents(lindbladian: Lindbladian, probs, vecs) -> EigenbasisCurrents:
    """Currents, forces and entropy flows between instantaneous eigenstates.

    ``j_k[x,y] = w_k[x,y] p_y - w_k'[y,x] p_x``; forces and flows are the logs
    of the flux and rate ratios.  Works on a single sample or on a stack.
    Transitions with ``x == y`` carry no current and are left out.
    """
    p = np.asarray(probs, dtype=float)
    w = transition_rates(lindbladian, vecs)
    w_rev = np.swapaxes(w[..., lindbladian.partner_index, :, :], -1, -2)  # w_k'[y, x]
    py = p[..., None, None, :]
    px = p[..., None, :, None]
    d = p.shape[-1]
    off = ~np.eye(d, dtype=bool)
    j = np.where(off, w * py - w_rev * px, 0.0)

    tiny = 1e-14 * max(1.0, float(np.max(w, initial=0.0)))
    active = off & (w > tiny) & (w_rev > tiny)
    live = active & (py > EPS_FLOOR) & (px > EPS_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        flows = np.where(active, np.log(w) - np.log(w_rev), np.nan)
        forces = np.where(live, flows + np.log(py) - np.log(px), np.nan)
    n_excl = int(np.count_nonzero(active & ~live))
    if n_excl:
        logger.debug("excluded %d channel transitions with vanishing population", n_excl)
    return EigenbasisCurrents(w, j, forces, flows, n_excl)


def current_average(j: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``1/2 sum_{k,x,y} j_k[x,y] A_k[x,y]`` over the trailing three axes; NaN entries skipped."""
    mask = np.isfinite(a)
    return 0.5 * np.sum(np.where(mask, j * np.where(mask, a, 0.0), 0.0), axis=(-3, -2, -1))
