"""Classical continuous-time master equations and their stochastic thermodynamics.

Conventions: ``w[x, y]`` is the rate of the transition ``y -> x``, columns of
a rate matrix sum to zero, and the master equation reads ``pdot = w @ p``.
Antisymmetric pair quantities (currents, forces) are indexed the same way.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .calculus import check_grid, time_derivative
from .errors import IntegrationError, ValidationError
from .states import EPS_FLOOR

logger = logging.getLogger(__name__)

Generator = Union[np.ndarray, Callable[[float], np.ndarray]]


def rate_matrix(w, tol: float = 1e-12) -> np.ndarray:
    """Validate a rate matrix and return a read-only copy."""
    w = np.array(w, dtype=float, copy=True)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 2:
        raise ValidationError(f"rate matrix must be square with N >= 2, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("rate matrix has non-finite entries")
    off = w - np.diag(np.diag(w))
    if np.any(off < 0):
        raise ValidationError("off-diagonal rates must be non-negative")
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.max(np.abs(w.sum(axis=0))) > tol * scale:
        raise ValidationError("columns of the rate matrix must sum to zero")
    if np.any((off > 0) & (off.T <= 0)):
        raise ValidationError("every allowed transition needs a non-zero reverse rate")
    w.setflags(write=False)
    return w


def from_rates(offdiag) -> np.ndarray:
    """Build a rate matrix from off-diagonal rates (the diagonal of the input is ignored)."""
    off = np.array(offdiag, dtype=float, copy=True)
    np.fill_diagonal(off, 0.0)
    return rate_matrix(off - np.diag(off.sum(axis=0)))


def prob_vector(p, tol: float = 1e-10) -> np.ndarray:
    p = np.array(p, dtype=float, copy=True)
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        raise ValidationError("probability vector must be a finite 1-D array")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValidationError("probabilities must be non-negative and sum to one")
    return p


@dataclass(frozen=True)
class ClassicalTrajectory:
    times: np.ndarray
    probs: np.ndarray  # (n, N)
    pdots: np.ndarray  # (n, N), w(t) @ p(t) at each sample
    rates: np.ndarray  # (n, N, N), w(t) at each sample


def _as_callable(W: Generator) -> Callable[[float], np.ndarray]:
    if callable(W):
        return lambda t: rate_matrix(W(t))
    w = rate_matrix(W)
    return lambda t: w


def integrate_classical(W: Generator, p0, times) -> ClassicalTrajectory:
    """Fixed-step RK4 for ``pdot = w(t) p`` sampled on ``times``.

    Each grid interval ``h`` is split into the smallest number of substeps
    with ``10 * dt * max|w| <= 1``.
    """
    wfun = _as_callable(W)
    t = check_grid(times)
    p = prob_vector(p0)
    if wfun(t[0]).shape[0] != p.size:
        raise ValidationError("rate matrix and probability vector dimensions differ")

    probs = np.empty((t.size, p.size))
    rates = np.empty((t.size, p.size, p.size))
    probs[0] = p
    rates[0] = wfun(t[0])
    for i in range(1, t.size):
        h = t[i] - t[i - 1]
        wmax = max(np.max(np.abs(rates[i - 1])), np.max(np.abs(wfun(t[i]))))
        n_sub = max(1, int(np.ceil(10.0 * h * wmax)))
        dt = h / n_sub
        s = t[i - 1]
        for _ in range(n_sub):
            k1 = wfun(s) @ p
            k2 = wfun(s + dt / 2) @ (p + dt / 2 * k1)
            k3 = wfun(s + dt / 2) @ (p + dt / 2 * k2)
            k4 = wfun(s + dt) @ (p + dt * k3)
            p = p + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += dt
        if p.min() < -1e-9:
            raise IntegrationError(
                f"probability {p.min():.3g} < 0 at t={t[i]:.6g}; use a smaller time step"
            )
        probs[i] = p
        rates[i] = wfun(t[i])
    pdots = np.einsum("nxy,ny->nx", rates, probs)
    return ClassicalTrajectory(t, probs, pdots, rates)


def currents(w, p) -> np.ndarray:
    """``j[x, y] = w[x, y] p[y] - w[y, x] p[x]`` for x != y (zero on the diagonal)."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    flux = w * p[None, :]
    np.fill_diagonal(flux, 0.0)
    return flux - flux.T


@dataclass(frozen=True)
class ForceFlow:
    force: np.ndarray  # f[x, y]; NaN on excluded pairs and the diagonal
    flow: np.ndarray  # phi[x, y]; NaN where both rates vanish and on the diagonal
    excluded: tuple  # (x, y) pairs with x < y dropped because a flux vanishes


def force_and_flow(w, p) -> ForceFlow:
    """Thermodynamic forces ``log(w_xy p_y / w_yx p_x)`` and entropy flows ``log(w_xy / w_yx)``."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    n = w.shape[0]
    off = ~np.eye(n, dtype=bool)
    connected = off & (w > 0) & (w.T > 0)
    flux = w * p[None, :]
    live = connected & (flux > EPS_FLOOR * EPS_FLOOR) & (flux.T > EPS_FLOOR * EPS_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(connected, np.log(w) - np.log(w.T), np.nan)
        f = np.where(live, np.log(flux) - np.log(flux.T), np.nan)
    excluded = tuple(
        (int(x), int(y)) for x, y in zip(*np.nonzero(connected & ~live)) if x < y
    )
    if excluded:
        logger.debug("excluded pairs with vanishing flux: %s", excluded)
    return ForceFlow(f, phi, excluded)


def current_average(j, a) -> float:
    """``<<A>> = 1/2 sum_{x,y} j[x, y] A[x, y]``; NaN entries of ``A`` are skipped."""
    j = np.asarray(j, dtype=float)
    a = np.asarray(a, dtype=float)
    mask = np.isfinite(a)
    return float(0.5 * np.sum(np.where(mask, j * np.where(mask, a, 0.0), 0.0)))


def classical_fisher(p, pdot) -> float:
    """``sum_x pdot_x**2 / p_x`` over states with ``p_x > EPS_FLOOR``."""
    p = np.asarray(p, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    m = p > EPS_FLOOR
    return float(np.sum(pdot[m] ** 2 / p[m]))


def surprisal_differences(p) -> np.ndarray:
    """Relative surprisal ``I[x, y] = -log(p_y / p_x)``."""
    with np.errstate(divide="ignore"):
        lp = np.log(np.asarray(p, dtype=float))
    return lp[:, None] - lp[None, :]


def entropy_rates_classical(w, p) -> tuple:
    """Return ``(Sdot, sigma, Phi)`` with ``Sdot = -<<I>>``, ``sigma = <<f>>``, ``Phi = <<phi>>``."""
    j = currents(w, p)
    ff = force_and_flow(w, p)
    sdot = -current_average(j, surprisal_differences(p))
    return sdot, current_average(j, ff.force), current_average(j, ff.flow)


def entropic_acceleration_term(p, pddot) -> float:
    """``B = -sum_x pddot_x log p_x`` over states with ``p_x > EPS_FLOOR``."""
    p = np.asarray(p, dtype=float)
    m = p > EPS_FLOOR
    return float(-np.sum(np.asarray(pddot)[m] * np.log(p[m])))


@dataclass(frozen=True)
class FisherIdentityReport:
    times: np.ndarray
    spectral: np.ndarray  # sum pdot^2 / p
    surprisal: np.ndarray  # <<dI/dt>>
    thermodynamic: np.ndarray  # -<<df/dt>> + <<dphi/dt>>
    force_rate: np.ndarray  # <<df/dt>>
    flow_rate: np.ndarray  # <<dphi/dt>>
    max_rel_dev: float  # over interior samples, relative to max |spectral|

    @property
    def inequality_holds(self) -> bool:
        interior = slice(1, -1)
        scale = max(float(np.max(np.abs(self.spectral))), EPS_FLOOR)
        return bool(np.all(self.flow_rate[interior] - self.force_rate[interior] >= -1e-6 * scale))


def fisher_identity_check(traj: ClassicalTrajectory) -> FisherIdentityReport:
    """Compare the three expressions of the Fisher information along a trajectory.

    ``dI/dt`` uses the exact ``pdot``; ``df/dt`` and ``dphi/dt`` are
    five-point central differences of the force and flow matrices over the
    grid (second order on grids that are short or non-uniform).
    """
    t, probs, pdots, rates = traj.times, traj.probs, traj.pdots, traj.rates
    n = t.size
    forces = np.empty_like(rates)
    flows = np.empty_like(rates)
    js = np.empty_like(rates)
    for i in range(n):
        ff = force_and_flow(rates[i], probs[i])
        forces[i], flows[i] = ff.force, ff.flow
        js[i] = currents(rates[i], probs[i])
    fdot = time_derivative(forces, t, order=4)
    phidot = time_derivative(flows, t, order=4)

    spectral = np.array([classical_fisher(p, pd) for p, pd in zip(probs, pdots)])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(probs > EPS_FLOOR, pdots / probs, np.nan)
    idot = ratio[:, :, None] - ratio[:, None, :]
    surprisal = np.array([current_average(js[i], idot[i]) for i in range(n)])
    force_rate = np.array([current_average(js[i], fdot[i]) for i in range(n)])
    flow_rate = np.array([current_average(js[i], phidot[i]) for i in range(n)])
    thermo = flow_rate - force_rate

    scale = max(float(np.max(np.abs(spectral))), EPS_FLOOR)
    interior = slice(1, -1) if n > 2 else slice(0, n)
    dev = max(
        float(np.max(np.abs(surprisal[interior] - spectral[interior]), initial=0.0)),
        float(np.max(np.abs(thermo[interior] - spectral[interior]), initial=0.0)),
    )
    return FisherIdentityReport(t, spectral, surprisal, thermo, force_rate, flow_rate, dev / scale)
