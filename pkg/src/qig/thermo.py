"""Entropy rates, the incoherent-Fisher identities and geometric bounds.

Everything here post-processes a :class:`~qig.gksl.Trajectory`.  First
derivatives come from the generator; second derivatives (of the spectrum,
of the entropy rate, of forces and flows) are one layer of five-point central
differences on the sample grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .calculus import cumulative_integral, time_derivative
from .errors import DomainError
from .geometry import MetricKind, geometric_uncertainty, qfi_series, statistical_length
from .gksl import Trajectory, current_average, eigenbasis_currents
from .states import EPS_FLOOR, as_density, as_hermitian, free_energy, relative_entropy_many, thermal_state

logger = logging.getLogger(__name__)

TOL_BOUND = 1e-6


def _log_probs(probs):
    p = np.asarray(probs, dtype=float)
    keep = p > EPS_FLOOR
    return keep, np.log(np.where(keep, p, 1.0))


@dataclass(frozen=True)
class EntropyRecord:
    times: np.ndarray
    entropy: np.ndarray  # S
    rate: np.ndarray  # Sdot
    production: np.ndarray  # sigma
    flow: np.ndarray  # Phi
    acceleration: np.ndarray  # Sddot
    b_term: np.ndarray  # B = -sum pddot log p
    c_term: np.ndarray  # C(t) = int_0^t B


def entropy_decomposition(traj: Trajectory) -> EntropyRecord:
    keep, logp = _log_probs(traj.probs)
    p = np.where(keep, traj.probs, 0.0)
    entropy = -np.sum(p * logp, axis=-1)
    rate = -np.sum(np.where(keep, traj.pdots * logp, 0.0), axis=-1)

    cur = eigenbasis_currents(traj.lindbladian, traj.probs, traj.vecs)
    production = current_average(cur.currents, cur.forces)
    flow = current_average(cur.currents, cur.flows)

    t = traj.times
    pddots = time_derivative(traj.pdots, t, order=4)
    b_term = -np.sum(np.where(keep, pddots * logp, 0.0), axis=-1)
    return EntropyRecord(
        times=t,
        entropy=entropy,
        rate=rate,
        production=production,
        flow=flow,
        acceleration=time_derivative(rate, t, order=4),
        b_term=b_term,
        c_term=cumulative_integral(b_term, t),
    )


@dataclass(frozen=True)
class IdentityReport:
    times: np.ndarray
    incoherent: np.ndarray  # F_IC
    acceleration_form: np.ndarray  # B - (sigma_dot - Phi_dot)
    current_form: np.ndarray  # -<<df/dt>> + <<dphi/dt>>
    force_rate: np.ndarray  # <<df/dt>>
    flow_rate: np.ndarray  # <<dphi/dt>>
    dev_acceleration: float  # interior sup-norm deviation / max |F_IC|
    dev_current: float
    min_inequality_gap: float  # min over interior of (<<dphi/dt>> - <<df/dt>>) / max |F_IC|

    @property
    def scale(self) -> float:
        return max(float(np.max(np.abs(self.incoherent))), EPS_FLOOR)


def qfi_ic_identities(traj: Trajectory, record: EntropyRecord | None = None) -> IdentityReport:
    """Check ``F_IC = B - (sigma_dot - Phi_dot) = -<<df/dt>> + <<dphi/dt>>`` along a trajectory.

    Deviations are sup norms over interior samples, divided by the largest
    value of ``F_IC`` on the trajectory.
    """
    record = record or entropy_decomposition(traj)
    t = traj.times
    incoherent = qfi_series(traj, MetricKind.SLD).incoherent
    sigma_dot = time_derivative(record.production, t, order=4)
    phi_dot = time_derivative(record.flow, t, order=4)
    accel_form = record.b_term - (sigma_dot - phi_dot)

    cur = eigenbasis_currents(traj.lindbladian, traj.probs, traj.vecs)
    fdot = time_derivative(cur.forces, t, order=4)
    phidot = time_derivative(cur.flows, t, order=4)
    force_rate = current_average(cur.currents, fdot)
    flow_rate = current_average(cur.currents, phidot)
    current_form = flow_rate - force_rate

    scale = max(float(np.max(np.abs(incoherent))), EPS_FLOOR)
    inner = slice(1, -1)
    return IdentityReport(
        times=t,
        incoherent=incoherent,
        acceleration_form=accel_form,
        current_form=current_form,
        force_rate=force_rate,
        flow_rate=flow_rate,
        dev_acceleration=float(np.max(np.abs(accel_form - incoherent)[inner])) / scale,
        dev_current=float(np.max(np.abs(current_form - incoherent)[inner])) / scale,
        min_inequality_gap=float(np.min((flow_rate - force_rate)[inner])) / scale,
    )


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    margin: float
    kind: MetricKind
    horizon: float
    identity_residual: float  # (-delta T + int F_C) - (4 L^2 / T - int F_IC)

    @property
    def holds(self) -> bool:
        scale = max(abs(self.lhs), abs(self.rhs), 1e-12)
        return self.margin >= -TOL_BOUND * scale


@dataclass(frozen=True)
class BoundSeries:
    """The entropy-rate bound evaluated for every horizon ``T`` on the grid.

    Entry 0 (``T = 0``) is NaN because the geometric uncertainty is undefined there.
    """

    kind: MetricKind
    times: np.ndarray
    lhs: np.ndarray  # Sdot(T) - Sdot(0)
    rhs: np.ndarray  # C - T delta + int F_C
    identity_residual: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    def relative_margin(self) -> np.ndarray:
        scale = np.maximum(np.maximum(np.abs(self.lhs), np.abs(self.rhs)), 1e-12)
        return self.margin / scale

    def at(self, horizon: float) -> BoundReport:
        i = int(np.argmin(np.abs(self.times - horizon)))
        if i == 0:
            raise DomainError("horizon must exceed the first grid step (delta undefined at T = 0)")
        return BoundReport(
            lhs=float(self.lhs[i]),
            rhs=float(self.rhs[i]),
            margin=float(self.margin[i]),
            kind=self.kind,
            horizon=float(self.times[i] - self.times[0]),
            identity_residual=float(self.identity_residual[i]),
        )


def entropy_rate_bound_series(traj: Trajectory, kind, record: EntropyRecord | None = None) -> BoundSeries:
    kind = MetricKind.parse(kind)
    record = record or entropy_decomposition(traj)
    t = traj.times
    parts = qfi_series(traj, kind)
    elapsed = t - t[0]
    delta, _ = geometric_uncertainty(t, parts.total)
    int_c = cumulative_integral(parts.coherent, t)
    int_ic = cumulative_integral(parts.incoherent, t)
    length = statistical_length(t, parts.total)

    lhs = record.rate - record.rate[0]
    rhs = record.c_term - elapsed * delta + int_c
    with np.errstate(divide="ignore", invalid="ignore"):
        residual = (-elapsed * delta + int_c) - (4.0 * length**2 / elapsed - int_ic)
    lhs = np.where(elapsed > 0, lhs, np.nan)
    return BoundSeries(kind, t, lhs, rhs, residual)


def entropy_rate_bound(traj: Trajectory, kind, horizon: float, record: EntropyRecord | None = None) -> BoundReport:
    """``Sdot(T) - Sdot(0) <= C - T delta + int_0^T F_C`` at a single horizon."""
    return entropy_rate_bound_series(traj, kind, record).at(horizon)


@dataclass(frozen=True)
class ObservableBound:
    times: np.ndarray
    speed_ratio: np.ndarray  # |d<O>/dt| / Delta O; zero on skipped samples
    lhs: np.ndarray  # cumulative integral of speed_ratio
    rhs: np.ndarray  # 2 L_SLD(t)
    skipped: int  # samples with vanishing variance

    def relative_gap(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.rhs > 0, (self.rhs - self.lhs) / self.rhs, np.nan)


def observable_speed_bound(traj: Trajectory, observable) -> ObservableBound:
    """Time-integrated ``|d<O>/dt| / Delta O`` against twice the SLD statistical length."""
    o = as_hermitian(observable)
    mean = np.real(np.einsum("ab,nba->n", o, traj.states))
    # centred form: the raw second moment loses the variance to cancellation
    centred = o[None] - mean[:, None, None] * np.eye(o.shape[0])
    var = np.clip(np.real(np.einsum("nab,nbc,nca->n", centred, centred, traj.states)), 0.0, None)
    odot = np.real(np.einsum("ab,nba->n", o, traj.derivs))
    std = np.sqrt(var)
    ok = std > EPS_FLOOR
    skipped = int(np.count_nonzero(~ok))
    if skipped:
        logger.info("observable speed bound: skipped %d samples with vanishing variance", skipped)
    ratio = np.where(ok, np.abs(odot) / np.where(ok, std, 1.0), 0.0)
    t = traj.times
    sld = qfi_series(traj, MetricKind.SLD).total
    return ObservableBound(t, ratio, cumulative_integral(ratio, t), 2.0 * statistical_length(t, sld), skipped)


def heat_current(traj: Trajectory, hamiltonian=None) -> np.ndarray:
    """``Tr[H d rho/dt]`` at every sample (defaults to the generator's Hamiltonian)."""
    h = traj.lindbladian.hamiltonian if hamiltonian is None else as_hermitian(hamiltonian)
    return np.real(np.einsum("ab,nba->n", h, traj.derivs))


def noneq_free_energy(state, hamiltonian, beta: float) -> float:
    """``D(state || tau_beta) / beta + F_eq``."""
    return excess_free_energy(state, hamiltonian, beta) + free_energy(hamiltonian, beta)


def excess_free_energy(state, hamiltonian, beta: float):
    """``F_neq - F_eq = D(state || tau_beta) / beta`` without the cancellation against ``F_eq``.

    ``state`` may be a single density matrix or a stack of them (a stack is
    not re-validated).
    """
    if beta <= 0:
        raise DomainError("inverse temperature must be positive")
    state = np.asarray(state)
    tau = thermal_state(hamiltonian, beta)
    if state.ndim == 2:
        return float(relative_entropy_many(as_density(state), tau)) / beta
    return relative_entropy_many(state, tau) / beta
