"""Thermal relaxation of a qubit: coherent reference state versus its rotated, diagonal twin."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .geometry import GeometricSummary, MetricKind, geodesic_length, geodesic_lengths, summarize
from .gksl import JumpPair, Lindbladian, Trajectory, integrate
from .states import (
    PAULI_Z,
    bloch_to_density,
    free_energy,
    thermal_state,
)
from .thermo import (
    BoundSeries,
    EntropyRecord,
    IdentityReport,
    ObservableBound,
    entropy_decomposition,
    entropy_rate_bound_series,
    excess_free_energy,
    heat_current,
    observable_speed_bound,
    qfi_ic_identities,
)

logger = logging.getLogger(__name__)

DEFAULT_R_REF = (-0.41760, -0.60647, 0.47879)


@dataclass(frozen=True)
class MpembaScenario:
    epsilon: float = 5.0
    temperature: float = 10.0
    gamma: float = 1.0
    r_ref: Tuple[float, float, float] = DEFAULT_R_REF
    horizon: Optional[float] = None  # default 12 / gamma
    dt: Optional[float] = None  # default 1e-3 / gamma

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValidationError("temperature must be positive")
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ValidationError("level splitting epsilon must be positive")
        r = tuple(float(x) for x in self.r_ref)
        if len(r) != 3:
            raise ValidationError("r_ref must have three components")
        if np.linalg.norm(r) > 1.0 + 1e-12:
            raise ValidationError("|r_ref| must not exceed 1")
        if r[0] == 0.0 and r[1] == 0.0:
            raise ValidationError("reference state needs coherence: r_x or r_y must be non-zero")
        object.__setattr__(self, "r_ref", r)
        if self.horizon is None:
            object.__setattr__(self, "horizon", 12.0 / self.gamma)
        if self.dt is None:
            object.__setattr__(self, "dt", 1e-3 / self.gamma)
        if not (self.horizon > 0 and 0 < self.dt < self.horizon):
            raise ValidationError("need 0 < dt < horizon")

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature

    @property
    def bose_occupation(self) -> float:
        return 1.0 / np.expm1(self.beta * self.epsilon)

    @property
    def gamma_plus(self) -> float:
        return self.gamma * self.bose_occupation

    @property
    def gamma_minus(self) -> float:
        return self.gamma * (1.0 + self.bose_occupation)

    @property
    def relaxation_rate(self) -> float:
        """Population relaxation rate ``gamma_+ + gamma_-``."""
        return self.gamma_plus + self.gamma_minus

    def grid(self) -> np.ndarray:
        n = int(round(self.horizon / self.dt))
        return np.linspace(0.0, n * self.dt, n + 1)


@dataclass(frozen=True, eq=False)
class MpembaSystem:
    hamiltonian: np.ndarray
    lindbladian: Lindbladian
    rho_ref: np.ndarray
    rho_rot: np.ndarray
    thermal: np.ndarray


def build_scenario(s: MpembaScenario) -> MpembaSystem:
    """Qubit ``H = eps/2 sigma_z`` with absorption/emission jumps and both initial states.

    Basis order is ``(|e>, |g>)``.  The jump pair is stored with the emission
    operator first, whose environment entropy change is ``beta * eps``.
    """
    h = 0.5 * s.epsilon * PAULI_Z
    up = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|
    down = up.conj().T  # |g><e|
    l_plus = np.sqrt(s.gamma_plus) * up
    l_minus = np.sqrt(s.gamma_minus) * down
    pair = JumpPair(op=l_minus, partner=l_plus, phi=np.log(s.gamma_minus / s.gamma_plus))
    lind = Lindbladian(h, [pair])
    rho_ref = bloch_to_density(s.r_ref)
    lam = np.sort(np.linalg.eigvalsh(rho_ref))[::-1]
    rho_rot = np.diag(lam).astype(complex)
    rho_rot.setflags(write=False)
    return MpembaSystem(h, lind, rho_ref, rho_rot, thermal_state(h, s.beta))


@dataclass(frozen=True)
class CrossingResult:
    t_m: Optional[float]
    persistent: bool


def detect_crossing(times, a, b) -> CrossingResult:
    """Time after which ``a > b`` holds at every later grid point.

    ``t_m`` is the linearly interpolated zero of ``a - b`` on the last grid
    interval where the sign changes; absent when ``a > b`` already holds from
    the start or never holds at the horizon.
    """
    t = np.asarray(times, dtype=float)
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.size == 0 or not diff[-1] > 0:
        return CrossingResult(None, False)
    bad = np.flatnonzero(~(diff > 0))
    if bad.size == 0:
        return CrossingResult(None, False)
    i = int(bad[-1])
    d0, d1 = diff[i], diff[i + 1]
    t_m = t[i] + (t[i + 1] - t[i]) * (-d0) / (d1 - d0)
    return CrossingResult(float(t_m), True)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    window: Tuple[float, float]
    shrunk: bool


def decay_rate_fit(times, series, window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """Least-squares slope of ``-log(series)`` against time over ``window``.

    The default window is the second half of the grid.  If the window
    contains non-positive samples it is cut back to end before the first one.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float)
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    lo, hi = window
    sel = np.flatnonzero((t >= lo - 1e-12) & (t <= hi + 1e-12))
    shrunk = False
    bad = sel[~(y[sel] > 0)]
    if bad.size:
        sel = sel[sel < bad[0]]
        shrunk = True
        logger.info("decay fit window shrunk to end before t=%.6g", t[bad[0]])
    if sel.size < 3:
        raise ValueError("fewer than three positive samples in the fit window")
    slope = np.polyfit(t[sel], np.log(y[sel]), 1)[0]
    return DecayFit(float(-slope), (float(t[sel[0]]), float(t[sel[-1]])), shrunk)


@dataclass(frozen=True, eq=False)
class StateRun:
    """All analyses of one relaxing initial state."""

    trajectory: Trajectory
    geometry: Dict[MetricKind, GeometricSummary]
    entropy: EntropyRecord
    identities: IdentityReport
    bounds: Dict[MetricKind, BoundSeries]
    observable: ObservableBound
    heat: np.ndarray
    excess_free_energy: np.ndarray  # F_neq - F_eq
    free_energy: np.ndarray  # F_neq
    geodesic_from_start: Dict[MetricKind, np.ndarray]  # L_geo(rho(0), rho(t))
    geodesic_to_thermal: Dict[MetricKind, float]  # L_geo(rho(0), tau_beta)
    length_convergence: Dict[MetricKind, float]  # L(tau) - L(0.9 tau)

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    def l_infinity(self, kind=MetricKind.SLD) -> float:
        return float(self.geometry[MetricKind.parse(kind)].length[-1])


@dataclass(frozen=True, eq=False)
class ExperimentBundle:
    scenario: MpembaScenario
    system: MpembaSystem
    metrics: Tuple[MetricKind, ...]
    reference: StateRun
    rotated: StateRun
    crossing: CrossingResult
    decay_fits: Dict[str, DecayFit] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.reference.times


_GEODESIC_KINDS = (MetricKind.SLD, MetricKind.WY)


def analyse_state(traj: Trajectory, metrics: Sequence[MetricKind], hamiltonian=None,
                  beta: Optional[float] = None) -> StateRun:
    """Evaluate every figure quantity on one trajectory.

    Without ``beta`` the free-energy series are NaN and no distance to the
    thermal state is reported.
    """
    metrics = tuple(MetricKind.parse(m) for m in metrics)
    h = traj.lindbladian.hamiltonian if hamiltonian is None else hamiltonian
    geometry = {k: summarize(traj, k) for k in metrics}
    record = entropy_decomposition(traj)
    bounds = {k: entropy_rate_bound_series(traj, k, record) for k in metrics}
    rho0 = traj.states[0]
    geo_start = {k: geodesic_lengths(rho0, traj.states, k) for k in _GEODESIC_KINDS}
    if beta is None:
        excess = np.full(len(traj.times), np.nan)
        f_neq = excess
        geo_thermal = {}
    else:
        excess = excess_free_energy(traj.states, h, beta)
        f_neq = excess + free_energy(h, beta)
        thermal = thermal_state(h, beta)
        geo_thermal = {k: geodesic_length(rho0, thermal, k) for k in _GEODESIC_KINDS}
    t = traj.times
    i90 = int(np.searchsorted(t, t[0] + 0.9 * (t[-1] - t[0])))
    conv = {k: float(g.length[-1] - g.length[i90]) for k, g in geometry.items()}
    return StateRun(
        trajectory=traj,
        geometry=geometry,
        entropy=record,
        identities=qfi_ic_identities(traj, record),
        bounds=bounds,
        observable=observable_speed_bound(traj, h),
        heat=heat_current(traj, h),
        excess_free_energy=excess,
        free_energy=f_neq,
        geodesic_from_start=geo_start,
        geodesic_to_thermal=geo_thermal,
        length_convergence=conv,
    )


def run_experiment(s: MpembaScenario | None = None, metrics: Sequence = tuple(MetricKind)) -> ExperimentBundle:
    """Integrate both initial states and evaluate every figure quantity.

    Tail decay rates of ``F_IC`` and ``F_C`` are fitted over ``[tau/4, tau/2]``:
    beyond ``tau/2`` the incoherent part has dropped below double-precision
    resolution of the state (it decays as ``exp(-2 Gamma t)``).
    """
    s = s or MpembaScenario()
    kinds = tuple(dict.fromkeys(MetricKind.parse(m) for m in metrics))
    if not kinds:
        raise ValidationError("at least one metric is required")
    if MetricKind.SLD not in kinds:
        kinds = (MetricKind.SLD,) + kinds
    system = build_scenario(s)
    grid = s.grid()
    runs = {}
    for name, rho0 in (("reference", system.rho_ref), ("rotated", system.rho_rot)):
        traj = integrate(system.lindbladian, rho0, grid)
        runs[name] = analyse_state(traj, kinds, system.hamiltonian, s.beta)

    ref, rot = runs["reference"], runs["rotated"]
    crossing = detect_crossing(grid, ref.excess_free_energy, rot.excess_free_energy)

    window = (grid[0] + 0.25 * (grid[-1] - grid[0]), grid[0] + 0.5 * (grid[-1] - grid[0]))
    sld = MetricKind.SLD
    fits = {
        "reference_incoherent": decay_rate_fit(grid, ref.geometry[sld].incoherent, window),
        "reference_coherent": decay_rate_fit(grid, ref.geometry[sld].coherent, window),
        "rotated_incoherent": decay_rate_fit(grid, rot.geometry[sld].incoherent, window),
    }
    return ExperimentBundle(s, system, kinds, ref, rot, crossing, fits)
