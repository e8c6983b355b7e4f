"""Quantum Fisher information with respect to time, and path functionals.

For a monotone metric with normalised, self-inversive function ``f`` the
Fisher information of a path ``rho(t)`` is

    F_Q = sum_{x,y} |<x|d rho/dt|y>|^2 / (p_x f(p_y / p_x))

in the instantaneous eigenbasis of ``rho(t)``.  The diagonal (``x == y``)
terms give the metric-independent incoherent part ``F_IC``; the rest gives
the coherent part ``F_C``.  Time integrals use the composite trapezoid rule on
the stored grid.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .calculus import check_grid, cumulative_integral
from .errors import DivergentQFIError, DomainError, ValidationError
from .gksl import Trajectory, spectral_frames
from .states import EPS_FLOOR, affinity_many, as_density, as_hermitian, fidelity_many


class MetricKind(enum.Enum):
    SLD = "sld"
    WY = "wy"
    HM = "hm"

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown metric {value!r}; expected one of sld, wy, hm") from None

    def denominator(self, px, py):
        """``p_x f(p_y/p_x)`` written symmetrically so that ``p_x = 0`` is harmless."""
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        if self is MetricKind.SLD:
            return 0.5 * (px + py)
        if self is MetricKind.WY:
            return 0.25 * (np.sqrt(px) + np.sqrt(py)) ** 2
        s = px + py
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(s > 0, 2.0 * px * py / np.where(s > 0, s, 1.0), 0.0)


def metric_f(kind, x: float) -> float:
    """The operator-monotone function defining each metric."""
    kind = MetricKind.parse(kind)
    if x < 0:
        raise DomainError("metric function is defined for x >= 0")
    if kind is MetricKind.SLD:
        return (x + 1.0) / 2.0
    if kind is MetricKind.WY:
        return 0.25 * (np.sqrt(x) + 1.0) ** 2
    return 2.0 * x / (x + 1.0)


class QFI(NamedTuple):
    total: np.ndarray
    incoherent: np.ndarray
    coherent: np.ndarray


def _qfi_from_frames(probs, pdots, deig, kind: MetricKind) -> QFI:
    p = np.asarray(probs, dtype=float)
    d = p.shape[-1]
    keep = p > EPS_FLOOR
    incoherent = np.sum(np.where(keep, pdots**2 / np.where(keep, p, 1.0), 0.0), axis=-1)

    num = np.abs(deig) ** 2
    den = kind.denominator(p[..., :, None], p[..., None, :])
    off = ~np.eye(d, dtype=bool)
    small = off & (den < EPS_FLOOR)
    if np.any(small & (num > EPS_FLOOR * 1e-6)):
        raise DivergentQFIError(
            f"{kind.name} Fisher information diverges: off-diagonal derivative on a null pair"
        )
    ok = off & ~small
    coherent = np.sum(np.where(ok, num / np.where(ok, den, 1.0), 0.0), axis=(-2, -1))
    return QFI(incoherent + coherent, incoherent, coherent)


def qfi(state, deriv, kind) -> QFI:
    """Total, incoherent and coherent Fisher information of a single state and derivative."""
    kind = MetricKind.parse(kind)
    rho = as_density(state)
    dr = as_hermitian(deriv, tol=1e-9)
    if dr.shape != rho.shape:
        raise ValidationError("state and derivative shapes differ")
    if abs(np.trace(dr)) > 1e-9:
        raise ValidationError("derivative of a density matrix must be traceless")
    probs, vecs, pdots = spectral_frames(rho[None], dr[None])
    deig = vecs[0].conj().T @ dr @ vecs[0]
    res = _qfi_from_frames(probs[0], pdots[0], deig, kind)
    return QFI(*(float(v) for v in res))


def qfi_series(traj: Trajectory, kind) -> QFI:
    kind = MetricKind.parse(kind)
    return _qfi_from_frames(traj.probs, traj.pdots, traj.deriv_eigenbasis(), kind)


def statistical_length(times, fisher) -> np.ndarray:
    """Cumulative ``L(t) = 1/2 int_0^t sqrt(F) ds``."""
    t = check_grid(times)
    return 0.5 * cumulative_integral(np.sqrt(np.clip(fisher, 0.0, None)), t)


def statistical_divergence(times, fisher) -> np.ndarray:
    """``J(T) = (T/4) int_0^T F dt`` for every horizon ``T`` on the grid (``T`` measured from the start)."""
    t = check_grid(times)
    return 0.25 * (t - t[0]) * cumulative_integral(fisher, t)


def ratio_of_completion(length, final_index: int = -1) -> np.ndarray:
    """``L(t) / L(tau)``; zero everywhere for a stationary path."""
    length = np.asarray(length, dtype=float)
    final = length[final_index]
    if final <= 0:
        return np.zeros_like(length)
    return length / final


def geometric_uncertainty(times, fisher):
    """Return ``(delta, I)`` for every horizon ``T`` on the grid.

    ``delta = 4 (J - L^2) / T^2`` and ``I = (1/T) int_0^T F dt``.  Both are
    NaN at ``T = 0`` where they are undefined.
    """
    t = check_grid(times)
    elapsed = t - t[0]
    integral = cumulative_integral(fisher, t)
    length = statistical_length(t, fisher)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(elapsed > 0, integral / elapsed, np.nan)
        delta = np.where(elapsed > 0, mean - 4.0 * length**2 / elapsed**2, np.nan)
    return delta, mean


def uncertainty_ratio(delta, mean, floor: float = 1e-12) -> np.ndarray:
    """``I / delta`` where ``delta > floor``, NaN elsewhere (ratio undefined)."""
    delta = np.asarray(delta, dtype=float)
    ok = np.isfinite(delta) & (delta > floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ok, np.asarray(mean) / np.where(ok, delta, 1.0), np.nan)


def geodesic_length(rho1, rho2, kind) -> float:
    """Closed-form geodesic distance: ``arccos sqrt(F)`` for SLD, ``arccos A`` for WY."""
    return float(geodesic_lengths(as_density(rho1), as_density(rho2), kind))


def geodesic_lengths(rho, states, kind) -> np.ndarray:
    """Geodesic distance from ``rho`` to every state in a stack."""
    kind = MetricKind.parse(kind)
    if kind is MetricKind.SLD:
        return np.arccos(np.sqrt(fidelity_many(rho, states)))
    if kind is MetricKind.WY:
        return np.arccos(affinity_many(rho, states))
    raise DomainError(f"no closed-form geodesic length for the {kind.name} metric")


@dataclass(frozen=True)
class GeometricSummary:
    kind: MetricKind
    times: np.ndarray
    fisher: np.ndarray  # F_Q
    incoherent: np.ndarray  # F_IC
    coherent: np.ndarray  # F_C
    length: np.ndarray  # L(t)
    divergence: np.ndarray  # J(t)
    completion: np.ndarray  # R_tau(t), tau = last sample
    delta: np.ndarray
    mean_fisher: np.ndarray  # I(t)

    @property
    def ratio(self) -> np.ndarray:
        return uncertainty_ratio(self.delta, self.mean_fisher)


def summarize(traj: Trajectory, kind) -> GeometricSummary:
    kind = MetricKind.parse(kind)
    parts = qfi_series(traj, kind)
    t = traj.times
    length = statistical_length(t, parts.total)
    delta, mean = geometric_uncertainty(t, parts.total)
    return GeometricSummary(
        kind=kind,
        times=t,
        fisher=parts.total,
        incoherent=parts.incoherent,
        coherent=parts.coherent,
        length=length,
        divergence=statistical_divergence(t, parts.total),
        completion=ratio_of_completion(length),
        delta=delta,
        mean_fisher=mean,
    )
