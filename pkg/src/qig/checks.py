"""Seeded random instances and the property checks run by ``qig check``.

Every check returns a :class:`CheckResult` whose ``detail`` is formatted with
a fixed number of significant digits, so a run is reproducible byte for
byte for a given seed on a given platform.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterator, List

import numpy as np

from .geometry import MetricKind, qfi_series, summarize
from .gksl import JumpPair, Lindbladian, Trajectory, integrate
from .markov import fisher_identity_check, from_rates, integrate_classical
from .thermo import (
    entropy_decomposition,
    entropy_rate_bound_series,
    observable_speed_bound,
    qfi_ic_identities,
)

logger = logging.getLogger(__name__)


def random_rate_matrix(rng: np.random.Generator, n: int, low: float = 0.1, high: float = 2.0) -> np.ndarray:
    """Fully connected rate matrix with off-diagonal rates uniform in ``[low, high]``."""
    return from_rates(rng.uniform(low, high, size=(n, n)))


def random_distribution(rng: np.random.Generator, n: int, floor: float = 0.05) -> np.ndarray:
    """Dirichlet sample mixed with the uniform distribution so every entry is at least ``floor``."""
    p = rng.dirichlet(np.ones(n))
    return (1.0 - n * floor) * p + floor


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (g + g.conj().T)


def random_density(rng: np.random.Generator, d: int, mix: float = 0.5) -> np.ndarray:
    """Ginibre state mixed with ``I/d``; ``mix`` keeps the spectrum away from zero."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return (1.0 - mix) * rho + mix * np.eye(d) / d


def random_lindbladian(rng: np.random.Generator, d: int = 3, n_pairs: int = 2, phi_max: float = 1.0) -> Lindbladian:
    """Random Hamiltonian with ``n_pairs`` detailed-balance jump pairs ``L = e^{phi/2} L'^dag``."""
    pairs = []
    for _ in range(n_pairs):
        a = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2 * d)
        phi = float(rng.uniform(-phi_max, phi_max))
        pairs.append(JumpPair(op=a, partner=np.exp(-phi / 2) * a.conj().T, phi=phi))
    return Lindbladian(random_hermitian(rng, d), pairs)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _fmt(x: float) -> str:
    return f"{x:.3e}"


def check_classical_oracle(rng: np.random.Generator, instances: int = 100, dt: float = 1e-4,
                           steps: int = 20, tol: float = 1e-5) -> CheckResult:
    """The three classical expressions for ``F`` on random 3 to 5 state chains."""
    worst = 0.0
    ineq = True
    for _ in range(instances):
        n = int(rng.integers(3, 6))
        w = random_rate_matrix(rng, n)
        traj = integrate_classical(w, random_distribution(rng, n), np.arange(steps + 1) * dt)
        rep = fisher_identity_check(traj)
        worst = max(worst, rep.max_rel_dev)
        ineq &= rep.inequality_holds
    return CheckResult("classical-oracle", worst <= tol and ineq,
                       f"instances={instances} max_rel_dev={_fmt(worst)} inequality={ineq}")


def quantum_instance(rng: np.random.Generator, d: int = 3, horizon: float = 3.0, dt: float = 1e-3) -> Trajectory:
    lind = random_lindbladian(rng, d)
    grid = np.linspace(0.0, horizon, int(round(horizon / dt)) + 1)
    return integrate(lind, random_density(rng, d), grid)


def check_qfi_ordering(traj: Trajectory, tol: float = 1e-10) -> CheckResult:
    f = {k: qfi_series(traj, k).total for k in MetricKind}
    gap1 = float(np.max(f[MetricKind.SLD] - f[MetricKind.WY]))
    gap2 = float(np.max(f[MetricKind.WY] - f[MetricKind.HM]))
    return CheckResult("qfi-ordering", gap1 <= tol and gap2 <= tol,
                       f"max(F_SLD-F_WY)={_fmt(gap1)} max(F_WY-F_HM)={_fmt(gap2)}")


def check_identities(traj: Trajectory, tol: float = 1e-4) -> CheckResult:
    rep = qfi_ic_identities(traj)
    ok = rep.dev_acceleration <= tol and rep.dev_current <= tol and rep.min_inequality_gap >= -tol
    return CheckResult("fic-identities", ok,
                       f"dev_accel={_fmt(rep.dev_acceleration)} dev_current={_fmt(rep.dev_current)} "
                       f"min_gap={_fmt(rep.min_inequality_gap)}")


def check_entropy_bound(traj: Trajectory, tol: float = 1e-6, tol_identity: float = 1e-8) -> CheckResult:
    record = entropy_decomposition(traj)
    series = {k: entropy_rate_bound_series(traj, k, record) for k in MetricKind}
    margin = min(float(np.nanmin(s.relative_margin()[1:])) for s in series.values())
    resid = max(float(np.nanmax(np.abs(s.identity_residual[1:]))) for s in series.values())
    rhs = [series[k].rhs[1:] for k in (MetricKind.SLD, MetricKind.WY, MetricKind.HM)]
    order = float(max(np.max(rhs[0] - rhs[1]), np.max(rhs[1] - rhs[2])))
    ok = margin >= -tol and resid <= tol_identity and order <= tol_identity
    return CheckResult("entropy-rate-bound", ok,
                       f"min_rel_margin={_fmt(margin)} identity_residual={_fmt(resid)} rhs_order={_fmt(order)}")


def check_uncertainty(traj: Trajectory, tol: float = 1e-9) -> CheckResult:
    worst = np.inf
    for k in MetricKind:
        g = summarize(traj, k)
        r = g.ratio
        if np.any(np.isfinite(r)):
            worst = min(worst, float(np.nanmin(r)))
    ok = not np.isfinite(worst) or worst >= 1.0 - tol
    return CheckResult("uncertainty-relation", ok, f"min_I_over_delta={_fmt(worst)}")


def check_observable_bound(traj: Trajectory, tol: float = 1e-9) -> CheckResult:
    ob = observable_speed_bound(traj, traj.lindbladian.hamiltonian)
    excess = float(np.max(ob.lhs - ob.rhs))
    return CheckResult("observable-speed-bound", excess <= tol, f"max(lhs-rhs)={_fmt(excess)}")


QUANTUM_CHECKS: List[Callable[[Trajectory], CheckResult]] = [
    check_qfi_ordering,
    check_identities,
    check_entropy_bound,
    check_uncertainty,
    check_observable_bound,
]


def run_checks(seed: int = 0, quantum_instances: int = 5, classical_instances: int = 100) -> Iterator[CheckResult]:
    """Yield every check on instances drawn from ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    yield check_classical_oracle(rng, classical_instances)
    for i in range(quantum_instances):
        traj = quantum_instance(rng)
        for fn in QUANTUM_CHECKS:
            res = fn(traj)
            yield CheckResult(f"{res.name}[{i}]", res.passed, res.detail)
