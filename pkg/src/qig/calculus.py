"""Finite differences and quadrature on a stored time grid."""

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ValidationError

# five-point stencils (times 12 h) for positions 0, 1 and the centre of a uniform grid
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])
_CENTRE = np.array([1.0, -8.0, 0.0, 8.0, -1.0])


def check_grid(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 1 or not np.all(np.isfinite(t)):
        raise ValidationError("time grid must be a finite 1-D sequence")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValidationError("time grid must be strictly increasing")
    return t


def is_uniform(times, rtol: float = 1e-9) -> bool:
    steps = np.diff(np.asarray(times, dtype=float))
    return steps.size > 0 and bool(np.all(np.abs(steps - steps.mean()) <= rtol * steps.mean()))


def time_derivative(values, times, order: int = 2) -> np.ndarray:
    """Central differences along axis 0.

    ``order=2`` uses the three-point stencil with one-sided second-order
    ends.  ``order=4`` uses the five-point stencil (off-centre five-point
    stencils on the two outermost samples at each end) and needs a uniform
    grid with at least five samples; otherwise it falls back to ``order=2``.
    """
    y = np.asarray(values)
    t = np.asarray(times, dtype=float)
    if y.shape[0] < 3:
        raise ValidationError("need at least three samples to differentiate")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    if order == 2 or y.shape[0] < 5 or not is_uniform(t):
        return np.gradient(y, t, axis=0, edge_order=2)
    h = (t[-1] - t[0]) / (t.size - 1)
    out = np.empty(y.shape, dtype=np.result_type(y.dtype, float))
    out[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    head = y[:5]
    tail = y[-5:][::-1]
    out[0] = np.tensordot(_EDGE0, head, axes=1) / (12.0 * h)
    out[1] = np.tensordot(_EDGE1, head, axes=1) / (12.0 * h)
    out[-1] = -np.tensordot(_EDGE0, tail, axes=1) / (12.0 * h)
    out[-2] = -np.tensordot(_EDGE1, tail, axes=1) / (12.0 * h)
    return out


def cumulative_integral(values, times) -> np.ndarray:
    """Composite trapezoid, starting from zero at the first sample."""
    return cumulative_trapezoid(np.asarray(values), np.asarray(times, dtype=float), axis=0, initial=0)
