"""Deterministic CSV tables, run summaries and minimal SVG line charts."""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .geometry import MetricKind
from .mpemba import ExperimentBundle, StateRun

logger = logging.getLogger(__name__)

Table = Dict[str, np.ndarray]


def format_float(x) -> str:
    """Shortest decimal that round-trips to the same double; ``nan``/``inf`` spelled out."""
    return repr(float(x))


def write_table(path, columns: Mapping[str, Sequence[float]]) -> Path:
    """UTF-8 CSV with a header row; all columns must have the same length."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n], dtype=float).ravel() for n in names]
    lengths = {c.size for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow([format_float(v) for v in row])
    logger.info("wrote %s", path)
    return path


def read_table(path) -> Tuple[List[str], np.ndarray]:
    """Parse a CSV written by :func:`write_table` into a header and a float array (rows x cols)."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0]:
        raise ValidationError(f"{path}: missing header row")
    header = rows[0]
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise ValidationError(f"{path}:{i + 2}: expected {len(header)} fields, got {len(row)}")
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise ValidationError(f"{path}:{i + 2}: {exc}") from exc
    return header, data


def state_columns(run: StateRun, metrics: Optional[Sequence[MetricKind]] = None) -> Table:
    """Per-sample geometry and thermodynamics of one trajectory in the fixed column order.

    ``bound_lhs`` and ``bound_rhs`` refer to the first listed metric.
    """
    kinds = [MetricKind.parse(m) for m in (metrics or run.geometry)]
    if not kinds:
        raise ValidationError("at least one metric is required")
    geo = run.geometry
    first = kinds[0]
    cols: Table = {"t": run.times}
    for k in kinds:
        cols[f"F_Q_{k.value}"] = geo[k].fisher
    cols["F_IC"] = geo[first].incoherent
    for k in kinds:
        cols[f"F_C_{k.value}"] = geo[k].coherent
    ent = run.entropy
    cols.update(S=ent.entropy, Sdot=ent.rate, sigma=ent.production, Phi=ent.flow)
    for prefix, attr in (("L", "length"), ("R", "completion"), ("delta", "delta"), ("I", "mean_fisher")):
        for k in kinds:
            cols[f"{prefix}_{k.value}"] = getattr(geo[k], attr)
    cols["F_neq"] = run.free_energy
    cols["heat_current"] = run.heat
    cols["bound_lhs"] = run.bounds[first].lhs
    cols["bound_rhs"] = run.bounds[first].rhs
    return cols


def write_csv(run: StateRun, path, metrics: Optional[Sequence[MetricKind]] = None) -> Path:
    return write_table(path, state_columns(run, metrics))


def trajectory_columns(run: StateRun) -> Table:
    """Time, the instantaneous spectrum and every density-matrix entry (real and imaginary parts)."""
    traj = run.trajectory
    d = traj.states.shape[-1]
    cols: Table = {"t": traj.times}
    for x in range(d):
        cols[f"p_{x}"] = traj.probs[:, x]
    for a in range(d):
        for b in range(d):
            cols[f"re_rho_{a}{b}"] = traj.states[:, a, b].real
            cols[f"im_rho_{a}{b}"] = traj.states[:, a, b].imag
    return cols


def _paired(bundle: ExperimentBundle, build) -> Table:
    cols: Table = {"t": bundle.times}
    for tag, run in (("ref", bundle.reference), ("rot", bundle.rotated)):
        for name, values in build(run):
            cols[f"{tag}_{name}"] = values
    return cols


def figure_tables(bundle: ExperimentBundle) -> Dict[str, Table]:
    kinds = bundle.metrics

    def fig1(run):
        for k in kinds:
            yield f"F_Q_{k.value}", run.geometry[k].fisher
        yield "F_IC", run.geometry[kinds[0]].incoherent
        for k in kinds:
            yield f"F_C_{k.value}", run.geometry[k].coherent

    def fig2(run):
        for k in kinds:
            yield f"L_{k.value}", run.geometry[k].length
        for k in kinds:
            yield f"R_{k.value}", run.geometry[k].completion
        for k, g in run.geodesic_from_start.items():
            yield f"Lgeo_{k.value}", g

    def fig3(run):
        yield "obs_lhs", run.observable.lhs
        yield "obs_rhs", run.observable.rhs
        yield "obs_speed", run.observable.speed_ratio

    def fig4(run):
        for k in kinds:
            yield f"delta_{k.value}", run.geometry[k].delta
        for k in kinds:
            yield f"I_{k.value}", run.geometry[k].mean_fisher
        for k in kinds:
            yield f"ratio_{k.value}", run.geometry[k].ratio

    def fneq(run):
        yield "F_neq", run.free_energy
        yield "F_excess", run.excess_free_energy

    return {name: _paired(bundle, fn) for name, fn in
            (("fig1", fig1), ("fig2", fig2), ("fig3", fig3), ("fig4", fig4), ("fneq", fneq))}


def summary_lines(bundle: ExperimentBundle) -> List[str]:
    s = bundle.scenario
    c = bundle.crossing
    t_m = format_float(c.t_m) if c.t_m is not None else "none"
    lines = [
        f"scenario: epsilon={format_float(s.epsilon)} temperature={format_float(s.temperature)} "
        f"gamma={format_float(s.gamma)} horizon={format_float(s.horizon)} dt={format_float(s.dt)}",
        f"crossing: t_M={t_m} persistent={c.persistent}",
    ]
    for tag, run in (("reference", bundle.reference), ("rotated", bundle.rotated)):
        for k in bundle.metrics:
            lines.append(
                f"L_inf[{tag},{k.value}]={format_float(run.l_infinity(k))} "
                f"convergence={format_float(run.length_convergence[k])}"
            )
        for k, v in run.geodesic_to_thermal.items():
            lines.append(f"L_geo_thermal[{tag},{k.value}]={format_float(v)}")
        for k in bundle.metrics:
            rel = run.bounds[k].relative_margin()[1:]
            lines.append(f"bound_margin[{tag},{k.value}]: min_relative={format_float(np.nanmin(rel))}")
        ids = run.identities
        lines.append(
            f"identities[{tag}]: dev_acceleration={format_float(ids.dev_acceleration)} "
            f"dev_current={format_float(ids.dev_current)}"
        )
    for name, fit in bundle.decay_fits.items():
        lines.append(
            f"decay_rate[{name}]={format_float(fit.rate)} window=[{format_float(fit.window[0])}, "
            f"{format_float(fit.window[1])}] shrunk={fit.shrunk}"
        )
    lines.append(f"relaxation_rate={format_float(s.relaxation_rate)}")
    return lines


def write_mpemba(bundle: ExperimentBundle, outdir, emit_svg: bool = False) -> List[Path]:
    outdir = Path(outdir)
    written = []
    for name, table in figure_tables(bundle).items():
        written.append(write_table(outdir / f"{name}.csv", table))
    written.append(write_csv(bundle.reference, outdir / "reference.csv", bundle.metrics))
    written.append(write_csv(bundle.rotated, outdir / "rotated.csv", bundle.metrics))
    summary = outdir / "summary.txt"
    summary.write_text("\n".join(summary_lines(bundle)) + "\n", encoding="utf-8")
    written.append(summary)
    if emit_svg:
        for p in [p for p in written if p.suffix == ".csv"]:
            written.append(write_svg(p))
    return written


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
            "#bcbd22", "#17becf")


def _segments(xs: np.ndarray, ys: np.ndarray):
    """Runs of consecutive finite points."""
    ok = np.isfinite(xs) & np.isfinite(ys)
    start = None
    for i, good in enumerate(np.append(ok, False)):
        if good and start is None:
            start = i
        elif not good and start is not None:
            yield slice(start, i)
            start = None


def render_svg(header: Sequence[str], data: np.ndarray, title: str = "",
               width: int = 720, height: int = 420) -> str:
    """Line chart of every column against the first one (polyline, axes, legend)."""
    left, right, top, bottom = 70, 180, 30, 40
    pw, ph = width - left - right, height - top - bottom
    x = data[:, 0] if data.size else np.empty(0)
    ys = data[:, 1:] if data.size else np.empty((0, max(len(header) - 1, 0)))
    finite_x = x[np.isfinite(x)]
    finite_y = ys[np.isfinite(ys)]
    x0, x1 = (float(finite_x.min()), float(finite_x.max())) if finite_x.size else (0.0, 1.0)
    y0, y1 = (float(finite_y.min()), float(finite_y.max())) if finite_y.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" font-size="13">{_escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left}" y="{top + ph + 16}" text-anchor="middle">{_num(x0)}</text>',
        f'<text x="{left + pw}" y="{top + ph + 16}" text-anchor="middle">{_num(x1)}</text>',
        f'<text x="{left + pw / 2:.2f}" y="{top + ph + 32}" text-anchor="middle">{_escape(header[0] if header else "")}</text>',
        f'<text x="{left - 6}" y="{top + ph}" text-anchor="end">{_num(y0)}</text>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end">{_num(y1)}</text>',
    ]
    for j, name in enumerate(header[1:]):
        colour = _PALETTE[j % len(_PALETTE)]
        col = ys[:, j]
        for seg in _segments(x, col):
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[seg], col[seg]))
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 12 + 16 * j
        out.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly}">{_escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _num(v: float) -> str:
    return f"{v:.4g}" if math.isfinite(v) else str(v)


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(csv_path, svg_path=None) -> Path:
    csv_path = Path(csv_path)
    header, data = read_table(csv_path)
    svg_path = Path(svg_path) if svg_path is not None else csv_path.with_suffix(".svg")
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text(render_svg(header, data, title=csv_path.name), encoding="utf-8")
    logger.info("wrote %s", svg_path)
    return svg_path
