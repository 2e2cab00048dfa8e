"""Batch benchmarking, performance profiles, and report emission.

``run_benchmark`` challenges the selected methods with a shared pool of
seeded random starts and collects one row per (method, start).  Profiles
follow the Dolan-More construction: per start, each method's measured
quantity is shifted by an offset and divided by the best method's value,
and the curve reports the fraction of starts with ratio at most tau.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BilevelDCError, EmptyTableError
from .instances import BilevelInstance, random_starts
from .penalty import Method, PenaltyParams, RunReport, run_penalty

__all__ = [
    "METRICS",
    "BenchRow",
    "BenchTable",
    "ProfileCurve",
    "run_benchmark",
    "performance_profile",
    "emit_reports",
]

METRICS = ("fval", "outer", "gap", "inner")

RESULTS_HEADER = (
    "method,start,seed,fval,outer,inner,gap,resid,terminated,wall_ms"
)
SUMMARY_HEADER = (
    "method,average_function_value,average_outer_iterations,"
    "average_duality_gap,average_inner_iterations"
)


@dataclass(frozen=True)
class BenchRow:
    method: Method
    start_index: int
    seed: int
    report: RunReport


@dataclass(frozen=True)
class BenchTable:
    """One row per (method, start); all methods share the same starts."""

    instance_name: str
    seed: int
    rows: list[BenchRow] = field(default_factory=list)

    def methods(self) -> list[Method]:
        seen = []
        for row in self.rows:
            if row.method not in seen:
                seen.append(row.method)
        return seen

    def rows_for(self, method: Method) -> list[BenchRow]:
        return [r for r in self.rows if r.method == method]


def _failed_report(method: Method, start: np.ndarray) -> RunReport:
    return RunReport(
        method=method,
        start=start,
        final_x=None,
        final_y=None,
        final_value=np.nan,
        outer_iters=0,
        total_inner_iters=0,
        final_gap=np.nan,
        stationarity_residual=np.nan,
        terminated=False,
        sigma_final=np.nan,
        wall_time=np.nan,
    )


def run_benchmark(
    instance: BilevelInstance,
    methods,
    n_runs: int,
    seed: int,
    params: PenaltyParams | None = None,
) -> BenchTable:
    """Run every method from the same ``n_runs`` seeded feasible starts.

    A run that raises a solver error is captured as a row with
    ``terminated=False`` (excluded from value averages, infinite in
    profiles) rather than aborting the batch.
    """
    methods = [Method.parse(m) for m in methods]
    ordered = [m for m in (Method.PBDC, Method.PDC, Method.PDG) if m in methods]
    starts = random_starts(instance, n_runs, seed)
    table = BenchTable(instance_name=instance.name, seed=seed)
    for method in ordered:
        for idx, start in enumerate(starts):
            try:
                report = run_penalty(instance, start, method, params)
            except BilevelDCError:
                report = _failed_report(method, start)
            table.rows.append(BenchRow(method, idx, seed, report))
    return table


@dataclass(frozen=True)
class ProfileCurve:
    """Step function ``tau -> fraction of starts with ratio <= tau``.

    ``breakpoints`` is sorted in ``tau`` with nondecreasing fractions in
    [0, 1]; the final fraction equals the method's success rate.
    """

    method: Method
    metric: str
    offset: float
    breakpoints: tuple[tuple[float, float], ...]

    def value_at(self, tau: float) -> float:
        rho = 0.0
        for t, r in self.breakpoints:
            if t <= tau:
                rho = r
            else:
                break
        return rho


_METRIC_GETTERS = {
    "fval": lambda rep: rep.final_value,
    "outer": lambda rep: float(rep.outer_iters),
    "gap": lambda rep: rep.final_gap,
    "inner": lambda rep: float(rep.total_inner_iters),
}


def performance_profile(
    table: BenchTable, metric: str, offset: float, pi_star: float
) -> list[ProfileCurve]:
    """Dolan-More style curves for one metric across the table's methods.

    Per start ``s`` and method ``a`` the shifted measure is
    ``Q = pi(run) - pi_star + offset`` for terminated runs and infinity
    otherwise; the ratio is ``Q / min_a' Q``.  ``pi_star`` should be the
    best-known value for the ``fval`` metric and zero for the others.
    Starts on which every method failed are dropped from the computation
    for all methods (the ratio is undefined there).
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if offset < 0.0:
        raise ValueError("offset must be nonnegative")
    if not table.rows:
        raise EmptyTableError("benchmark table has no rows")
    getter = _METRIC_GETTERS[metric]
    methods = table.methods()
    start_ids = sorted({r.start_index for r in table.rows})
    by_key = {(r.method, r.start_index): r.report for r in table.rows}

    q = {}
    for s in start_ids:
        for a in methods:
            rep = by_key.get((a, s))
            if rep is not None and rep.terminated:
                q[(a, s)] = getter(rep) - pi_star + offset
            else:
                q[(a, s)] = np.inf

    kept = [s for s in start_ids if any(np.isfinite(q[(a, s)]) for a in methods)]
    ratios: dict[Method, list[float]] = {a: [] for a in methods}
    for s in kept:
        best = min(q[(a, s)] for a in methods)
        for a in methods:
            val = q[(a, s)]
            if not np.isfinite(val):
                ratios[a].append(np.inf)
            elif best == 0.0:
                ratios[a].append(1.0 if val == 0.0 else np.inf)
            else:
                ratios[a].append(val / best)

    curves = []
    denom = len(kept)
    for a in methods:
        finite = sorted(r for r in ratios[a] if np.isfinite(r))
        pts: list[tuple[float, float]] = []
        if denom == 0:
            pts = [(1.0, 0.0)]
        else:
            count_at_one = sum(1 for r in finite if r <= 1.0)
            pts.append((1.0, count_at_one / denom))
            seen = count_at_one
            for r in finite:
                if r <= 1.0:
                    continue
                seen += 1
                if pts and pts[-1][0] == r:
                    pts[-1] = (r, seen / denom)
                else:
                    pts.append((r, seen / denom))
        curves.append(
            ProfileCurve(a, metric, offset, tuple(pts))
        )
    return curves


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return "nan"
    return repr(float(v))


def _results_rows(table: BenchTable) -> list[list[str]]:
    rows = []
    for r in table.rows:
        rep = r.report
        rows.append(
            [
                r.method.value,
                str(r.start_index),
                str(r.seed),
                _fmt(rep.final_value),
                str(rep.outer_iters),
                str(rep.total_inner_iters),
                _fmt(rep.final_gap),
                _fmt(rep.stationarity_residual),
                str(int(rep.terminated)),
                _fmt(rep.wall_time * 1e3 if np.isfinite(rep.wall_time) else np.nan),
            ]
        )
    return rows


def _summary_rows(table: BenchTable) -> list[list[str]]:
    rows = []
    for method in table.methods():
        reps = [r.report for r in table.rows_for(method) if r.report.terminated]
        if reps:
            rows.append(
                [
                    method.value,
                    _fmt(float(np.mean([r.final_value for r in reps]))),
                    _fmt(float(np.mean([r.outer_iters for r in reps]))),
                    _fmt(float(np.mean([r.final_gap for r in reps]))),
                    _fmt(float(np.mean([r.total_inner_iters for r in reps]))),
                ]
            )
        else:
            rows.append([method.value, "nan", "nan", "nan", "nan"])
    return rows


_SVG_COLORS = {
    Method.PBDC: "#1f77b4",
    Method.PDC: "#d62728",
    Method.PDG: "#2ca02c",
}


def _profile_svg(curves: list[ProfileCurve], metric: str, log_tau: bool) -> str:
    """Static SVG 1.1 step plot for one metric's profile curves."""
    width, height = 640, 420
    ml, mr, mt, mb = 60, 150, 30, 50
    pw, ph = width - ml - mr, height - mt - mb
    tau_max = 1.0
    for c in curves:
        finite = [t for t, _ in c.breakpoints if np.isfinite(t)]
        if finite:
            tau_max = max(tau_max, max(finite))
    tau_max = max(tau_max * 1.05, 1.5)

    def xpos(tau: float) -> float:
        if log_tau:
            span = max(np.log10(tau_max), 1e-9)
            return ml + pw * min(np.log10(max(tau, 1.0)), span) / span
        return ml + pw * (tau - 1.0) / (tau_max - 1.0)

    def ypos(rho: float) -> float:
        return mt + ph * (1.0 - rho)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="black" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = ypos(frac)
        parts.append(
            f'<line x1="{ml}" y1="{y:.2f}" x2="{ml + pw}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{ml - 8}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end">{frac:.2f}</text>'
        )
    for i in range(5):
        tau = 1.0 + (tau_max - 1.0) * i / 4 if not log_tau else 10 ** (
            np.log10(tau_max) * i / 4
        )
        x = xpos(tau)
        parts.append(
            f'<text x="{x:.2f}" y="{mt + ph + 18}" font-size="11" '
            f'text-anchor="middle">{tau:.3g}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.2f}" y="{height - 12}" font-size="12" '
        f'text-anchor="middle">performance ratio{" (log)" if log_tau else ""}</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + ph / 2:.2f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + ph / 2:.2f})">fraction of starts</text>'
    )
    parts.append(
        f'<text x="{ml + pw / 2:.2f}" y="{mt - 10}" font-size="13" '
        f'text-anchor="middle">profile: {metric}</text>'
    )
    for idx, c in enumerate(curves):
        color = _SVG_COLORS.get(c.method, "#555555")
        pts = []
        rho = 0.0
        last_x = xpos(1.0)
        pts.append((last_x, ypos(0.0)))
        for t, r in c.breakpoints:
            if not np.isfinite(t):
                continue
            x = xpos(t)
            pts.append((x, ypos(rho)))
            pts.append((x, ypos(r)))
            rho = r
        pts.append((ml + pw, ypos(rho)))
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        parts.append(
            f'<polyline points="{path}" fill="none" stroke="{color}" '
            f'stroke-width="1.8"/>'
        )
        ly = mt + 18 + 20 * idx
        parts.append(
            f'<line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 40}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{ml + pw + 46}" y="{ly + 4}" font-size="12">'
            f"{c.method.value}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_reports(
    table: BenchTable,
    curves: list[ProfileCurve],
    out_dir: str | Path,
    *,
    log_tau: bool = False,
) -> list[Path]:
    """Write ``results.csv``, ``summary.csv`` and one SVG per metric.

    Output bytes are a deterministic function of the inputs; re-emitting
    the same table produces identical files.  With no curves, no SVG is
    written (a note is printed instead).  Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def write_csv(name: str, header: str, rows: list[list[str]]) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header.split(","))
        writer.writerows(rows)
        path = out / name
        path.write_text(buf.getvalue())
        return path

    written.append(write_csv("results.csv", RESULTS_HEADER, _results_rows(table)))
    written.append(write_csv("summary.csv", SUMMARY_HEADER, _summary_rows(table)))

    by_metric: dict[str, list[ProfileCurve]] = {}
    for c in curves:
        by_metric.setdefault(c.metric, []).append(c)
    if not by_metric:
        print("no profile curves supplied; skipping SVG output")
    for metric in sorted(by_metric):
        path = out / f"profile_{metric}.svg"
        path.write_text(_profile_svg(by_metric[metric], metric, log_tau))
        written.append(path)
    return written
