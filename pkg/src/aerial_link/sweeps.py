"""Sweep orchestration, CSV/SVG emission and analytical-vs-MC validation.

A sweep grids one or two scenario parameters, evaluates the requested
metrics per point (optionally in parallel) and collects rows in a
deterministic order. Tables serialize to CSV with a JSON metadata header
line, round-trip losslessly at full precision, and render to a simple SVG
line chart.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__ as _pkg_version
from .analysis import Method, at_altitude, coverage, area_spectral_efficiency, throughput
from .errors import AerialLinkError, ValidationError
from .geometry import AntennaConfig, AntennaMode
from .scenario import ScenarioConfig
from .simulator import estimate_coverage, estimate_throughput

_SWEEPABLE = {
    "h_u": lambda cfg, x: at_altitude(cfg, x),
    "h_b": lambda cfg, x: cfg.replace(h_b=x),
    "lambda_per_km2": lambda cfg, x: cfg.replace(lambda_per_km2=x),
    "bandwidth_hz": lambda cfg, x: cfg.replace(bandwidth_hz=x),
    "rho": lambda cfg, x: cfg.replace(rho=x),
    "sinr_threshold_db": lambda cfg, x: cfg.replace(sinr_threshold_db=x, target_rate_bps=None),
    "target_rate_bps": lambda cfg, x: cfg.replace(target_rate_bps=x, sinr_threshold_db=None),
    "tilt_deg": lambda cfg, x: cfg.replace(
        antenna=AntennaConfig(cfg.antenna.beamwidth_deg, x, AntennaMode.DIRECTIONAL)),
    "beamwidth_deg": lambda cfg, x: cfg.replace(
        antenna=AntennaConfig(x, cfg.antenna.tilt_deg, AntennaMode.DIRECTIONAL)),
}

_METRICS = ("coverage", "throughput", "ase")


@dataclass(frozen=True)
class SweepSpec:
    axis1: tuple  # (parameter name, grid values)
    axis2: tuple | None = None
    method: Method = Method.EXACT
    metrics: tuple = ("coverage",)
    mc_n: int | None = None
    mc_seed: int | None = None

    def __post_init__(self):
        for axis in (self.axis1, self.axis2):
            if axis is None:
                continue
            name, grid = axis
            if name not in _SWEEPABLE:
                raise ValidationError(f"cannot sweep {name!r}; choose from {sorted(_SWEEPABLE)}")
            vals = list(grid)
            if not vals:
                raise ValidationError(f"empty grid for {name!r}")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValidationError(f"grid for {name!r} must be strictly increasing")
        for metric in self.metrics:
            if metric not in _METRICS:
                raise ValidationError(f"unknown metric {metric!r}; choose from {_METRICS}")
        if self.method is Method.MONTE_CARLO and not self.mc_n:
            raise ValidationError("MonteCarlo sweeps need mc_n")


@dataclass
class SweepTable:
    metadata: dict
    columns: list
    rows: list  # list of lists, positionally matching columns

    def __eq__(self, other):
        return (isinstance(other, SweepTable) and self.metadata == other.metadata
                and self.columns == other.columns and self.rows == other.rows)


def _evaluate_point(cfg: ScenarioConfig, spec: SweepSpec) -> dict:
    out = {}
    for metric in spec.metrics:
        if metric == "coverage":
            if spec.method is Method.MONTE_CARLO:
                est = estimate_coverage(cfg, spec.mc_n, spec.mc_seed or 0)
                out["coverage"] = est.value
                out["coverage_std_error"] = est.std_error
            else:
                res = coverage(cfg, spec.method)
                out["coverage"] = res.p_cov
                out["coverage_quad_error"] = res.diagnostics.get("quad_error", math.nan)
        elif metric == "throughput":
            if spec.method is Method.MONTE_CARLO:
                est = estimate_throughput(cfg, spec.mc_n, spec.mc_seed or 0)
                out["throughput_bps_hz"] = est.value
                out["throughput_std_error"] = est.std_error
            else:
                out["throughput_bps_hz"] = throughput(cfg, spec.method)
        elif metric == "ase":
            out["ase_bps_hz_km2"] = area_spectral_efficiency(cfg, spec.method)
    return out


def _worker_count(n_rows: int) -> int:
    cap = os.environ.get("AERIAL_LINK_THREADS")
    workers = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(workers, n_rows))


def run_sweep(spec: SweepSpec, cfg: ScenarioConfig) -> SweepTable:
    """Evaluate the grid; row order is lexicographic over (axis1, axis2).

    A failing point does not abort the sweep: its metric cells stay empty and
    the error column records the exception.
    """
    name1, grid1 = spec.axis1
    axes = [(name1, [float(v) for v in grid1])]
    if spec.axis2 is not None:
        axes.append((spec.axis2[0], [float(v) for v in spec.axis2[1]]))
    points = []
    for v1 in axes[0][1]:
        if len(axes) == 1:
            points.append((v1,))
        else:
            points.extend((v1, v2) for v2 in axes[1][1])

    metric_cols: list = []
    for metric in spec.metrics:
        if metric == "coverage":
            metric_cols.append("coverage")
            metric_cols.append("coverage_std_error" if spec.method is Method.MONTE_CARLO
                               else "coverage_quad_error")
        elif metric == "throughput":
            metric_cols.append("throughput_bps_hz")
            if spec.method is Method.MONTE_CARLO:
                metric_cols.append("throughput_std_error")
        elif metric == "ase":
            metric_cols.append("ase_bps_hz_km2")
    columns = [name for name, _ in axes] + metric_cols + ["error"]

    def eval_row(point):
        variant = cfg
        try:
            for (name, _), val in zip(axes, point):
                variant = _SWEEPABLE[name](variant, val)
            vals = _evaluate_point(variant, spec)
            return [*point] + [vals.get(c, "") for c in metric_cols] + [""]
        except AerialLinkError as exc:
            return [*point] + ["" for _ in metric_cols] + [f"{type(exc).__name__}: {exc}"]

    workers = _worker_count(len(points))
    if workers == 1:
        rows = [eval_row(p) for p in points]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(eval_row, points))

    metadata = {
        "config": config_to_dict(cfg),
        "version": _pkg_version,
        "method": spec.method.value,
        "metrics": list(spec.metrics),
        "mc_n": spec.mc_n,
        "mc_seed": spec.mc_seed,
    }
    return SweepTable(metadata, columns, rows)


# -- config <-> dict ----------------------------------------------------------

def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = dataclasses.asdict(cfg)
    env = d.pop("env")
    d["environment"] = {"a": env["a"], "b": env["b"], "c": env["c"], "label": env["label"]}
    ant = d.pop("antenna")
    d["antenna"] = {"mode": cfg.antenna.mode.value,
                    "beamwidth_deg": ant["beamwidth_deg"], "tilt_deg": ant["tilt_deg"]}
    return d


def _format_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        return repr(v)  # shortest round-trip decimal
    return str(v)


def emit_csv(table: SweepTable, path) -> None:
    """RFC-4180-style CSV with a ``# metadata:`` JSON comment line on top."""
    import csv

    with open(path, "w", newline="") as fh:
        fh.write("# metadata: " + json.dumps(table.metadata, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_cell(v) for v in row])


def parse_csv(path) -> SweepTable:
    import csv

    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("# metadata: "):
            raise ValidationError(f"{path}: missing metadata header line")
        metadata = json.loads(header[len("# metadata: "):])
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                if cell == "":
                    row.append("")
                    continue
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
            rows.append(row)
    return SweepTable(metadata, columns, rows)


# -- SVG ----------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def emit_svg(table: SweepTable, path, y_column: str | None = None) -> None:
    """Line chart of the first metric column vs axis1, one series per axis2
    value (deterministic output: plain text SVG, fixed palette)."""
    x_col = table.columns[0]
    has_axis2 = len(table.columns) > 1 and table.columns[1] in _SWEEPABLE
    series_col = table.columns[1] if has_axis2 else None
    if y_column is None:
        candidates = [c for c in table.columns if c not in (x_col, series_col, "error")
                      and not c.endswith("_error")]
        if not candidates:
            raise ValidationError("no metric column to plot")
        y_column = candidates[0]
    xi = table.columns.index(x_col)
    yi = table.columns.index(y_column)
    si = table.columns.index(series_col) if series_col else None

    series: dict = {}
    for row in table.rows:
        if row[yi] == "" or not isinstance(row[yi], float):
            continue
        key = row[si] if si is not None else ""
        series.setdefault(key, []).append((row[xi], row[yi]))
    if not series:
        raise ValidationError("sweep produced no plottable values")

    w, h, ml, mr, mt, mb = 800, 500, 70, 20, 30, 55
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (w - ml - mr)

    def sy(y):
        return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{ml}" y1="{h - mb}" x2="{w - mr}" y2="{h - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{h - mb}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(f'<text x="{sx(xv):.1f}" y="{h - mb + 18}" font-size="12" '
                     f'text-anchor="middle">{xv:.6g}</text>')
        parts.append(f'<text x="{ml - 8}" y="{sy(yv):.1f}" font-size="12" '
                     f'text-anchor="end" dominant-baseline="middle">{yv:.6g}</text>')
    parts.append(f'<text x="{(ml + w - mr) / 2:.1f}" y="{h - 12}" font-size="14" '
                 f'text-anchor="middle">{x_col}</text>')
    parts.append(f'<text x="16" y="{(mt + h - mb) / 2:.1f}" font-size="14" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(mt + h - mb) / 2:.1f})">{y_column}</text>')
    for idx, (key, pts) in enumerate(sorted(series.items(), key=lambda kv: str(kv[0]))):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{coords}"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{color}"/>')
        if si is not None:
            parts.append(f'<text x="{w - mr - 6}" y="{mt + 16 + 16 * idx}" font-size="12" '
                         f'text-anchor="end" fill="{color}">{series_col}={key:.6g}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# -- validation report ---------------------------------------------------------

@dataclass
class ValidationRow:
    threshold_db: float
    exact: float
    los_only: float
    gamma: float
    mc: float
    mc_std_error: float
    flags: list = field(default_factory=list)


@dataclass
class ValidationReport:
    rows: list
    h_u: float
    n_realizations: int
    seed: int

    @property
    def hard_failures(self) -> list:
        return [f for row in self.rows for f in row.flags if not f.startswith("expected-deviation")]

    @property
    def max_abs_deviation(self) -> dict:
        out = {"exact": 0.0, "los_only": 0.0, "gamma": 0.0}
        for row in self.rows:
            out["exact"] = max(out["exact"], abs(row.exact - row.mc))
            out["los_only"] = max(out["los_only"], abs(row.los_only - row.mc))
            out["gamma"] = max(out["gamma"], abs(row.gamma - row.mc))
        return out


def validate(cfg: ScenarioConfig, thresholds_db, mc_n: int, seed: int,
             approx_tolerance: float = 0.03) -> ValidationReport:
    """Run all four methods over a threshold grid and compare against MC.

    The exact method must match MC within 3 standard errors at every point.
    The approximations must match within ``approx_tolerance`` only when the
    UE is above BS height; below it they are known to be invalid and their
    deviations are marked "expected-deviation" rather than failing.
    """
    from .analysis import engine_for
    from .simulator import estimate_ccdf

    thresholds_db = np.asarray(list(thresholds_db), dtype=float)
    thresholds = 10.0 ** (thresholds_db / 10.0)
    eng = engine_for(cfg)
    curve = estimate_ccdf(cfg, thresholds, mc_n, seed)
    aerial = cfg.is_aerial
    rows = []
    for tdb, t, mc, se in zip(thresholds_db, thresholds, curve.values, curve.std_errors):
        exact = eng.coverage(threshold=float(t), mode=Method.EXACT).p_cov
        los = eng.coverage(threshold=float(t), mode=Method.LOS_ONLY).p_cov
        gam = eng.coverage(threshold=float(t), mode=Method.GAMMA).p_cov
        flags = []
        # Binomial floor covers the empty-tail case where the empirical se is 0.
        se_floor = math.sqrt(max(exact * (1.0 - exact), 1e-12) / mc_n)
        if abs(exact - mc) > 3.0 * max(se, se_floor):
            flags.append(f"exact-vs-mc:{abs(exact - mc):.4f}>3se")
        for name, val in (("los-only", los), ("gamma", gam)):
            if abs(val - mc) > approx_tolerance:
                label = f"{name}-vs-mc:{abs(val - mc):.4f}>{approx_tolerance}"
                flags.append(label if aerial else "expected-deviation-" + label)
        rows.append(ValidationRow(float(tdb), exact, los, gam, float(mc), float(se), flags))
    return ValidationReport(rows, cfg.h_u, mc_n, seed)
