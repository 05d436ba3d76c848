"""Reference table/figure reproduction presets for the CLI.

Each builder returns a SweepTable ready for CSV/SVG emission. The base
scenario passed in supplies channel constants and deployment defaults; each
preset pins the axes the corresponding study varies.
"""

from __future__ import annotations

import numpy as np

from ._version import __version__
from .analysis import Method, coverage, engine_for, optimize_parameter, throughput, \
    area_spectral_efficiency
from .errors import ValidationError
from .geometry import AntennaConfig, AntennaMode
from .scenario import ENVIRONMENT_PRESETS, ScenarioConfig
from .simulator import estimate_ccdf
from .sweeps import SweepTable, config_to_dict


def _meta(cfg: ScenarioConfig, target: str, **extra) -> dict:
    meta = {"config": config_to_dict(cfg), "version": __version__, "target": target}
    meta.update(extra)
    return meta


def _table2(cfg: ScenarioConfig, **_) -> SweepTable:
    """Link coverage of an omnidirectional UE: altitude x bandwidth grid,
    suburban and urban columns."""
    rows = []
    for h_u in (1.5, 50.0, 100.0, 150.0):
        for bw in (200e3, 400e3):
            row = [h_u, bw / 1e3]
            for env_name in ("suburban", "urban"):
                variant = cfg.replace(env=ENVIRONMENT_PRESETS[env_name], h_u=h_u,
                                      bandwidth_hz=bw, antenna=AntennaConfig())
                row.append(coverage(variant).p_cov)
            rows.append(row + [""])
    rows.sort(key=lambda r: (r[1], r[0]))  # bandwidth-major, matching the reference layout
    return SweepTable(_meta(cfg, "table2"),
                      ["h_u", "bandwidth_khz", "coverage_suburban", "coverage_urban", "error"],
                      rows)


def _fig3(cfg: ScenarioConfig, mc_n: int = 100_000, seed: int = 0) -> SweepTable:
    """SINR CCDF at ground level and at altitude: all methods plus MC."""
    t_db = np.linspace(-10.0, 20.0, 13)
    thresholds = 10.0 ** (t_db / 10.0)
    columns = ["sinr_threshold_db"]
    series = {}
    for h_u in (1.5, 100.0):
        variant = cfg.replace(h_u=h_u, antenna=AntennaConfig())
        eng = engine_for(variant)
        curve = estimate_ccdf(variant, thresholds, mc_n, seed)
        tag = f"h{h_u:g}"
        series[f"exact_{tag}"] = [eng.coverage(threshold=float(t)).p_cov for t in thresholds]
        series[f"los_only_{tag}"] = [
            eng.coverage(threshold=float(t), mode=Method.LOS_ONLY).p_cov for t in thresholds]
        series[f"gamma_{tag}"] = [
            eng.coverage(threshold=float(t), mode=Method.GAMMA).p_cov for t in thresholds]
        series[f"mc_{tag}"] = list(curve.values)
        series[f"mc_se_{tag}"] = list(curve.std_errors)
        columns += [f"exact_{tag}", f"los_only_{tag}", f"gamma_{tag}", f"mc_{tag}", f"mc_se_{tag}"]
    rows = []
    for i, tdb in enumerate(t_db):
        rows.append([float(tdb)] + [series[c][i] for c in columns[1:]] + [""])
    return SweepTable(_meta(cfg, "fig3", mc_n=mc_n, seed=seed), columns + ["error"], rows)


def _fig4(cfg: ScenarioConfig, **_) -> SweepTable:
    """Throughput vs altitude for an omnidirectional UE, urban and suburban."""
    alts = [1.5, 5.0, 10.0, 20.0, 50.0, 100.0]
    rows = []
    for h_u in alts:
        row = [h_u]
        for env_name in ("urban", "suburban"):
            variant = cfg.replace(env=ENVIRONMENT_PRESETS[env_name], h_u=h_u,
                                  antenna=AntennaConfig())
            row.append(throughput(variant))
        rows.append(row + [""])
    return SweepTable(_meta(cfg, "fig4"),
                      ["h_u", "throughput_urban_bps_hz", "throughput_suburban_bps_hz", "error"],
                      rows)


def _fig5(cfg: ScenarioConfig, **_) -> SweepTable:
    """Coverage and throughput vs UAV beamwidth (untilted) at two altitudes."""
    beams = [20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0]
    rows = []
    for h_u in (50.0, 100.0):
        for b in beams:
            variant = cfg.replace(h_u=h_u,
                                  antenna=AntennaConfig(b, 0.0, AntennaMode.DIRECTIONAL))
            rows.append([b, h_u, coverage(variant).p_cov, throughput(variant), ""])
    return SweepTable(_meta(cfg, "fig5"),
                      ["beamwidth_deg", "h_u", "coverage", "throughput_bps_hz", "error"], rows)


def _fig6(cfg: ScenarioConfig, **_) -> SweepTable:
    """Coverage and throughput vs antenna tilt for a sparse and a dense network."""
    tilts = list(np.arange(0.0, 61.0, 5.0))
    beam = cfg.antenna.beamwidth_deg if cfg.antenna.is_directional else 60.0
    rows = []
    for lam in (5.0, 50.0):
        for tilt in tilts:
            variant = cfg.replace(lambda_per_km2=lam,
                                  antenna=AntennaConfig(beam, tilt, AntennaMode.DIRECTIONAL))
            rows.append([tilt, lam, coverage(variant).p_cov, throughput(variant), ""])
    return SweepTable(_meta(cfg, "fig6", beamwidth_deg=beam),
                      ["tilt_deg", "lambda_per_km2", "coverage", "throughput_bps_hz", "error"],
                      rows)


_DENSITY_GRID = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0]
_TILT_GRID = list(np.arange(0.0, 61.0, 5.0))


def _best_tilt_throughput(cfg: ScenarioConfig) -> tuple[float, float]:
    beam = cfg.antenna.beamwidth_deg if cfg.antenna.is_directional else 60.0
    base = cfg.replace(antenna=AntennaConfig(beam, 0.0, AntennaMode.DIRECTIONAL))
    return optimize_parameter(base, "tilt", _TILT_GRID, "throughput")


def _fig8(cfg: ScenarioConfig, **_) -> SweepTable:
    """Tilt-optimized UAV throughput vs BS density, with the ground reference."""
    rows = []
    for lam in _DENSITY_GRID:
        dense = cfg.replace(lambda_per_km2=lam)
        ground = throughput(dense.ground_variant())
        for h_u in (50.0, 100.0):
            tilt, rate = _best_tilt_throughput(dense.replace(h_u=h_u))
            rows.append([lam, h_u, tilt, rate, ground, ""])
    return SweepTable(_meta(cfg, "fig8"),
                      ["lambda_per_km2", "h_u", "best_tilt_deg", "throughput_bps_hz",
                       "ground_throughput_bps_hz", "error"], rows)


def _fig9(cfg: ScenarioConfig, **_) -> SweepTable:
    """Area spectral efficiency vs BS density for several aerial fractions,
    with the UAV tilt re-optimized at every density."""
    rows = []
    for lam in _DENSITY_GRID:
        dense = cfg.replace(lambda_per_km2=lam)
        ground_rate = throughput(dense.ground_variant())
        tilt, aerial_rate = _best_tilt_throughput(dense)
        for rho in (0.0, 0.5, 1.0):
            ase = lam * ((1.0 - rho) * ground_rate + rho * aerial_rate)
            rows.append([lam, rho, tilt, ase, ""])
    return SweepTable(_meta(cfg, "fig9"),
                      ["lambda_per_km2", "rho", "best_tilt_deg", "ase_bps_hz_km2", "error"], rows)


_BUILDERS = {
    "table2": _table2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig8": _fig8,
    "fig9": _fig9,
}


def build(target: str, cfg: ScenarioConfig, mc_n: int = 100_000, seed: int = 0) -> SweepTable:
    if target not in _BUILDERS:
        raise ValidationError(f"unknown repro target {target!r}; choose from {sorted(_BUILDERS)}")
    if target == "fig3":
        return _BUILDERS[target](cfg, mc_n=mc_n, seed=seed)
    return _BUILDERS[target](cfg)
