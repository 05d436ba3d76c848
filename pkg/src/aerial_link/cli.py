"""``aerial-link``: scenario evaluation, sweeps and figure reproduction.

Scenario files are JSON; unspecified fields fall back to the built-in urban
default deployment. ``--set key=value`` overrides single fields with dotted
paths (``--set antenna.tilt_deg=20``). Exit codes: 0 success, 2 scenario
parse error, 3 validation error, 4 quadrature failure, 5 validation flags.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ._version import __version__
from .analysis import Method, coverage, throughput, area_spectral_efficiency, tier_select
from .errors import AerialLinkError, ParseError, QuadratureFailure, ValidationError
from .geometry import AntennaConfig, AntennaMode
from .scenario import ENVIRONMENT_PRESETS, ScenarioConfig
from .channel import Environment
from .simulator import estimate_coverage, estimate_throughput
from .sweeps import SweepSpec, SweepTable, emit_csv, emit_svg, run_sweep, validate

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_QUADRATURE = 4
EXIT_VALIDATE_FLAG = 5

_METHODS = {
    "exact": Method.EXACT,
    "los-only": Method.LOS_ONLY,
    "gamma": Method.GAMMA,
    "mc": Method.MONTE_CARLO,
}

_SCALAR_FIELDS = {
    "alpha_l", "alpha_n", "a_l_db", "a_n_db", "m_l", "m_n", "p_tx_dbm",
    "g_mainlobe", "g_sidelobe", "noise_dbm", "lambda_per_km2", "h_b", "h_u",
    "bandwidth_hz", "target_rate_bps", "sinr_threshold_db", "rho",
    "quad_rtol", "gcq_nodes", "trunc_tail_fraction", "trunc_ceiling_m",
}


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from a (possibly partial) JSON object."""
    if not isinstance(data, dict):
        raise ValidationError(f"scenario root must be an object, got {type(data).__name__}")
    kwargs = {}
    for key, value in data.items():
        if key in _SCALAR_FIELDS:
            kwargs[key] = value
        elif key == "environment":
            kwargs["env"] = _parse_environment(value)
        elif key == "antenna":
            kwargs["antenna"] = _parse_antenna(value)
        else:
            raise ValidationError(f"unknown scenario field {key!r}")
    if "target_rate_bps" in kwargs and "sinr_threshold_db" not in kwargs:
        kwargs.setdefault("sinr_threshold_db", None)
    if "sinr_threshold_db" in kwargs and kwargs["sinr_threshold_db"] is not None:
        kwargs.setdefault("target_rate_bps", None)
    for field in ("m_l", "m_n", "gcq_nodes"):
        if kwargs.get(field) is not None:
            kwargs[field] = int(kwargs[field])
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def _parse_environment(value) -> Environment:
    if isinstance(value, str):
        if value not in ENVIRONMENT_PRESETS:
            raise ValidationError(
                f"unknown environment preset {value!r}; presets: {sorted(ENVIRONMENT_PRESETS)}")
        return ENVIRONMENT_PRESETS[value]
    if isinstance(value, dict):
        try:
            return Environment(a=value["a"], b=value["b"], c=value["c"],
                               label=value.get("label", "custom"))
        except KeyError as exc:
            raise ValidationError(f"environment object needs keys a, b, c (missing {exc})")
    raise ValidationError("environment must be a preset name or an {a, b, c} object")


def _parse_antenna(value) -> AntennaConfig:
    if not isinstance(value, dict):
        raise ValidationError("antenna must be an object with a 'mode' key")
    mode = value.get("mode", "omni")
    if mode in ("omni", "omnidirectional"):
        return AntennaConfig()
    if mode == "directional":
        try:
            return AntennaConfig(float(value["beamwidth_deg"]), float(value.get("tilt_deg", 0.0)),
                                 AntennaMode.DIRECTIONAL)
        except KeyError:
            raise ValidationError("directional antenna needs beamwidth_deg")
    raise ValidationError(f"unknown antenna mode {mode!r}")


def load_scenario(path: str) -> ScenarioConfig:
    """Parse a JSON scenario file; missing fields fall back to the defaults."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def _apply_overrides(data: dict, pairs) -> dict:
    for pair in pairs or ():
        if "=" not in pair:
            raise ValidationError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"--set path {key!r} crosses a non-object field")
        node[parts[-1]] = value
    return data


def _scenario_from_args(args) -> ScenarioConfig:
    data = {}
    if getattr(args, "scenario", None):
        try:
            with open(args.scenario) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ParseError(f"{args.scenario}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.scenario}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    data = _apply_overrides(data, getattr(args, "set", None))
    return scenario_from_dict(data)


def _add_common(parser):
    parser.add_argument("--scenario", help="JSON scenario file (defaults apply to missing fields)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a scenario field (dotted path, repeatable)")


def _add_method(parser):
    parser.add_argument("--method", choices=sorted(_METHODS), default="exact")
    parser.add_argument("--mc-n", type=int, default=None, help="Monte Carlo realizations")
    parser.add_argument("--seed", type=int, default=0, help="Monte Carlo base seed")


def _parse_grid(text: str):
    """start:stop:count (inclusive linspace) or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid {text!r} must be start:stop:count or v1,v2,...")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(v) for v in text.split(",")]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerial-link",
        description="Coverage, throughput and area spectral efficiency of aerial and "
                    "ground users in a Poisson cellular network.",
    )
    parser.add_argument("--version", action="version", version=f"aerial-link {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("coverage", "coverage probability of the configured link"),
                            ("throughput", "achievable throughput (b/s/Hz)"),
                            ("ase", "area spectral efficiency (b/s/Hz/km^2)")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_method(p)

    p = sub.add_parser("sweep", help="grid one or two parameters and emit CSV/SVG")
    _add_common(p)
    _add_method(p)
    p.add_argument("--axis1", required=True, metavar="NAME=GRID",
                   help="e.g. h_u=1.5,10,50,100 or tilt_deg=0:60:13")
    p.add_argument("--axis2", metavar="NAME=GRID")
    p.add_argument("--metrics", default="coverage",
                   help="comma list from coverage,throughput,ase")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", help="optional SVG chart path")

    p = sub.add_parser("tier", help="pick the better of two BS tiers per altitude")
    p.add_argument("--macro", required=True, help="macro-tier scenario JSON")
    p.add_argument("--micro", required=True, help="micro-tier scenario JSON")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override applied to both tiers")
    p.add_argument("--altitudes", default="0:300:31", help="altitude grid (start:stop:count)")
    p.add_argument("--objective", choices=["coverage", "throughput"], default="coverage")
    p.add_argument("--out", help="output CSV path")

    p = sub.add_parser("validate", help="check the analytical methods against Monte Carlo")
    _add_common(p)
    p.add_argument("--thresholds-db", default="-10:20:13", help="SINR threshold grid in dB")
    p.add_argument("--mc-n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("repro", help="reproduce a reference table/figure as CSV (+SVG)")
    p.add_argument("target", choices=["table2", "fig3", "fig4", "fig5", "fig6", "fig8", "fig9"])
    _add_common(p)
    p.add_argument("--mc-n", type=int, default=100_000, help="realizations (fig3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: <target>.csv)")
    p.add_argument("--svg", help="optional SVG chart path")
    return parser


def _point_metric(args, cfg: ScenarioConfig, metric: str) -> None:
    method = _METHODS[args.method]
    if method is Method.MONTE_CARLO:
        if not args.mc_n:
            raise ValidationError("--method mc needs --mc-n")
        if metric == "coverage":
            est = estimate_coverage(cfg, args.mc_n, args.seed)
        elif metric == "throughput":
            est = estimate_throughput(cfg, args.mc_n, args.seed)
        else:
            raise ValidationError("ase has no direct Monte Carlo estimator; use --method exact")
        unit = "" if metric == "coverage" else " b/s/Hz"
        print(f"{metric} = {est.value:.6f} +/- {est.std_error:.6f}{unit} "
              f"(mc, n={est.n_realizations}, seed={est.seed})")
        return
    if metric == "coverage":
        res = coverage(cfg, method)
        print(f"coverage = {res.p_cov:.6f} ({method.value}, "
              f"quad_error={res.diagnostics.get('quad_error', 0.0):.2e})")
    elif metric == "throughput":
        print(f"throughput = {throughput(cfg, method):.6f} b/s/Hz ({method.value})")
    else:
        print(f"ase = {area_spectral_efficiency(cfg, method):.6f} b/s/Hz/km^2 ({method.value})")


def _cmd_sweep(args) -> int:
    cfg = _scenario_from_args(args)
    name1, grid1 = args.axis1.split("=", 1)
    axis1 = (name1, _parse_grid(grid1))
    axis2 = None
    if args.axis2:
        name2, grid2 = args.axis2.split("=", 1)
        axis2 = (name2, _parse_grid(grid2))
    spec = SweepSpec(
        axis1=axis1, axis2=axis2, method=_METHODS[args.method],
        metrics=tuple(m.strip() for m in args.metrics.split(",") if m.strip()),
        mc_n=args.mc_n, mc_seed=args.seed,
    )
    table = run_sweep(spec, cfg)
    emit_csv(table, args.out)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    if args.svg:
        emit_svg(table, args.svg)
        print(f"wrote chart to {args.svg}")
    return EXIT_OK


def _cmd_tier(args) -> int:
    macro = load_scenario(args.macro)
    micro = load_scenario(args.micro)
    if args.set:
        macro = scenario_from_dict(_apply_overrides(
            json.loads(json.dumps(_config_json(macro))), args.set))
        micro = scenario_from_dict(_apply_overrides(
            json.loads(json.dumps(_config_json(micro))), args.set))
    alts = _parse_grid(args.altitudes)
    sel = tier_select(macro, micro, alts, args.objective)
    for h, mv, uv, best in zip(sel.altitudes, sel.macro_values, sel.micro_values, sel.best):
        print(f"h_u={h:8.2f} m  macro={mv:.6f}  micro={uv:.6f}  best={best}")
    if sel.crossover is None:
        print("no tier crossover on this grid")
    else:
        print(f"first crossover at h_u = {sel.crossover:.2f} m "
              f"(all switches: {', '.join(f'{c:.2f}' for c in sel.crossovers)})")
    if args.out:
        table = SweepTable(
            {"macro": _config_json(macro), "micro": _config_json(micro),
             "objective": args.objective, "version": __version__},
            ["h_u", f"macro_{args.objective}", f"micro_{args.objective}", "best", "error"],
            [[float(h), float(mv), float(uv), best, ""]
             for h, mv, uv, best in zip(sel.altitudes, sel.macro_values,
                                        sel.micro_values, sel.best)],
        )
        emit_csv(table, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _config_json(cfg: ScenarioConfig) -> dict:
    from .sweeps import config_to_dict

    return config_to_dict(cfg)


def _cmd_validate(args) -> int:
    cfg = _scenario_from_args(args)
    report = validate(cfg, _parse_grid(args.thresholds_db), args.mc_n, args.seed)
    print(f"h_u = {report.h_u} m, n = {report.n_realizations}, seed = {report.seed}")
    print(f"{'T[dB]':>8} {'exact':>8} {'los-only':>9} {'gamma':>8} "
          f"{'mc':>8} {'mc_se':>8}  flags")
    for row in report.rows:
        print(f"{row.threshold_db:8.2f} {row.exact:8.4f} {row.los_only:9.4f} "
              f"{row.gamma:8.4f} {row.mc:8.4f} {row.mc_std_error:8.4f}  "
              f"{'; '.join(row.flags) if row.flags else '-'}")
    dev = report.max_abs_deviation
    print(f"max |deviation| from MC: exact={dev['exact']:.4f} "
          f"los-only={dev['los_only']:.4f} gamma={dev['gamma']:.4f}")
    if report.hard_failures:
        print(f"FLAGGED: {len(report.hard_failures)} violation(s)")
        return EXIT_VALIDATE_FLAG
    print("all methods within bounds")
    return EXIT_OK


def _cmd_repro(args) -> int:
    from . import repro

    out = args.out or f"{args.target}.csv"
    table = repro.build(args.target, _scenario_from_args(args), mc_n=args.mc_n, seed=args.seed)
    emit_csv(table, out)
    print(f"wrote {out}")
    if args.svg:
        emit_svg(table, args.svg)
        print(f"wrote chart to {args.svg}")
    return EXIT_OK


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command in ("coverage", "throughput", "ase"):
            cfg = _scenario_from_args(args)
            _point_metric(args, cfg, args.command)
            return EXIT_OK
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "tier":
            return _cmd_tier(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "repro":
            return _cmd_repro(args)
        raise AerialLinkError(f"unhandled command {args.command}")
    except ParseError as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error (validation): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except QuadratureFailure as exc:
        print(f"error (quadrature): {exc}", file=sys.stderr)
        return EXIT_QUADRATURE


if __name__ == "__main__":
    sys.exit(main())
