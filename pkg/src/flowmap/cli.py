"""Command-line front end.

Subcommands: derive-map, fixed-points, pseudothreshold, trip, tifd,
threshold-set, axis-bound, mc-trip, trajectory.  Artifacts are CSV or JSON
with a provenance header carrying the exact run configuration and the map
content hash; re-running a command with the same configuration reproduces
the artifact byte for byte.  ``--svg`` renders the matching figure next to
the data file.

Exit status: 0 on success, 1 on input errors, 2 on solver non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis
from . import settings as settings_mod
from .analysis import ScanGrid, SliceSpec
from .errors import (
    FlowmapError,
    FlowMapParseError,
    NoPseudothresholdError,
    NonConvergenceError,
    SettingError,
)
from .io import content_hash, load_flowmap, serialize_flowmap
from .maps import uv_example_map
from .poly import FailureVector, FlowMap
from .tmr import tmr_flow_map

#: invalid input (bad flag, unreadable file, schema violation)
EXIT_INPUT = 1
#: a solver failed to find or converge on a requested quantity
EXIT_SOLVER = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def _parse_grid(text: str, default_log: bool = False) -> ScanGrid:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"grid must be lo:hi:n[:log], got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    log = default_log
    if len(parts) == 4:
        if parts[3] not in ("log", "lin"):
            raise ValueError(f"grid scale must be 'log' or 'lin', got {parts[3]!r}")
        log = parts[3] == "log"
    if n < 2 or hi <= lo:
        raise ValueError(f"grid needs hi > lo and n >= 2, got {text!r}")
    return ScanGrid(lo, hi, n, log)


def _parse_assignments(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"expected name=value, got {item!r}")
        name, value = item.split("=", 1)
        out[name.strip()] = float(value)
    return out


def _resolve_map(source: str) -> tuple[FlowMap, str]:
    if source == "builtin:tmr":
        f = tmr_flow_map()
    elif source == "builtin:uv-example":
        f = uv_example_map()
    elif source.startswith("file:"):
        f = load_flowmap(source.split(":", 1)[1])
    elif source.startswith("mc:"):
        raise ValueError(f"source {source!r} is Monte-Carlo only; use the mc-trip subcommand")
    else:
        raise ValueError(
            f"unknown source {source!r} (builtin:tmr, builtin:uv-example, file:<path>, mc:steane)"
        )
    return f, content_hash(f)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("FLOWMAP_THREADS")
    return max(1, int(env)) if env else 1


def _config(args) -> dict:
    skip = {"func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    cfg["version"] = __version__
    return cfg


def _header_lines(args, extra: dict | None = None) -> list[str]:
    cfg = _config(args)
    lines = [f"# flowmap {__version__} {args.command}", f"# config: {json.dumps(cfg, sort_keys=True)}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    return lines


def _out_path(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def _write_csv(path: Path, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {path}")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")


def _figure_path(path: Path) -> Path:
    return path.with_suffix(".svg")


def _save_figure(fig, path: Path) -> None:
    from . import plots

    plots.save_figure(fig, path)
    print(f"wrote {path}")


# ----------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------


def cmd_derive_map(args) -> int:
    f, map_hash = _resolve_map(args.source)
    doc = json.loads(serialize_flowmap(f))
    doc["provenance"] = {"config": _config(args), "map_hash": map_hash}
    path = _out_path(args, "flowmap.json")
    _write_json(path, doc)
    print(f"map {map_hash[:16]} variables={','.join(sorted(f.variables))}")
    return 0


def cmd_fixed_points(args) -> int:
    f, map_hash = _resolve_map(args.source)
    points = analysis.fixed_points(f, seeds_per_axis=args.seeds_per_axis)
    path = _out_path(args, "fixed_points.json")
    _write_json(
        path,
        {
            "provenance": {"config": _config(args), "map_hash": map_hash},
            "fixed_points": [p.as_dict() for p in points],
        },
    )
    for p in points:
        print("  " + "  ".join(f"{v}={p[v]:.9g}" for v in f.variables))
    return 0


def cmd_pseudothreshold(args) -> int:
    f, map_hash = _resolve_map(args.source)
    g = settings_mod.resolve(args.setting, f.variables)
    scan = _parse_grid(args.grid) if args.grid else ScanGrid()
    result = analysis.pseudothreshold(f, args.location, g, args.level, scan)
    path = _out_path(args, "pseudothreshold.json")
    _write_json(
        path,
        {
            "provenance": {"config": _config(args), "map_hash": map_hash},
            "location": result.location,
            "level": result.level,
            "setting": result.setting,
            "value": result.value,
            "bracket": list(result.bracket),
            "residual": result.residual,
            "touched_scan_bound": result.touched_scan_bound,
        },
    )
    print(f"pseudothreshold[{args.location}, L={args.level}, {g.name}] = {result.value:.9g}")
    if result.touched_scan_bound:
        print("note: bracket touches the scan bound; the least root may lie beyond it")
    return 0


def cmd_trip(args) -> int:
    f, map_hash = _resolve_map(args.source)
    g = settings_mod.resolve(args.setting, f.variables)
    levels = [int(x) for x in args.levels.split(",")]
    grid = _parse_grid(args.grid) if args.grid else ScanGrid(1e-3, 0.5, 120, False)
    curves = analysis.trip_curves(f, args.location, g, levels, grid)
    rows = []
    for curve in curves:
        for gamma, value in curve.samples:
            rows.append((gamma, curve.level, value))
    path = _out_path(args, "trip.csv")
    extra = {"map": map_hash, "setting": g.name, "tolerances": "bisect_rel=1e-12"}
    _write_csv(path, _header_lines(args, extra), ["gamma", "level", "value"], rows)
    for curve in curves:
        marks = ", ".join(f"{c:.6g}" for c in curve.crossings)
        print(f"L={curve.level}: crossings at {marks or 'none in range'}")
    if args.svg:
        from . import plots

        marks = [c for curve in curves for c in curve.crossings]
        fig = plots.plot_trip(curves, marks, log_axes=grid.log, title=f"{args.location}, {g.name}")
        _save_figure(fig, _figure_path(path))
    return 0


def cmd_tifd(args) -> int:
    f, map_hash = _resolve_map(args.source)
    xvar, yvar = (v.strip() for v in args.plane.split(","))
    fixed = _parse_assignments(args.fixed) if args.fixed else {}
    grid = _parse_grid(args.grid) if args.grid else ScanGrid(0.0, 1.0, 24, False)
    axis_points = grid.points()
    field = analysis.tifd_field(f, (xvar, yvar), fixed, (axis_points, axis_points))
    rows = [
        (p[0], p[1], v[0], v[1], m)
        for p, v, m in zip(field.points, field.vectors, field.magnitudes)
    ]
    path = _out_path(args, "tifd.csv")
    extra = {"map": map_hash, "fixed": json.dumps(fixed, sort_keys=True)}
    _write_csv(path, _header_lines(args, extra), ["x", "y", "dx", "dy", "magnitude"], rows)
    if args.svg:
        from . import plots

        try:
            fps = [p for p in analysis.fixed_points(f) if all(
                abs(float(p[v]) - fixed.get(v, 0.0)) < 1e-6 for v in f.variables if v not in (xvar, yvar)
            )]
        except Exception:
            fps = []
        fig = plots.plot_tifd(field, fps, title=f"{xvar}-{yvar} flow")
        _save_figure(fig, _figure_path(path))
    return 0


def cmd_threshold_set(args) -> int:
    f, map_hash = _resolve_map(args.source)
    xvar, yvar = (v.strip() for v in args.plane.split(","))
    fixed = _parse_assignments(args.fixed) if args.fixed else {}
    grid = _parse_grid(args.grid) if args.grid else ScanGrid(0.0, 1.0, 200, False)
    spec = SliceSpec(plane=(xvar, yvar), fixed_values=fixed, x_range=(grid.lo, grid.hi), y_range=(grid.lo, grid.hi))
    report = analysis.threshold_set(f, spec, resolution=grid.n)
    finding = None
    try:
        bound = analysis.axis_upper_bound(f)
        finding = analysis.ConjectureFinding(
            holds=report.largest_cube_edge <= bound.value + report.grid_step,
            cube_edge=report.largest_cube_edge,
            bound=bound.value,
            bound_location=bound.location,
        )
    except NoPseudothresholdError:
        pass
    rows = []
    for i, x in enumerate(report.xs):
        for j, y in enumerate(report.ys):
            rows.append((x, y, report.classes[i, j]))
    path = _out_path(args, "threshold_set.csv")
    extra = {
        "map": map_hash,
        "largest_cube_edge": repr(report.largest_cube_edge),
        "grid_step": repr(report.grid_step),
        "tolerances": "eps=1e-12,escape=0.999,max_level=200",
    }
    if finding is not None:
        extra["axis_conjecture"] = (
            f"cube_edge={finding.cube_edge!r} <= axis_bound={finding.bound!r}"
            f" at {finding.bound_location}: {'holds' if finding.holds else 'VIOLATED'}"
        )
    _write_csv(path, _header_lines(args, extra), ["x", "y", "class"], rows)
    print(f"largest cube edge = {report.largest_cube_edge:.6g} (grid step {report.grid_step:.3g})")
    print(f"undetermined points: {report.undetermined_count}")
    if finding is not None:
        verdict = "holds" if finding.holds else "VIOLATED"
        print(
            f"axis-bound conjecture {verdict}: cube {finding.cube_edge:.6g} vs "
            f"bound {finding.bound:.6g} ({finding.bound_location})"
        )
    if args.svg:
        from . import plots

        fig = plots.plot_threshold_set(report, title=f"below-threshold set ({xvar},{yvar})")
        _save_figure(fig, _figure_path(path))
    return 0


def cmd_axis_bound(args) -> int:
    f, map_hash = _resolve_map(args.source)
    scan = _parse_grid(args.grid) if args.grid else None
    report = analysis.axis_upper_bound(f, scan)
    per_axis = {}
    for name, entry in report.per_axis.items():
        if isinstance(entry, NoPseudothresholdError):
            per_axis[name] = {"error": str(entry)}
        else:
            per_axis[name] = {
                "value": entry.value,
                "bracket": list(entry.bracket),
                "touched_scan_bound": entry.touched_scan_bound,
            }
    path = _out_path(args, "axis_bound.json")
    _write_json(
        path,
        {
            "provenance": {"config": _config(args), "map_hash": map_hash},
            "location": report.location,
            "value": report.value,
            "per_axis": per_axis,
        },
    )
    print(f"axis upper bound = {report.value:.9g} at location {report.location}")
    return 0


def cmd_mc_trip(args) -> int:
    from .steane import KINDS, build_exrec, fit_pseudothreshold, mc_trip

    if args.source != "mc:steane":
        raise ValueError("mc-trip requires --source mc:steane")
    if args.seed is None or args.trials is None:
        raise ValueError("mc-trip requires --seed and --trials")
    if args.location not in KINDS:
        raise ValueError(f"--location must be one of {KINDS}")
    g = settings_mod.resolve(args.setting, KINDS)
    grid = _parse_grid(args.grid, default_log=True) if args.grid else ScanGrid(1e-6, 1e-1, 11, True)
    exrec = build_exrec(args.location)
    schedule_hash = hashlib.sha256(exrec.schedule_text().encode()).hexdigest()
    curve = mc_trip(
        args.location,
        g,
        grid.points(),
        args.trials,
        args.seed,
        threads=_threads(args),
        retry_policy=args.retry_policy,
        exrec=exrec,
    )
    rows = [(p.gamma, p.trials, p.failures, p.p_hat, p.stderr) for p in curve.points]
    path = _out_path(args, "mc_trip.csv")
    multiplier = g.multipliers.get(args.location, 1.0)
    extra = {
        "map": f"exrec({args.location}) schedule {schedule_hash}",
        "setting": f"{g.name} (multiplier {multiplier} for {args.location})",
        "census": json.dumps(exrec.census(), sort_keys=True),
        "tolerances": "chunk=8192,two_qubit_model=uniform15",
    }
    fit = None
    try:
        fit = fit_pseudothreshold(curve, cubic=args.fit_cubic)
        extra["fit"] = (
            f"value={fit.value!r} ci=({fit.ci_low!r},{fit.ci_high!r}) "
            f"coefficients={list(fit.coefficients)!r}"
        )
    except (NoPseudothresholdError, ValueError) as exc:
        extra["fit"] = f"unavailable: {exc}"
    _write_csv(path, _header_lines(args, extra), ["gamma", "trials", "failures", "p_hat", "stderr"], rows)
    crossings = curve.crossings()
    if crossings:
        print(f"direct crossing near {crossings[0]:.6g} (location-rate units)")
    if fit is not None:
        print(f"fitted pseudothreshold = {fit.value:.6g} (+{fit.ci_high - fit.value:.2g}/-{fit.value - fit.ci_low:.2g})")
    if args.svg:
        from . import plots

        fig = plots.plot_mc_trip(curve, fit, title=f"exrec({args.location}), {g.name}")
        _save_figure(fig, _figure_path(path))
    if fit is None and not crossings:
        print("no crossing found in the sampled range", file=sys.stderr)
        return EXIT_SOLVER
    return 0


def cmd_trajectory(args) -> int:
    f, map_hash = _resolve_map(args.source)
    start_values = _parse_assignments(args.start)
    missing = set(f.variables) - set(start_values)
    if missing:
        raise ValueError(f"--start misses variables {sorted(missing)}")
    start = FailureVector({v: start_values[v] for v in f.variables})
    orbit = analysis.trajectory(f, start, args.max_level)
    rows = [
        tuple([level] + [float(p[v]) for v in f.variables]) for level, p in enumerate(orbit)
    ]
    path = _out_path(args, "trajectory.csv")
    extra = {"map": map_hash, "stop": "all<1e-12 or any>1-1e-12"}
    _write_csv(path, _header_lines(args, extra), ["level"] + list(f.variables), rows)
    last = orbit[-1]
    print(f"{len(orbit) - 1} levels, final " + " ".join(f"{v}={float(last[v]):.3e}" for v in f.variables))
    if args.svg:
        from . import plots

        plane = tuple(v.strip() for v in args.plane.split(",")) if args.plane else f.variables[:2]
        fig = plots.plot_trajectory(orbit, plane, title=f"trajectory from {args.start}")
        _save_figure(fig, _figure_path(path))
    return 0


# ----------------------------------------------------------------------
# argument wiring
# ----------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowmap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"flowmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--source", default="builtin:tmr", help="builtin:tmr | builtin:uv-example | file:<path> | mc:steane")
        p.add_argument("--out", help="artifact path (default: <command>.<ext> in the working directory)")
        p.add_argument("--svg", action="store_true", help="also render the figure as SVG")
        p.add_argument("--threads", type=int, help="worker threads (default: FLOWMAP_THREADS or 1)")
        p.add_argument("--seed", type=int, help="RNG seed (required for Monte-Carlo runs)")

    p = sub.add_parser("derive-map", help="build or load a flow map and write its JSON document")
    common(p)
    p.set_defaults(func=cmd_derive_map)

    p = sub.add_parser("fixed-points", help="Newton fixed points of the map on the unit box")
    common(p)
    p.add_argument("--seeds-per-axis", type=int, default=12)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("pseudothreshold", help="least nonzero identity crossing at one level")
    common(p)
    p.add_argument("--location", required=True)
    p.add_argument("--setting", default="diagonal")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--grid", help="scan grid lo:hi:n[:log]")
    p.set_defaults(func=cmd_pseudothreshold)

    p = sub.add_parser("trip", help="level-L reliability curves against the identity line")
    common(p)
    p.add_argument("--location", required=True)
    p.add_argument("--setting", default="diagonal")
    p.add_argument("--levels", default="1,2,3")
    p.add_argument("--grid", help="sample grid lo:hi:n[:log]")
    p.set_defaults(func=cmd_trip)

    p = sub.add_parser("tifd", help="one-application displacement field on a plane")
    common(p)
    p.add_argument("--plane", required=True, help="x-variable,y-variable")
    p.add_argument("--fixed", help="other variables, name=value,...")
    p.add_argument("--grid", help="axis grid lo:hi:n[:log]")
    p.set_defaults(func=cmd_tifd)

    p = sub.add_parser("threshold-set", help="classify a slice and measure the largest cube")
    common(p)
    p.add_argument("--plane", required=True, help="x-variable,y-variable")
    p.add_argument("--fixed", help="other variables, name=value,...")
    p.add_argument("--grid", help="slice grid lo:hi:n")
    p.set_defaults(func=cmd_threshold_set)

    p = sub.add_parser("axis-bound", help="minimum level-1 axis pseudothreshold (threshold upper bound)")
    common(p)
    p.add_argument("--grid", help="scan grid lo:hi:n[:log]")
    p.set_defaults(func=cmd_axis_bound)

    p = sub.add_parser("mc-trip", help="Monte-Carlo level-1 TRIP for one location kind")
    common(p)
    p.add_argument("--location", required=True, help="location kind: 1, 2, w, 1m, p")
    p.add_argument("--setting", default="steane")
    p.add_argument("--grid", help="rate grid lo:hi:n[:log] (default 1e-6:1e-1:11:log)")
    p.add_argument("--trials", type=int, help="trials per grid point")
    p.add_argument("--fit-cubic", action="store_true", help="add a cubic term to the crossing fit")
    p.add_argument("--retry-policy", choices=("resample", "free"), default="resample",
                   help="rejected ancillas are re-prepared with fresh faults (resample) or cleanly (free)")
    p.set_defaults(func=cmd_mc_trip)

    p = sub.add_parser("trajectory", help="orbit of a start point under the map")
    common(p)
    p.add_argument("--start", required=True, help="name=value,... for every map variable")
    p.add_argument("--max-level", type=int, default=50)
    p.add_argument("--plane", help="plot plane x-variable,y-variable (default: first two)")
    p.set_defaults(func=cmd_trajectory)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NoPseudothresholdError, NonConvergenceError) as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FlowMapParseError, SettingError, FlowmapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
