"""Command line entry point: ``ivppmaps <command> ...``.

Every command is reproducible from its arguments and the master seed
(``--seed``, else ``$IVPPMAPS_SEED``, else 0). JSON floats are written with
17 significant digits. Exit codes: 0 success, 2 usage error, 3 failed check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import ivpp, julia, locus, maps, periodic, plotting

SEED_ENV = "IVPPMAPS_SEED"
EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 2, 3

log = logging.getLogger("ivppmaps")


class UsageError(Exception):
    pass


# ---- serialisation -----------------------------------------------------

def _fmt(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    s = format(v, ".17g")
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and complex numbers
    as ``[re, im]`` pairs; non-finite floats become ``null``."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt(obj.real)}, {_fmt(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, complex, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_text(text: str, path: Optional[str]):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _params_json(params: dict) -> dict:
    return {k: complex(v) if complex(v).imag else complex(v).real for k, v in params.items()}


# ---- argument helpers --------------------------------------------------

def _family(name: str) -> maps.MapFamily:
    try:
        return maps.get_family(name)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _parse_params(family: maps.MapFamily, items: Optional[List[str]]) -> dict:
    """``a=0.1 b=-0.05`` (or ``a=0.1,b=-0.05``) into a parameter mapping."""
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise UsageError(f"parameter {part!r} is not name=value")
            name, value = part.split("=", 1)
            try:
                out[name.strip()] = complex(value.strip().replace("i", "j"))
            except ValueError:
                raise UsageError(f"bad value for parameter {name!r}") from None
    try:
        return family.param_dict(out)
    except ValueError as e:
        raise UsageError(str(e)) from None


def master_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def child_seeds(seed: int, count: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _points_columns(d: int) -> List[str]:
    cols = []
    for v in "xyz"[:d]:
        cols += [f"{v}_re", f"{v}_im"]
    return cols


def _point_cells(p) -> List[str]:
    return [repr(float(v)) for c in p for v in (c.real, c.imag)]


# ---- commands ----------------------------------------------------------

def cmd_periodic(args) -> int:
    family = _family(args.map)
    params = _parse_params(family, args.params)
    if args.period < 1:
        raise UsageError("--period must be >= 1")
    if args.budget < 0:
        raise UsageError("--budget must be >= 0")
    seed = master_seed(args)
    orbits = periodic.find_periodic_points(family, params, args.period, args.budget, seed)
    doc = {
        "map": family.id,
        "params": _params_json(params),
        "period": args.period,
        "seed": seed,
        "orbits": [o.to_dict() for o in orbits],
    }
    _write_text(to_json(doc) + "\n", args.out)
    return EXIT_OK


def cmd_ivpp_check(args) -> int:
    families = [_family(args.map)] if args.map else list(maps.FAMILIES.values())
    seed = master_seed(args)
    entries = [(f, e.period) for f in families for e in ivpp.catalogue(f.id)]
    seeds = child_seeds(seed, len(entries))
    reports = []
    ok = True
    for (family, n), s in zip(entries, seeds):
        rep = ivpp.verify_ivpp_periodicity(family, n, args.samples, s, tol=args.tol)
        d = rep.to_dict()
        d["pass"] = rep.max_residual < args.tol
        ok &= d["pass"]
        reports.append(d)
    doc = {"seed": seed, "tolerance": args.tol, "reports": reports, "pass": ok}
    _write_text(to_json(doc) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_julia(args) -> int:
    family = _family(args.map)
    params = _parse_params(family, args.params)
    if args.depth < 1:
        raise UsageError("--depth must be >= 1")
    if args.max_points < 1:
        raise UsageError("--max-points must be >= 1")
    seed = master_seed(args)
    s_search, s_cloud, s_dist = child_seeds(seed, 3)
    try:
        orbit = julia.select_seed(family, params, args.seed_period, args.budget, s_search)
    except periodic.IvppDetected as e:
        raise UsageError(f"{e}; Julia sampling needs a nonzero parameter") from None
    except julia.SeedNotUnstable as e:
        log.error("%s", e)
        return EXIT_CHECK
    cloud = julia.backward_orbit(family, params, orbit, args.depth, args.max_points, s_cloud,
                                 budget=args.preimage_budget)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["depth", "anchor"] + _points_columns(family.dimension))
    for p, k, a in zip(cloud.points, cloud.depths, cloud.anchors):
        w.writerow([int(k), int(a)] + _point_cells(p))
    _write_text(buf.getvalue(), args.out)

    summary = {
        "map": family.id,
        "params": _params_json(params),
        "seed": seed,
        "seed_orbit": orbit.to_dict(),
        "points": len(cloud),
        "depth_reached": cloud.depth_reached,
        "rejected": cloud.rejected,
        "max_forward_ratio": float(np.max(julia.verify_cloud(family, cloud))),
    }
    if family.id == "moebius2d":
        summary["accumulation_distance"] = {"(1,1)": julia.accumulation_distance(cloud, [1, 1])}
    else:
        pts = cloud.points
        if len(pts) > args.distance_points:
            rng = np.random.default_rng(s_dist)
            pts = pts[np.sort(rng.choice(len(pts), args.distance_points, replace=False))]
        summary["accumulation_distance"] = {
            "Lambda+": julia.accumulation_distance(pts, ivpp.LAMBDA_PLUS),
            "Lambda-": julia.accumulation_distance(pts, ivpp.LAMBDA_MINUS),
        }
        summary["distance_points"] = len(pts)
    if args.summary:
        _write_text(to_json(summary) + "\n", args.summary)
    else:
        sys.stderr.write(to_json(summary) + "\n")
    if args.svg:
        real = np.array([p[:2].real for p in cloud.points if np.max(np.abs(p.imag)) < 1e-9])
        marker = (1, 1) if family.id == "moebius2d" else None
        plotting.plot_scatter(args.svg, real.reshape(-1, 2), f"{family.id} Julia cloud (real points)",
                              marker=marker)
    return EXIT_OK


def _pick_orbit(orbits, which: str):
    if not orbits:
        return None
    if which == "least-unstable":
        return min(orbits, key=lambda o: (max(abs(m) for m in o.multipliers)))
    try:
        return orbits[int(which)]
    except (ValueError, IndexError):
        raise UsageError(f"--orbit must be 'least-unstable' or an index below {len(orbits)}") from None


def cmd_continuation(args) -> int:
    family = _family(args.map)
    start = _parse_params(family, args.start)
    stop = _parse_params(family, args.stop)
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    seed = master_seed(args)
    try:
        schedule = locus.geometric_schedule(list(start.values()), list(stop.values()), args.steps)
    except ValueError as e:
        raise UsageError(str(e)) from None
    orbits = periodic.find_periodic_points(family, start, args.period, args.budget, seed)
    orbit = _pick_orbit(orbits, args.orbit)
    if orbit is None:
        log.error("no period-%d orbit found at %s", args.period, start)
        return EXIT_CHECK
    path = locus.continuation_trace(family, orbit, schedule)
    _write_text(locus.write_path_csv(path), args.out)
    report = {
        "map": family.id,
        "period": args.period,
        "seed": seed,
        "start_orbit": orbit.to_dict(),
        "terminal_status": path.terminal_status,
        "steps_traced": len(path.points),
        "steps_requested": args.steps,
        "terminal_point": list(path.points[-1]),
        "terminal_invariants": list(maps.invariants(family, path.points[-1])),
    }
    if args.period == 2:
        poly = locus.G2 if family.id == "moebius2d" else locus.load_k2()
        report["locus"] = "G2" if family.id == "moebius2d" else "K2"
        report["locus_residual"] = locus.locus_residual_report(path, poly)
        if family.id == "lv3d":
            # K2 has the factor z removed; orbits inside a coordinate plane need not lie on it
            planes = [v for j, v in enumerate("xyz") if np.max(np.abs(orbit.points[:, j])) < 1e-12]
            report["coordinate_planes"] = [f"{v}=0" for v in planes]
    if args.report:
        _write_text(to_json(report) + "\n", args.report)
    else:
        sys.stderr.write(to_json(report) + "\n")
    if args.svg:
        pts = np.array([p[:2].real for p in path.points])
        plotting.plot_scatter(args.svg, pts, f"{family.id} period-{args.period} path")
    return EXIT_OK


def read_points_csv(path: str) -> np.ndarray:
    """Real 2-D points from a CSV with ``x_re``/``y_re`` (or ``x``/``y``)
    columns; rows with a nonzero imaginary part are skipped."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None
    rows = [r for r in rows if r]
    if not rows:
        return np.zeros((0, 2))
    head = rows[0]
    if "x_re" in head and "y_re" in head:
        cols = [head.index("x_re"), head.index("y_re")]
        imag = [head.index(c) for c in ("x_im", "y_im") if c in head]
    elif "x" in head and "y" in head:
        cols, imag = [head.index("x"), head.index("y")], []
    else:
        raise UsageError(f"{path}: need x_re,y_re or x,y columns")
    out = []
    for r in rows[1:]:
        try:
            if any(abs(float(r[i])) > 1e-9 for i in imag):
                continue
            out.append([float(r[i]) for i in cols])
        except (ValueError, IndexError):
            raise UsageError(f"{path}: malformed row {r!r}") from None
    return np.array(out).reshape(-1, 2)


def cmd_plot(args) -> int:
    overlay = read_points_csv(args.csv) if args.csv else None
    if args.kind == "g2":
        plotting.plot_g2(args.out, overlay=overlay)
    elif args.kind == "hyperbolas":
        lo, hi = args.periods
        if lo < 3 or hi < lo:
            raise UsageError("--periods needs 3 <= LO <= HI")
        plotting.plot_hyperbolas(args.out, range(lo, hi + 1), coprime_only=not args.all_m)
    elif args.kind == "gamma":
        plotting.plot_gamma(args.out)
    else:
        if overlay is None:
            raise UsageError(f"plot {args.kind} needs --csv")
        marker = (1, 1) if args.kind == "julia" else None
        plotting.plot_scatter(args.out, overlay, "Julia cloud" if args.kind == "julia" else "points",
                              marker=marker)
    return EXIT_OK


def cmd_surface(args) -> int:
    pts = locus.surface_samples(locus.load_k2(), args.count, master_seed(args))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "z"])
    for p in pts:
        w.writerow([repr(float(v)) for v in p])
    _write_text(buf.getvalue(), args.out)
    return EXIT_OK


# ---- parser ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ivppmaps", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, params=True):
        sp.add_argument("--map", required=True, help="moebius2d or lv3d")
        if params:
            sp.add_argument("--params", nargs="*", default=[], metavar="NAME=VALUE")
        sp.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")

    sp = sub.add_parser("periodic", help="search periodic orbits of one period")
    common(sp)
    sp.add_argument("--period", type=int, required=True)
    sp.add_argument("--budget", type=int, default=500, help="random Newton starts")
    sp.add_argument("--out", default="-", help="orbits.json (default stdout)")
    sp.set_defaults(func=cmd_periodic)

    sp = sub.add_parser("ivpp-check", help="verify the IVPP catalogue at zero parameters")
    sp.add_argument("--map", default=None, help="one map (default both)")
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_ivpp_check)

    sp = sub.add_parser("julia", help="Julia cloud by backward iteration")
    common(sp)
    sp.add_argument("--depth", type=int, default=10)
    sp.add_argument("--max-points", type=int, default=20000)
    sp.add_argument("--seed-period", type=int, default=2, help="highest period searched for a seed orbit")
    sp.add_argument("--budget", type=int, default=200, help="Newton starts per period in the seed search")
    sp.add_argument("--preimage-budget", type=int, default=24, help="Newton starts per preimage solve")
    sp.add_argument("--distance-points", type=int, default=1000,
                    help="points used for curve distances (lv3d)")
    sp.add_argument("--out", default="-", help="cloud.csv (default stdout)")
    sp.add_argument("--summary", default=None, help="summary JSON (default stderr)")
    sp.add_argument("--svg", default=None, help="also render the real cloud points")
    sp.set_defaults(func=cmd_julia)

    sp = sub.add_parser("continuation", help="follow an orbit along a geometric schedule")
    sp.add_argument("--map", required=True)
    sp.add_argument("--period", type=int, required=True)
    sp.add_argument("--start", nargs="+", required=True, metavar="NAME=VALUE")
    sp.add_argument("--stop", nargs="+", required=True, metavar="NAME=VALUE")
    sp.add_argument("--steps", type=int, default=40)
    sp.add_argument("--orbit", default="least-unstable", help="'least-unstable' or an index")
    sp.add_argument("--budget", type=int, default=500)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default="-", help="path.csv (default stdout)")
    sp.add_argument("--report", default=None, help="report JSON (default stderr)")
    sp.add_argument("--svg", default=None)
    sp.set_defaults(func=cmd_continuation)

    sp = sub.add_parser("plot", help="render an SVG figure")
    sp.add_argument("kind", choices=["g2", "hyperbolas", "gamma", "julia", "scatter"])
    sp.add_argument("--csv", default=None, help="points to draw (overlay for curve plots)")
    sp.add_argument("--periods", type=int, nargs=2, default=[3, 6], metavar=("LO", "HI"))
    sp.add_argument("--all-m", action="store_true", help="hyperbolas: keep m not coprime to n")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("surface", help="real sample points of the lv3d period-2 surface")
    sp.add_argument("--count", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_surface)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"ivppmaps: error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
