"""
Command-line entry point ``affine-quant``.

Subcommands: spectrum, metric, curvature, correspond, classical, identities.
Exit status 0 on success, 2 on a configuration error (one JSON line on
stderr), 3 on a numerical failure or a baseline mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .classical import PhaseMap, integrate, poisson_bracket_residual, recurrence_times
from .coherent import Affine, Canonical, coherent_grid, fiducial, fs_metric, scalar_curvature
from .correspondence import DEFAULT_HBARS, hbar_scaling
from .domain_grid import Grid1D
from .eigensolve import (boundary_exponent, eigen_bisection, eigen_ql, inverse_iteration,
                         model_grid, richardson)
from .errors import ConvergenceError
from .operators import Potential, assemble, catalog_model, kinetic_identity_convergence
from .reporting import compare_results, to_csv, to_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

MODELS = {
    "ho": "HO",
    "half-ho": "HalfHO",
    "canonical-box": "CanonicalBox",
    "affine-box": 3,
    "catalog-1": 1,
    "catalog-2": 2,
    "catalog-3": 3,
    "catalog-4": 4,
    "catalog-5": 5,
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------- parser


def _model_opts(p, default_model):
    p.add_argument("--model", choices=sorted(MODELS), default=default_model)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0, help="wall parameter of the domain")
    p.add_argument("--potential", choices=["harmonic", "none"], default=None,
                   help="override the catalog default (items 1, 2, 4, 5)")


def _scheme_opts(p, beta_default):
    p.add_argument("--scheme", choices=["canonical", "affine"], default="affine")
    p.add_argument("--beta", type=float, default=beta_default)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--hbar", type=float, default=1.0)


def _output_opts(p, fmt):
    p.add_argument("--format", choices=["csv", "json"], default=fmt)
    p.add_argument("--output", default=None, help="file to write (default: stdout)")
    p.add_argument("--config", default=None, help="key=value file; its values override flags")
    p.add_argument("--baseline", default=None, help="JSON file to compare the result against")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="affine-quant", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="lowest eigenvalues of a catalog model")
    _model_opts(p, "half-ho")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--solver", choices=["bisection", "ql"], default="bisection")
    p.add_argument("--extrapolate", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--side", choices=["left", "right"], default="right")
    p.add_argument("--fit-window", type=int, default=8)
    _output_opts(p, "csv")

    for name, help_ in (("metric", "Fubini-Study metric at (p, q)"),
                        ("curvature", "scalar curvature of the metric at (p, q)")):
        p = sub.add_parser(name, help=help_)
        _scheme_opts(p, 1.0)
        p.add_argument("--p", type=float, default=0.0)
        p.add_argument("--q", type=float, default=None, help="default: the fiducial label")
        p.add_argument("--delta", type=float, default=None if name == "metric" else 0.05)
        p.add_argument("--resolution", type=int, default=80)
        _output_opts(p, "json")

    p = sub.add_parser("correspond", help="hbar -> 0 scaling of coherent-state expectations")
    _model_opts(p, "half-ho")
    p.add_argument("--scheme", choices=["canonical", "affine"], default="affine")
    p.add_argument("--beta", type=float, default=2.0, help="beta * hbar, held fixed")
    p.add_argument("--points", default="0,1;1,2", help="'p,q;p,q;...'")
    p.add_argument("--hbars", default=",".join(repr(h) for h in DEFAULT_HBARS))
    p.add_argument("--resolution", type=int, default=80)
    _output_opts(p, "json")

    p = sub.add_parser("classical", help="trajectory with elastic walls and its period")
    _model_opts(p, "half-ho")
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--q0", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--order", type=int, choices=[2, 4], default=4)
    p.add_argument("--stride", type=int, default=100, help="CSV row every STRIDE steps")
    _output_opts(p, "json")

    p = sub.add_parser("identities", help="kinetic identity convergence and Poisson brackets")
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--n0", type=int, default=100)
    p.add_argument("--refinements", type=int, default=3)
    _output_opts(p, "json")
    return ap


def _subparser(ap, command):
    for act in ap._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[command]
    raise ConfigError(f"unknown command {command!r}")


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def apply_config(ap, args, path):
    """Override ``args`` with the key=value pairs in ``path``."""
    sp = _subparser(ap, args.command)
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "command":
            if val != args.command:
                raise ConfigError(f"{path}:{num}: config is for {val!r}, not {args.command!r}")
            continue
        if key not in actions:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        act = actions[key]
        if isinstance(act, argparse.BooleanOptionalAction):
            value = _parse_bool(val)
        else:
            try:
                value = act.type(val) if act.type else val
            except ValueError:
                raise ConfigError(f"{path}:{num}: bad value for {key}: {val!r}") from None
            if act.choices is not None and value not in act.choices:
                raise ConfigError(f"{path}:{num}: {key} must be one of {sorted(act.choices)}")
        setattr(args, key, value)
    return args


# ---------------------------------------------------------------- commands


def _positive(args, *names):
    for n in names:
        v = getattr(args, n)
        if v is None or not (v > 0 and math.isfinite(v)):
            raise ConfigError(f"{n.replace('_', '-')} must be positive, got {v!r}")


def _model(args):
    _positive(args, "hbar", "omega", "mass", "b")
    tag = MODELS[args.model]
    pot = None
    if args.potential is not None:
        pot = Potential.harmonic() if args.potential == "harmonic" else Potential.none()
    return catalog_model(tag, hbar=args.hbar, b=args.b, omega=args.omega, mass=args.mass,
                         potential=pot)


def _provenance(args, grid=None, solver=None, tolerances=None):
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("output", "config", "baseline", "format")}
    return {
        "package_version": __version__,
        "command": args.command,
        "config": cfg,
        "grid": grid.as_dict() if isinstance(grid, Grid1D) else grid,
        "solver": solver,
        "tolerances": tolerances or {},
    }


def _walls_at_ends(domain, grid):
    tol = 1e-12 * max(1.0, abs(grid.x_min), abs(grid.x_max))
    return [w for w in domain.walls if abs(w - grid.x_min) <= tol or abs(w - grid.x_max) <= tol]


def cmd_spectrum(args):
    model = _model(args)
    if args.n < 3 or args.levels < 1 or args.levels >= args.n:
        raise ConfigError("need n >= 3 and 1 <= levels < n")
    grid = model_grid(model, args.n, args.levels, args.x_max, args.side)

    def solve(g):
        T = assemble(model, g)
        if args.solver == "bisection":
            return eigen_bisection(T, args.levels)
        s = eigen_ql(T)
        vals = s.eigenvalues[: args.levels]
        vecs = inverse_iteration(T, vals)
        return type(s)(vals, vecs, g, "QL")

    spec = solve(grid)
    vals = spec.eigenvalues
    if args.extrapolate:
        coarse, spec = spec, solve(grid.refine())
        vals = np.array(richardson(coarse, spec, args.levels))
    walls = _walls_at_ends(model.domain, spec.grid)
    wall = walls[0] if walls else None
    rows = []
    for k in range(args.levels):
        spacing = float(vals[k + 1] - vals[k]) if k + 1 < args.levels else None
        expo = None
        if wall is not None:
            try:
                expo = boundary_exponent(spec, k, wall, args.fit_window)
            except ValueError:
                expo = None
        rows.append([k, float(vals[k]), spacing, expo])
    columns = ["level", "eigenvalue", "spacing", "boundary_exponent"]
    payload = {
        "model": args.model,
        "domain": model.domain.describe(),
        "wall": wall,
        "levels": [dict(zip(columns, r)) for r in rows],
        "provenance": _provenance(args, {"coarse": grid.as_dict(), "fine": grid.refine().as_dict()}
                                  if args.extrapolate else grid, spec.method,
                                  {"bisection_atol": "4 eps ||T||", "inverse_iteration_residual": 1e-8,
                                   "ql_max_sweeps": 50}),
    }
    return columns, rows, payload


def _scheme(args):
    _positive(args, "hbar")
    if args.scheme == "affine":
        _positive(args, "beta")
        return Affine(args.beta)
    _positive(args, "omega")
    return Canonical(args.omega)


def _metric_setup(args):
    sch = _scheme(args)
    q = args.q if args.q is not None else sch.reference[1]
    if args.resolution < 4:
        raise ConfigError("resolution must be at least 4")
    if isinstance(sch, Affine) and q <= 0:
        raise ConfigError(f"affine q must be positive, got {q}")
    span = [q]
    if isinstance(sch, Affine):
        span += [0.5 * q, 2.0 * q]
    else:
        span += [q - 1.0, q + 1.0]
    grid = coherent_grid(sch, args.hbar, span, [args.p, 0.0], args.resolution)
    return sch, fiducial(sch, grid, args.hbar), q, grid


def cmd_metric(args):
    sch, fid, q, grid = _metric_setup(args)
    m = fs_metric(sch, fid, args.p, q, args.delta)
    if isinstance(sch, Affine):
        bh = sch.beta * args.hbar
        exact = {"g_pp": q * q / bh, "g_pq": 0.0, "g_qq": bh / (q * q)}
    else:
        exact = {"g_pp": 1.0 / sch.omega, "g_pq": 0.0, "g_qq": sch.omega}
    columns = ["p", "q", "g_pp", "g_pq", "g_qq"]
    rows = [[args.p, q, m.g_pp, m.g_pq, m.g_qq]]
    payload = {
        "scheme": args.scheme, "p": args.p, "q": q,
        "g_pp": m.g_pp, "g_pq": m.g_pq, "g_qq": m.g_qq, "det": m.det,
        "closed_form": exact,
        "provenance": _provenance(args, grid, "overlap Hessian, Richardson (delta, delta/2)",
                                  {"delta_ladder": [1e-2, 1e-3, 1e-4], "ladder_consistency": 1e-5}),
    }
    return columns, rows, payload


def cmd_curvature(args):
    sch, fid, q, grid = _metric_setup(args)
    if not (args.delta and args.delta > 0):
        raise ConfigError("delta must be positive")
    r = scalar_curvature(sch, fid, args.p, q, args.delta)
    exact = -2.0 / (sch.beta * args.hbar) if isinstance(sch, Affine) else 0.0
    columns = ["p", "q", "scalar_curvature", "closed_form"]
    rows = [[args.p, q, r, exact]]
    payload = {
        "scheme": args.scheme, "p": args.p, "q": q,
        "scalar_curvature": r, "closed_form": exact,
        "provenance": _provenance(args, grid, "Brioschi on 3x3 metric stencil, Richardson (delta, delta/2)",
                                  {"metric_delta": 1e-3, "stencil_consistency": 0.05}),
    }
    return columns, rows, payload


def _floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {what}: {text!r}") from None


def cmd_correspond(args):
    model = _model(args)
    if args.scheme == "affine":
        _positive(args, "beta")
        sch = Affine(args.beta) if args.beta > 0.5 else None
        if sch is None:
            raise ConfigError("beta must exceed 1/2")
    else:
        sch = Canonical(args.omega)
    points = []
    for chunk in args.points.split(";"):
        if chunk.strip():
            pq = _floats(chunk, "points")
            if len(pq) != 2:
                raise ConfigError(f"point needs two numbers, got {chunk!r}")
            points.append(tuple(pq))
    hbars = _floats(args.hbars, "hbars")
    rep = hbar_scaling(model, sch, points, hbars, args.resolution)
    columns = ["p", "q", "hbar", "value", "classical", "difference"]
    rows = []
    for i, (p, q) in enumerate(rep.points):
        for j, hb in enumerate(rep.hbars):
            rows.append([p, q, hb, rep.values[i, j], rep.classical[i], rep.differences[i, j]])
    payload = {
        "model": args.model, "scheme": args.scheme, "hbars": rep.hbars, "betas": rep.betas,
        "points": [
            {"p": p, "q": q, "classical": rep.classical[i], "values": rep.values[i],
             "differences": rep.differences[i], "fitted_order": rep.fitted_order[i],
             "monotone": bool(rep.monotone[i])}
            for i, (p, q) in enumerate(rep.points)
        ],
        "provenance": _provenance(args, None, "tridiagonal expectation in coherent states",
                                  {"hermitian": 1e-10, "leak": 1e-6}),
    }
    return columns, rows, payload


def cmd_classical(args):
    model = _model(args)
    if args.stride < 1:
        raise ConfigError("stride must be at least 1")
    tr = integrate(model, args.p0, args.q0, args.dt, args.t_end, args.order)
    try:
        rec = recurrence_times(tr)
        period = float(np.mean(rec))
    except ValueError:
        rec, period = np.array([]), None
    idx = np.arange(0, tr.times.size, args.stride)
    if idx[-1] != tr.times.size - 1:
        idx = np.append(idx, tr.times.size - 1)
    columns = ["time", "p", "q", "energy"]
    rows = [[tr.times[i], tr.p_series[i], tr.q_series[i], tr.energy_series[i]] for i in idx]
    payload = {
        "model": args.model, "p0": args.p0, "q0": args.q0,
        "period": period, "recurrences": rec,
        "bounce_count": len(tr.bounce_events),
        "bounce_events": [{"time": t, "wall": w} for t, w in tr.bounce_events],
        "energy_drift": tr.energy_drift(), "steps": int(tr.times.size - 1), "dt": tr.dt,
        "provenance": _provenance(args, None, f"kick-drift-kick order {args.order}, exact wall reflection",
                                  {"section": "q = mid-range, p > 0"}),
    }
    return columns, rows, payload


def _identity_testfns():
    return [
        lambda x: x**3 * np.exp(-x * x),
        lambda x: x**4 * np.exp(-((x - 2.0) ** 2)),
        lambda x: np.sin(x) * x**3 * np.exp(-0.5 * x * x),
    ]


CANONICAL_MAPS = {
    "identity": PhaseMap(lambda p, q: p, lambda p, q: q),
    "scale_3": PhaseMap(lambda p, q: p / 3.0, lambda p, q: 3.0 * q),
    "dilation_log": PhaseMap(lambda p, q: p * q, lambda p, q: math.log(q), q_range=(0.0, math.inf)),
    "square_momentum": PhaseMap(lambda p, q: p * p, lambda p, q: q),
}
BRACKET_POINTS = [(0.3, 0.7), (1.7, 2.2), (-1.1, 0.4)]


def cmd_identities(args):
    _positive(args, "hbar", "x_max")
    if args.n0 < 10 or args.refinements < 1:
        raise ConfigError("need n0 >= 10 and refinements >= 1")
    res, ratios = kinetic_identity_convergence(args.x_max, args.hbar, _identity_testfns(),
                                               args.n0, args.refinements)
    brackets = {k: poisson_bracket_residual(m, BRACKET_POINTS) for k, m in CANONICAL_MAPS.items()}
    columns = ["check", "index", "value"]
    rows = [["kinetic_residual", i, r] for i, r in enumerate(res)]
    rows += [["kinetic_ratio", i, r] for i, r in enumerate(ratios)]
    for k, vals in brackets.items():
        rows += [[f"bracket_{k}", i, v] for i, v in enumerate(vals)]
    payload = {
        "kinetic_residuals": res, "kinetic_ratios": ratios,
        "poisson_residuals": brackets, "bracket_points": BRACKET_POINTS,
        "provenance": _provenance(args, {"x_min": 0.0, "x_max": args.x_max, "n0": args.n0},
                                  "second-order stencils", {"fd_step": 1e-5}),
    }
    return columns, rows, payload


COMMANDS = {
    "spectrum": cmd_spectrum, "metric": cmd_metric, "curvature": cmd_curvature,
    "correspond": cmd_correspond, "classical": cmd_classical, "identities": cmd_identities,
}


# ---------------------------------------------------------------- main


def _fail(kind, message, code):
    line = json.dumps({"error": kind, "exit": code, "message": " ".join(str(message).split())},
                      sort_keys=True)
    print(line, file=sys.stderr)
    return code


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.config:
            args = apply_config(ap, args, args.config)
        if args.baseline and args.format != "json":
            raise ConfigError("--baseline needs --format json")
        columns, rows, payload = COMMANDS[args.command](args)
    except ConvergenceError as exc:
        return _fail("numerical", exc, EXIT_NUMERIC)
    except (ConfigError, ValueError, TypeError) as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail("numerical", exc, EXIT_NUMERIC)

    text = to_json(payload) if args.format == "json" else to_csv(columns, rows)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if args.baseline:
        try:
            with open(args.baseline, encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, ValueError) as exc:
            return _fail("config", f"cannot read baseline: {exc}", EXIT_CONFIG)
        diffs = compare_results(json.loads(text), base)
        if diffs:
            return _fail("regression", f"{len(diffs)} field(s) differ, first: {diffs[0]}", EXIT_NUMERIC)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
