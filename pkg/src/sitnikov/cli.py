"""Command-line entry point: sample-x, periodic, rho, connect, verify."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .config import SolverOptions, Tolerances
from .symbolic import PeriodicSymbols, SymbolError

logger = logging.getLogger("sitnikov")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class ConfigError(ValueError):
    """Bad run configuration (tolerances, grid size, output paths)."""


def _seeds(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated numbers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("seeds must be positive amplitudes")
    return vals


def _add_solver_args(p, *, connection=False):
    p.add_argument("--nodes", type=int, default=64, help="nodes per unit time M (>= 8)")
    p.add_argument("--refine", type=int, default=None, help="grid doublings after the base grid (default 2)")
    p.add_argument("--seeds", type=_seeds, default=None, help="multi-start amplitudes, e.g. 0.25,0.5,1")
    p.add_argument("--jobs", type=int, default=1, help="parallel multi-start workers")
    p.add_argument("--grad-tol", type=float, default=None)
    p.add_argument("--rho-tol", type=float, default=None)
    if connection:
        p.add_argument("--tail-tol", type=float, default=None)
        p.add_argument("--j-tol", type=float, default=None)
        p.add_argument("--max-windows", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sitnikov", description="Action minimizers for the planar Sitnikov problem.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-x", help="tabulate the collision drive x(t) as CSV")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--from", dest="t0", type=float, default=0.0)
    p.add_argument("--to", dest="t1", type=float, default=1.0)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("periodic", help="periodic minimizer for a symbol word")
    p.add_argument("--symbols", required=True)
    _add_solver_args(p)
    p.add_argument("--out", default="orbit.json")
    p.add_argument("--plot", default=None, help="SVG figure path")
    p.add_argument("--csv", default=None, help="CSV export of (t, y)")

    p = sub.add_parser("rho", help="print rho(b), the least action over the multi-start set")
    p.add_argument("--symbols", required=True)
    _add_solver_args(p)

    p = sub.add_parser("connect", help="homoclinic / heteroclinic connection from a spec file")
    p.add_argument("--spec", required=True)
    _add_solver_args(p, connection=True)
    p.add_argument("--out", default="conn.json")
    p.add_argument("--plot", default=None)
    p.add_argument("--csv", default=None)

    p = sub.add_parser("verify", help="check a saved orbit; exit 0 iff every applicable check passes")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--against", default=None, help="spec JSON to check the orbit against")
    p.add_argument("--report", default=None, help="report JSON path (default <in>.report.json)")
    p.add_argument("--samples", type=int, default=1000, help="random trajectories for the lower-bound check")
    p.add_argument("--grad-tol", type=float, default=None)
    p.add_argument("--tail-tol", type=float, default=None)
    p.add_argument("--sym-tol", type=float, default=None)
    return ap


def _tolerances(args) -> Tolerances:
    kw = {}
    for name in ("grad_tol", "rho_tol", "tail_tol", "j_tol", "sym_tol"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    try:
        return Tolerances(**kw)
    except ValueError as exc:
        raise ConfigError(f"tolerance misconfiguration: {exc}") from exc


def _options(args) -> SolverOptions:
    if args.nodes < 8:
        raise ConfigError(f"--nodes must be >= 8, got {args.nodes}")
    if args.refine is not None and args.refine < 0:
        raise ConfigError("--refine must be >= 0")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    kw = {"tol": _tolerances(args), "jobs": args.jobs}
    if args.seeds is not None:
        kw["seeds"] = args.seeds
    if args.refine is not None:
        kw["refine"] = args.refine
    if getattr(args, "max_windows", None) is not None:
        if args.max_windows < 1:
            raise ConfigError("--max-windows must be >= 1")
        kw["max_windows"] = args.max_windows
    return SolverOptions(**kw)


def _check_writable(*paths):
    for p in paths:
        if p is None:
            continue
        parent = Path(p).resolve().parent
        while not parent.exists():
            parent = parent.parent
        if not os.access(parent, os.W_OK):
            raise ConfigError(f"output path {p} is not writable")


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        io.atomic_write(path, text)


def cmd_sample_x(args) -> int:
    from .kepler import sample_x

    if not args.step > 0:
        raise ConfigError("--step must be positive")
    if args.t1 < args.t0:
        raise ConfigError("--to must not precede --from")
    _check_writable(args.out)
    _emit(io.rows_to_csv(("t", "x", "xdot"), sample_x(args.t0, args.t1, args.step)), args.out)
    return EXIT_OK


def _parse_symbols(text) -> PeriodicSymbols:
    try:
        return PeriodicSymbols.parse(text)
    except SymbolError as exc:
        raise SymbolError(f"malformed symbols {text!r}: {exc}") from exc


def cmd_periodic(args) -> int:
    from .periodic import best_orbit, multistart

    b = _parse_symbols(args.symbols)
    opts = _options(args)
    _check_writable(args.out, args.plot, args.csv)
    orbits = multistart(b, args.nodes, opts)
    orbit = best_orbit(orbits, opts.tol.rho_tol)
    io.write_json(args.out, orbit.to_dict())
    if args.csv:
        io.atomic_write(args.csv, io.trajectory_csv(orbit.traj))
    if args.plot:
        from .plotting import plot_periodic

        plot_periodic(orbit, args.plot)
    print(f"symbols     {b}")
    print(f"M           {orbit.M}")
    print(f"rho_hat     {orbit.rho_hat!r}")
    print(f"grad sup    {orbit.grad_norm:.3e}")
    print(f"converged   {orbit.converged}")
    print(f"written     {args.out}")
    return EXIT_OK if orbit.converged else EXIT_FAILED


def cmd_rho(args) -> int:
    from .periodic import multistart

    b = _parse_symbols(args.symbols)
    opts = _options(args)
    orbits = multistart(b, args.nodes, opts)
    print("seed,M,rho_hat,grad_sup,converged")
    for o in orbits:
        print(f"{o.seed!r},{o.M},{o.rho_hat!r},{o.grad_norm:.3e},{o.converged}")
    good = [o.rho_hat for o in orbits if o.converged]
    if not good:
        print("no seed converged", file=sys.stderr)
        return EXIT_FAILED
    print(f"rho,{min(good)!r}")
    return EXIT_OK


def cmd_connect(args) -> int:
    from .connection import WindowDivergence, connect

    try:
        spec = io.load_spec(args.spec)
    except SymbolError as exc:
        raise SymbolError(f"unreadable spec: {exc}") from exc
    opts = _options(args)
    _check_writable(args.out, args.plot, args.csv)
    code = EXIT_OK
    try:
        orbit, _ = connect(spec, args.nodes, opts)
    except WindowDivergence as exc:
        logger.error("%s", exc)
        orbit, code = exc.orbit, EXIT_FAILED
        if orbit is None:
            return code
    io.write_json(args.out, orbit.to_dict())
    if args.csv:
        io.atomic_write(args.csv, io.trajectory_csv(orbit.traj))
    if args.plot:
        from .plotting import plot_connection

        plot_connection(orbit, args.plot)
    left, right = orbit.outer_tail_residual()
    print(f"spec        {json.dumps(spec.to_dict())}")
    print(f"window      {list(orbit.window)}")
    print(f"J_hat       {orbit.j_hat!r}")
    print(f"tails       {left:.3e} {right:.3e}")
    print(f"converged   {orbit.converged}")
    print(f"written     {args.out}")
    return code


def _load_against(path, orbit):
    try:
        d = io.read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise SymbolError(f"unreadable spec {path}: {exc}") from exc
    if orbit.__class__.__name__ == "PeriodicOrbit":
        if "symbols" not in d:
            raise SymbolError(f"spec {path} has no 'symbols' field for a periodic orbit")
        return dataclasses.replace(orbit, symbols=_parse_symbols(d["symbols"]))
    from .symbolic import ConnectionSpec

    return dataclasses.replace(orbit, spec=ConnectionSpec.from_dict(d))


def cmd_verify(args) -> int:
    from .verification import verify_connection, verify_periodic

    try:
        orbit = io.load_orbit(args.inp)
    except (OSError, ValueError, KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"cannot load orbit {args.inp}: {exc}") from exc
    if args.against:
        orbit = _load_against(args.against, orbit)
    if args.samples < 0:
        raise ConfigError("--samples must be >= 0")
    tol = _tolerances(args)
    report_path = args.report or str(Path(args.inp).with_suffix("")) + ".report.json"
    _check_writable(report_path)
    if orbit.__class__.__name__ == "PeriodicOrbit":
        report = verify_periodic(orbit, tol, samples=args.samples)
    else:
        report = verify_connection(orbit, tol)
    io.write_json(report_path, report.to_dict())
    print(report.summary())
    print(f"report written to {report_path}")
    return EXIT_OK if report.passed else EXIT_FAILED


COMMANDS = {
    "sample-x": cmd_sample_x,
    "periodic": cmd_periodic,
    "rho": cmd_rho,
    "connect": cmd_connect,
    "verify": cmd_verify,
}


def _setup_logging():
    name = os.environ.get("SITNIKOV_LOG", "error").lower()
    if name not in LOG_LEVELS:
        raise ConfigError(f"SITNIKOV_LOG must be one of {sorted(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=LOG_LEVELS[name], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logger.setLevel(LOG_LEVELS[name])


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        _setup_logging()
        return COMMANDS[args.command](args)
    except SymbolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
