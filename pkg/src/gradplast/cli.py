"""Command line entry point.

Exit codes: 0 ok, 1 check failure, 2 configuration error, 3 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, validate_config
from .flow_rule import DegenerateBranch, NonConvergence
from .scenarios import (
    POINT_COLUMNS,
    check_dissipation,
    check_kkt,
    check_structure,
    library,
    run_point_driver,
    run_scenario,
    write_rows,
    write_run,
)
from .solver import EquilibriumNonConvergence, OuterNonConvergence, run

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SOLVER_ERRORS = (OuterNonConvergence, NonConvergence, EquilibriumNonConvergence, DegenerateBranch)


def _out(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _print_checks(checks) -> bool:
    ok = True
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        ok &= c.passed
    return ok


def cmd_point(args) -> int:
    pc = load_config(args.config, kind="point")
    rows = run_point_driver(pc)
    path = _out(args) / "point.csv"
    write_rows(path, POINT_COLUMNS, rows)
    print(f"wrote {path}")
    return EXIT_OK


def _run_config(cfg, out: Path, stem: str) -> bool:
    result = run(cfg)
    write_run(result, out, stem)
    res = {stem: result}
    return _print_checks([check_dissipation(res), check_kkt(res), check_structure(res)])


def cmd_run(args) -> int:
    if args.list:
        for name, s in library().items():
            print(f"{name:18s} {s.description}")
        return EXIT_OK
    if args.config:
        cfg = load_config(args.config)
        ok = _run_config(cfg, _out(args), Path(args.config).stem)
        return EXIT_OK if ok else EXIT_CHECK
    if not args.scenario:
        print("run: give a scenario name or --config", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outcome = run_scenario(args.scenario, _out(args), seed=args.seed)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if _print_checks(outcome.checks) else EXIT_CHECK


def cmd_validate(args) -> int:
    diags = validate_config(args.config)
    for d in diags:
        print(f"{args.config}: {d}")
    if diags:
        return EXIT_CONFIG
    print(f"{args.config}: ok")
    return EXIT_OK


def _set_param(cfg, key: str, value: float):
    """Return a copy of ``cfg`` with ``material.<name>`` or
    ``stepping.<name>`` replaced."""
    sec, _, name = key.partition(".")
    if sec == "material":
        if name in ("mu", "lambda"):
            el = replace(cfg.params.elastic, **{"mu" if name == "mu" else "lam": value})
            return cfg.replace(params=replace(cfg.params, elastic=el))
        if name in ("sigma0", "sigma_hat0", "r1", "r2"):
            yp = replace(cfg.params.yield_params, **{name: value})
            return cfg.replace(params=replace(cfg.params, yield_params=yp))
        return cfg.replace(params=replace(cfg.params, **{name: value}))
    if sec == "stepping":
        return cfg.replace(stepping=replace(cfg.stepping, **{name: value}))
    raise ValueError(f"cannot sweep over {key!r}")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = [float(v) for v in args.values.split(",")]
    out = _out(args)
    rows = []
    ok = True
    for v in values:
        try:
            c = _set_param(cfg, args.param, v)
        except (TypeError, ValueError) as exc:
            print(f"sweep: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        result = run(c)
        stem = f"{Path(args.config).stem}_{args.param.split('.')[-1]}_{v:g}"
        write_run(result, out, stem)
        res = {stem: result}
        print(f"[{args.param} = {v:g}]")
        ok &= _print_checks([check_dissipation(res), check_kkt(res), check_structure(res)])
        fin = result.records[-1]
        rows.append([v, fin.max_gamma_p, fin.max_omega_p, fin.norm_skew_p, fin.dissipation_cum])
    write_rows(out / "sweep.csv", [args.param, "max_gamma_p", "max_omega_p", "norm_skew_p", "dissipation_cum"], rows)
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gradplast", description="gradient plasticity with plastic spin")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs single-threaded")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized scenarios")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", parents=[common], help="material-point driver")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("run", parents=[common], help="run a built-in scenario or a config file")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--config")
    p.add_argument("--list", action="store_true", help="list built-in scenarios")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", parents=[common], help="check a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", parents=[common], help="run a config for several parameter values")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="e.g. material.Lc")
    p.add_argument("--values", required=True, help="comma separated values")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
