"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 integration failure,
3 verification failure.  The global flags --seed, --dt and --t-end
override the corresponding scenario values for the run/compare/figure
subcommands.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, IntegrationError
from .scenario import integrate, parse_scenario, shipped_scenario
from .verify import all_passed, verify_appendix_b, verify_appendix_c, verify_ces, verify_thermo

__all__ = ["run_cli", "console_entry"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="choicedyn",
        description="Non-equilibrium discrete-choice dynamics: run scenarios and verification suites.",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--dt", type=float, default=None, help="override the scenario time step")
    parser.add_argument("--t-end", type=float, default=None, help="override the scenario horizon")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario and write its trajectory CSV")
    p_run.add_argument("scenario", help="path to a .scn scenario file")
    p_run.add_argument("--out", required=True, help="output CSV path")

    p_cmp = sub.add_parser("compare", help="run the scenario's engine and the MNL engine side by side")
    p_cmp.add_argument("scenario", help="path to a .scn scenario file")
    p_cmp.add_argument("--out-prefix", default=None,
                       help="prefix for <prefix>_neq.csv and <prefix>_mnl.csv (default: scenario stem)")

    for name in ("verify-ces", "verify-thermo", "verify-appendix-b", "verify-appendix-c"):
        sub.add_parser(name, help=f"run the {name.removeprefix('verify-')} verification table")

    for name in ("figure1", "figure2"):
        p_fig = sub.add_parser(name, help=f"run the shipped {name} scenario (both engines)")
        p_fig.add_argument("--out-dir", default=".", help="directory for the output CSVs")

    return parser


def _apply_overrides(sc, args):
    return sc.with_overrides(seed=args.seed, dt=args.dt, t_end=args.t_end)


def _print_checks(checks) -> int:
    width = max(len(c.name) for c in checks)
    for c in checks:
        if c.passed is None:
            status = "info"
            bound = ""
        else:
            status = "PASS" if c.passed else "FAIL"
            bound = f" (tol {c.tolerance:.0e})"
        note = f"  -- {c.note}" if c.note else ""
        print(f"{c.name:<{width}}  {c.residual:12.4e}{bound}  [{status}]{note}")
    ok = all_passed(checks)
    n_bound = sum(1 for c in checks if c.passed is not None)
    n_pass = sum(1 for c in checks if c.passed)
    print(f"{n_pass}/{n_bound} toleranced checks passed")
    return 0 if ok else 3


def _run_compare(sc, prefix: str) -> None:
    neq = integrate(sc)
    mnl_run = integrate(replace(sc, engine="mnl-equilibrium"))
    neq_path = f"{prefix}_neq.csv"
    mnl_path = f"{prefix}_mnl.csv"
    neq.to_csv(neq_path)
    mnl_run.to_csv(mnl_path)
    print(f"wrote {neq_path} and {mnl_path}")


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are config errors here
        code = exc.code or 0
        return 1 if code else 0

    try:
        if args.command == "run":
            sc = _apply_overrides(parse_scenario(args.scenario), args)
            traj = integrate(sc)
            traj.to_csv(args.out)
            print(f"wrote {args.out} ({traj.n_rows} rows, {len(traj.labels)} products)")
            return 0
        if args.command == "compare":
            sc = _apply_overrides(parse_scenario(args.scenario), args)
            prefix = args.out_prefix or Path(args.scenario).stem
            _run_compare(sc, prefix)
            return 0
        if args.command in ("figure1", "figure2"):
            sc = _apply_overrides(shipped_scenario(args.command), args)
            _run_compare(sc, str(Path(args.out_dir) / args.command))
            return 0
        if args.command == "verify-ces":
            return _print_checks(verify_ces())
        if args.command == "verify-thermo":
            return _print_checks(verify_thermo())
        if args.command == "verify-appendix-b":
            return _print_checks(verify_appendix_b())
        if args.command == "verify-appendix-c":
            return _print_checks(verify_appendix_c())
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return 2


def console_entry() -> None:
    sys.exit(run_cli())
