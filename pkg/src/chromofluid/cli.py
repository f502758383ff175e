"""Command line entry point.

    chromofluid run scenario.json [--output DIR]
    chromofluid wong scenario.json [--output DIR]
    chromofluid check [--verbose]

Exit codes: 0 success, 2 invalid configuration or initial data, 3 blow-up,
4 I/O failure, 1 failed invariant checks.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from chromofluid import kernels
from chromofluid.config import ConfigError, parse_config
from chromofluid.gauge_dynamics import ConstraintIncompatibleError, SolverError
from chromofluid.scenario import EXIT_CONFIG, EXIT_IO, run_fluid, run_wong

log = logging.getLogger("chromofluid")


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config {path}: {exc}", file=sys.stderr)
        return None, EXIT_IO
    try:
        return parse_config(text), 0
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return None, EXIT_CONFIG


def _run(args, runner) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    out = Path(args.output) if args.output else None
    try:
        return runner(cfg, out)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConstraintIncompatibleError, SolverError, ValueError) as exc:
        print(f"initial data error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def cmd_run(args) -> int:
    return _run(args, run_fluid)


def cmd_wong(args) -> int:
    return _run(args, run_wong)


def cmd_check(args) -> int:
    from chromofluid.checks import CHECKS

    failed = 0
    for name, fn in CHECKS:
        try:
            res = fn()
            ok = res.passed
            detail = f"residual={res.residual:.3e} threshold={res.threshold:.1e}"
        except Exception as exc:  # a crashing check counts as a failure
            ok = False
            detail = f"raised {type(exc).__name__}: {exc}"
        failed += not ok
        line = f"{'PASS' if ok else 'FAIL'} {name}"
        if args.verbose or not ok:
            line += f"  {detail}"
        print(line)
    print(f"{len(CHECKS) - failed}/{len(CHECKS)} checks passed (backend: {kernels.backend()})")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chromofluid", description=__doc__.splitlines()[0])
    ap.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a fluid or field scenario")
    p.add_argument("config")
    p.add_argument("--output", help="output directory (overrides the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("wong", help="integrate a charged test particle")
    p.add_argument("config")
    p.add_argument("--output", help="output directory (overrides the config)")
    p.set_defaults(func=cmd_wong)

    p = sub.add_parser("check", help="run the bundled invariant checks")
    p.add_argument("-v", "--verbose", action="store_true", help="print residuals for every check")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
