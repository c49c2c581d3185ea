"""Command-line front end.

    shrinkerlab run --config suite.toml [--out-dir DIR] [--jobs N] [--tol X] [--seed S]
    shrinkerlab list [--fixtures DIR]
    shrinkerlab functional eval_F --surface plane --set t=[0.5,1,2]
    shrinkerlab moment --config suite.toml      # only the moment scenarios

Exit status: 0 when every declared check passes, 1 when a check fails or a
scenario raises, 2 when the config or arguments do not validate (in which
case nothing is written).
"""

import argparse
import os
import sys
from pathlib import Path

from .. import catalog
from ..errors import ValidationError
from .operations import GROUPS, REGISTRY
from .runner import (context_for, load_config, parse_overrides, parse_value, run_all,
                     scenarios_from_config, validate, write_reports)

DEFAULT_OUT = "shrinkerlab-out"


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out-dir", default=DEFAULT_OUT,
                   help="report directory (SHRINKERLAB_OUT takes precedence)")
    p.add_argument("--tol", type=float, default=None, help="default tolerance for checks")
    p.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel")
    p.add_argument("--seed", type=int, default=None, help="seed for sampled cross-sections")
    p.add_argument("--set", dest="overrides", action="append", metavar="[ID.]KEY=VALUE",
                   help="override a scenario parameter (TOML value syntax)")
    p.add_argument("--fixtures", default=None,
                   help="fixtures directory (default: SHRINKERLAB_FIXTURES or the bundled set)")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="shrinkerlab",
                                     description="Numerical lab for self-shrinkers of "
                                                 "mean curvature flow.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run every scenario in a config")
    run.add_argument("--config", required=True)
    ls = sub.add_parser("list", help="print built-in surfaces, test functions and fixtures")
    ls.add_argument("--fixtures", default=None)
    for group in GROUPS:
        names = sorted(n for n, op in REGISTRY.items() if op.group == group)
        g = sub.add_parser(group, parents=[common],
                           help=f"{group} operations: {', '.join(names)}")
        g.add_argument("operation", nargs="?", choices=names,
                       help="operation to run as a one-scenario config")
        g.add_argument("--config", help="run only this group's scenarios from a config")
        g.add_argument("--surface", help="catalog id, fixture id or surface .toml")
        g.add_argument("--moment", help="mass-function id or .moment file")
        g.add_argument("--graph", help="graph fixture id or .graph file")
        g.add_argument("--id", dest="scenario_id", help="scenario id for the report files")
    return parser


def _single(args):
    """One-scenario config from command-line arguments."""
    entry = {"id": args.scenario_id or args.operation, "operation": args.operation}
    for key in ("surface", "moment", "graph"):
        value = getattr(args, key)
        if value is not None:
            entry[key] = value
    for key, value in parse_overrides(args.overrides).get(None, {}).items():
        entry[key] = value
    return {"scenario": [entry]}


def _plan(args):
    if args.command == "run" or getattr(args, "config", None):
        if args.command != "run" and args.operation:
            raise ValidationError("give either an operation or --config, not both")
        doc = load_config(args.config)
        base = Path(args.config).resolve().parent
        overrides = parse_overrides(args.overrides)
        scenarios = scenarios_from_config(doc, overrides, where=args.config)
        if args.command != "run":
            scenarios = [s for s in scenarios if REGISTRY[s.operation].group == args.command]
            if not scenarios:
                raise ValidationError(f"{args.config}: no {args.command} scenarios")
        run_table = doc.get("run", {})
    else:
        if not args.operation:
            raise ValidationError(f"{args.command}: give an operation or --config")
        scenarios = scenarios_from_config(_single(args), where="command line")
        base, run_table = Path.cwd(), {}
    ctx = context_for(run_table, base, args.tol, args.seed, args.fixtures)
    validate(scenarios, ctx)
    jobs = args.jobs if args.jobs != 1 else int(run_table.get("jobs", 1))
    if jobs < 1:
        raise ValidationError("--jobs must be at least 1")
    return scenarios, ctx, jobs


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(catalog.listing(args.fixtures))
        return 0
    try:
        scenarios, ctx, jobs = _plan(args)
    except ValidationError as exc:
        print(f"shrinkerlab: error: {exc}", file=sys.stderr)
        return 2
    out_dir = os.environ.get("SHRINKERLAB_OUT") or args.out_dir
    results = run_all(scenarios, ctx, jobs)
    write_reports(results, out_dir)
    for res in results:
        line = f"{res['status'].upper():<5} {res['id']}  [{res['operation']}: {res['anchor']}]"
        if res["error"]:
            line += f"\n      {res['error']}"
        print(line)
    passed = sum(r["status"] == "pass" for r in results)
    print(f"{passed}/{len(results)} scenarios passed; reports in {out_dir}")
    return 0 if passed == len(results) else 1


__all__ = ["build_parser", "main", "parse_value"]
