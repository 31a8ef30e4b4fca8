"""Command line front end.

Subcommands map onto the experiment kinds plus two artifact generators:

* ``generate``  -- write a random network instance as CSV
* ``schedule``  -- write the cell grid's TDMA slot assignment as CSV
* ``simulate``  -- throughput experiment (kind=throughput)
* ``cut``       -- cut-capacity experiment (kind=cut)
* ``emst``      -- EMST growth experiment (kind=emst)
* ``scaling``   -- any experiment kind named in the config file

Every subcommand accepts ``--config <path>`` (line-oriented ``key = value``
with ``#`` comments), ``--seed`` and ``--out``.  Exit codes: 0 success,
2 invalid configuration, 3 tolerance failure under ``--check``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .cells import build_grid, build_schedule
from .experiments import ConfigError, ExperimentSpec, parse_config, run
from .geometry import generate_network

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3


def _add_common(sub):
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--out", help="output directory for CSV artifacts")
    sub.add_argument(
        "--check",
        action="store_true",
        help="verify the result against the config's tolerance band",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multicap",
        description="capacity scaling experiments on random wireless networks",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    g = subs.add_parser("generate", help="write a network instance CSV")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output CSV path")

    s = subs.add_parser("schedule", help="write a TDMA schedule CSV")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--out", required=True, help="output CSV path")

    for name in ("simulate", "cut", "emst", "scaling"):
        _add_common(subs.add_parser(name, help=f"run the {name} experiment"))
    return parser


_DEFAULT_KIND = {"simulate": "throughput", "cut": "cut", "emst": "emst"}


def _load_spec(args, command: str) -> ExperimentSpec:
    if args.config:
        spec = parse_config(args.config)
    else:
        if command == "scaling":
            raise ConfigError("the scaling subcommand requires --config")
        spec = ExperimentSpec(kind=_DEFAULT_KIND[command])
    if command in _DEFAULT_KIND and spec.kind != _DEFAULT_KIND[command]:
        raise ConfigError(
            f"subcommand {command} expects kind={_DEFAULT_KIND[command]}"
        )
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.out is not None:
        spec = replace(spec, out_dir=args.out)
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "generate":
        if args.n < 1:
            print("error: n must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        generate_network(args.n, args.seed).to_csv(args.out)
        print(f"wrote {args.out}")
        return EXIT_OK

    if args.command == "schedule":
        try:
            grid = build_grid(args.t)
            schedule = build_schedule(grid, args.delta)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        schedule.to_csv(args.out)
        print(
            f"wrote {args.out} ({grid.cols}x{grid.rows} cells, "
            f"L={schedule.L}, {schedule.num_slots} slots)"
        )
        return EXIT_OK

    try:
        spec = _load_spec(args, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run(spec)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(f"kind={spec.kind} slope={result.slope:.4f} r2={result.r2:.4f}")
    for x, mean, se in result.points:
        print(f"  x={x:g} mean={mean:.6g} stderr={se:.3g}")

    if args.check:
        ok = True
        if spec.expected_slope is not None:
            tol = spec.slope_tol if spec.slope_tol is not None else 0.5
            if abs(result.slope - spec.expected_slope) > tol:
                print(
                    f"CHECK FAIL: slope {result.slope:.4f} outside "
                    f"{spec.expected_slope} +/- {tol}"
                )
                ok = False
        if spec.expected_value is not None:
            tol = spec.value_tol if spec.value_tol is not None else 0.1
            got = result.points[0][1]
            if abs(got - spec.expected_value) > tol:
                print(
                    f"CHECK FAIL: value {got:.4f} outside "
                    f"{spec.expected_value} +/- {tol}"
                )
                ok = False
        if not ok:
            return EXIT_CHECK
        print("CHECK OK")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
