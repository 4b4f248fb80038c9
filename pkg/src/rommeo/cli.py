"""Command-line frontend: `run`, `solve`, `check`, and `plot` subcommands."""

from __future__ import annotations

import argparse
import json
import sys

from . import harness


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rommeo",
                                     description="Multi-agent max-entropy RL experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded multi-trial experiment")
    run.add_argument("--config", required=True, help="JSON experiment config file")
    run.add_argument("--trials", type=int, help="override trial count")
    run.add_argument("--seed", type=int, help="override base seed")
    run.add_argument("--out", help="override output directory")
    run.add_argument("--workers", type=int, help="override worker count")

    solve = sub.add_parser("solve", help="exact fixed-point solve of a discrete game")
    solve.add_argument("--game", default="climbing")
    solve.add_argument("--alpha", type=float, default=1.0)
    solve.add_argument("--gamma", type=float, default=0.0)

    check = sub.add_parser("check", help="run a property suite")
    check.add_argument("--suite", required=True,
                       help=f"one of {sorted(harness.CHECK_SUITES)} or 'all'")

    plot = sub.add_parser("plot", help="render SVG figures from a results directory")
    plot.add_argument("--results", required=True)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = harness.ExperimentConfig.from_json(args.config)
            overrides = {"trials": args.trials, "seed": args.seed,
                         "out_dir": args.out, "workers": args.workers}
            updates = {k: v for k, v in overrides.items() if v is not None}
            if updates:
                cfg = harness.ExperimentConfig(**{**cfg.to_dict(), **updates})
            out = harness.run_experiment(cfg)
            print(f"results written to {out}")
            return 0
        if args.command == "solve":
            print(json.dumps(harness.solve_game(args.game, args.alpha, args.gamma), indent=2))
            return 0
        if args.command == "check":
            reports = harness.run_checks(args.suite)
            for report in reports:
                print(json.dumps(report))
            return 0 if all(r["passed"] for r in reports) else 1
        if args.command == "plot":
            for path in harness.plot_results(args.results):
                print(path)
            return 0
    except harness.ConfigError as e:
        parser.error(str(e))
    return 2


if __name__ == "__main__":
    sys.exit(main())
