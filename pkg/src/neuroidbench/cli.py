"""Command line entry point: `neuroidbench run --config benchmark.yml`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import parse_config
from .errors import BenchmarkError
from .runner import run


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="neuroidbench",
        description="Benchmark brainwave authentication pipelines from a YAML config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute a benchmark configuration")
    run_p.add_argument("--config", required=True, metavar="<file.yml>", help="YAML config file")
    run_p.add_argument("--output", default="results", metavar="<dir>", help="report directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the evaluation seed")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel cell workers")
    run_p.add_argument(
        "--evaluation", choices=["single", "multi"], default=None, help="override the session scheme"
    )
    run_p.add_argument(
        "--attacker", choices=["known", "unknown"], default=None, help="override the attacker model"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
    except BenchmarkError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print("--seed must be >= 0", file=sys.stderr)
            return 2
        config.evaluation["seed"] = args.seed
    if args.evaluation is not None:
        config.evaluation["scheme"] = {"single": "single_session", "multi": "multi_session"}[
            args.evaluation
        ]
    if args.attacker is not None:
        config.evaluation["attacker"] = args.attacker
    try:
        record = run(config, args.output, jobs=max(1, args.jobs))
    except BenchmarkError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    for cell in record.cells:
        if cell.error is not None:
            print(f"{cell.dataset} / {cell.pipeline}: FAILED ({cell.error})")
        else:
            from .metrics import aggregate

            agg = aggregate(cell.reports)[0]
            print(
                f"{cell.dataset} / {cell.pipeline}: "
                f"eer={agg['eer_mean']:.4f} (std {agg['eer_std']:.4f}, "
                f"{len(cell.reports)} score sets, {len(cell.skips)} skips)"
            )
    print(f"reports written to {args.output} in {record.wall_time_s:.1f} s")
    return 1 if record.failed else 0


if __name__ == "__main__":
    sys.exit(main())
