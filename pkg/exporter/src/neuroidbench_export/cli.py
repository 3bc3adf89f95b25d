"""Command line entry point: neuroidbench-export."""

from __future__ import annotations

import argparse
import sys

from . import registry
from .errors import ExportError
from .export import ExportSpec, export, verify


def build_parser():
    parser = argparse.ArgumentParser(
        prog="neuroidbench-export",
        description="Convert a cached public ERP dataset into an epoch-bundle directory.",
    )
    parser.add_argument("--dataset", required=True, metavar="KEY",
                        help="dataset key, one of: " + ", ".join(sorted(registry.REGISTRY)))
    parser.add_argument("--out", required=True, metavar="DIR",
                        help="bundle directory to create")
    parser.add_argument("--subjects", nargs="+", metavar="ID",
                        help="subset of subjects (with or without the sub- prefix)")
    parser.add_argument("--cache", metavar="DIR",
                        help=f"cache root (default ${registry.CACHE_ENV} or ~/.cache/neuroidbench-export)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        registry.resolve_key(args.dataset)
    except KeyError:
        parser.error(f"unknown dataset {args.dataset!r}; supported: " + ", ".join(sorted(registry.REGISTRY)))

    try:
        bundle_dir = export(
            ExportSpec(
                dataset_key=args.dataset,
                output_dir=args.out,
                subjects=tuple(args.subjects) if args.subjects else None,
                cache_dir=args.cache,
            )
        )
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = verify(bundle_dir)
    print(f"exported {report.n_subjects} subjects, {report.n_recordings} recordings, "
          f"{report.n_events} events to {bundle_dir}")
    for note in report.notes:
        print(f"note: {note}")
    for finding in report.findings:
        print(f"warning: {finding}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
