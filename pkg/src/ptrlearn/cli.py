"""Command line entry point: ``ptrlearn {coldstart,al,ptr-fit,graph-compare}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import harness


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptrlearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("coldstart", "compare cold-start methods on held-out balanced accuracy"),
        ("al", "PAL_PTR against RS-initialized pool-based active learning"),
        ("ptr-fit", "fit proper topological regions and dump them as JSON"),
        ("graph-compare", "best PuritySize of Rips vs sigma-Rips graphs"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment JSON (a manifest.json also works)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="base split seed (overrides the config)")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = harness.ExperimentConfig.from_json(args.config)
        overrides = {}
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        cfg = dataclasses.replace(cfg, **overrides)
        if args.jobs < 1:
            raise ValueError("--jobs must be >= 1")
        if args.command == "coldstart":
            paths = harness.emit_results(harness.run_coldstart(cfg, args.jobs), cfg.output_dir, cfg, args.command)
        elif args.command == "al":
            paths = harness.emit_results(harness.run_al(cfg, args.jobs), cfg.output_dir, cfg, args.command)
        elif args.command == "ptr-fit":
            paths = harness.ptr_fit(cfg, cfg.output_dir)
        else:
            paths = harness.graph_compare(cfg, cfg.output_dir, args.jobs)
    except Exception as exc:  # report any failed run with a diagnostic
        print(f"ptrlearn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for p in paths.values() if isinstance(paths, dict) else paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
