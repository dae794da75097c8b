"""Command line entry points: run, sweep, check, compare."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .harness import ConfigError


def _add_common(p: argparse.ArgumentParser, *, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="path to a JSON config file")
    p.add_argument("--out", default=None, help="output directory (beats TICOPD_OUT and the config)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--stride", type=int, default=None, help="override the metrics stride")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ticopd",
        description="Decentralized optimization experiments with compressed communication.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured algorithms, write CSVs and a manifest")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="grid-sweep step sizes over a base config")
    _add_common(p_sweep)
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel sweep points")

    p_check = sub.add_parser("check", help="self-check compressors, graphs, and objectives")
    _add_common(p_check)

    p_cmp = sub.add_parser("compare", help="align finished runs on iterations and bit budgets")
    p_cmp.add_argument("dirs", nargs="+", help="output directories (or manifest paths) to compare")
    p_cmp.add_argument("--checkpoints", type=int, default=8, help="table rows per alignment")
    p_cmp.add_argument("--quiet", action="store_true", help="suppress the formatted tables")
    return parser


def _cmd_run(args) -> int:
    cfg = harness.normalize_config(harness.load_config(args.config))
    out = harness.resolve_out_dir(args.out, cfg)
    _, code = harness.run_experiment(
        cfg, out, seed_override=args.seed, stride_override=args.stride,
        quiet=args.quiet,
    )
    if not args.quiet:
        print(f"wrote {out}/manifest.json")
    return code


def _cmd_sweep(args) -> int:
    raw = harness.load_config(args.config)
    cfg = harness.normalize_sweep(raw)
    if args.seed is not None:
        cfg["base"]["seed"] = args.seed
    if args.stride is not None:
        cfg["base"]["stride"] = args.stride
    out = harness.resolve_out_dir(args.out, cfg)
    _, code = harness.sweep(cfg, out, workers=args.workers, quiet=args.quiet)
    if not args.quiet:
        print(f"wrote {out}/summary.json")
    return code


def _cmd_check(args) -> int:
    raw = harness.load_config(args.config)
    lines, ok = harness.check(raw)
    print("\n".join(lines))
    return 0 if ok else 1


def _cmd_compare(args) -> int:
    result = harness.compare(args.dirs, checkpoints=args.checkpoints)
    if not args.quiet:
        print(harness.format_compare(result))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "check": _cmd_check,
        "compare": _cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
