"""Command-line entry point: ``run``, ``validate`` and ``presets``."""
from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from . import runner
from .errors import CapacityError, ConfigError, GaugeChainError
from .interaction import PRESETS

EXIT_OK, EXIT_IDENTITY, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaugechain", description="Finite-volume gauge-chain identity checks.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the configured suites and write CSV tables")
    v = sub.add_parser("validate", help="print diagnostics for a config without running it")
    for q in (r, v):
        q.add_argument("config", help="TOML experiment file")
        q.add_argument("--seed", type=int, help="override the config seed")
        q.add_argument("--max-dim", type=int, help="largest dense dimension allowed")
    r.add_argument("--out", help="output directory (default: the config's 'out')")
    r.add_argument("--jobs", type=int, help="worker threads for independent cells")
    r.add_argument("-q", "--quiet", action="store_true", help="print failures only")
    sub.add_parser("presets", help="list interaction presets")
    return p


def _overrides(args) -> dict:
    return {"seed": args.seed, "max_dim": args.max_dim, "out": getattr(args, "out", None),
            "jobs": getattr(args, "jobs", None)}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        for name, fn in PRESETS.items():
            doc = (fn.__doc__ or "").strip().splitlines()
            print(f"{name:14s} {doc[0] if doc else ''}")
        return EXIT_OK
    try:
        if args.command == "validate":
            cfg = cfgmod.load(args.config, _overrides(args), lenient=True)
            for diag in runner.validate(cfg):
                print(diag)
            return EXIT_OK
        cfg = cfgmod.load(args.config, _overrides(args))
        bundle = runner.run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except GaugeChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    for c in bundle.checks:
        if not c.passed or not args.quiet:
            print(c.describe())
    for note in bundle.notes:
        print(f"note: {note}")
    n_fail = len(bundle.failures)
    print(f"{len(bundle.checks) - n_fail}/{len(bundle.checks)} checks passed; tables in {cfg.out}")
    return EXIT_OK if bundle.passed else EXIT_IDENTITY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
