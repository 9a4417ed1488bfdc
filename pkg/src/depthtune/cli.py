"""Command-line entry point: ``depthtune <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .harness import (emit_report, run_fmodel_pretrain, run_surrogate, run_training,
                      run_validation)


def _common(p):
    p.add_argument("--config", type=Path, help="INI configuration file")
    p.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    p.add_argument("--out", type=Path, default=Path("runs/default"), help="output directory")
    p.add_argument("--dataset", help="dataset CSV path or bundled name (boston, iris)")


def build_parser():
    parser = argparse.ArgumentParser(prog="depthtune", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the two-stage training loop")
    _common(p)

    p = sub.add_parser("validate", help="frozen validation episodes from saved weights")
    _common(p)
    p.add_argument("--weights", type=Path, help="weights directory (default: OUT/weights)")

    p = sub.add_parser("fmodel-pretrain", help="constant-target F-model experiment")
    _common(p)

    p = sub.add_parser("surrogate", help="controller runs on an analytic environment")
    _common(p)
    p.add_argument("--tolerance", type=int, default=0,
                   help="count a seed as successful within this many layers of the argmin")

    p = sub.add_parser("report", help="plot-data CSVs (and SVGs) from a run directory")
    _common(p)
    p.add_argument("--no-svg", action="store_true")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.dataset:
        cfg = cfg.with_dataset(args.dataset)
    return cfg


def dispatch(args):
    cfg = resolve_config(args)
    if args.command == "train":
        result = run_training(cfg, args.out)
        print(f"trained {len(result.episodes)} episodes -> {args.out}")
    elif args.command == "validate":
        logs = run_validation(cfg, args.weights or args.out / "weights", args.out)
        print(f"validated {len(logs)} episodes, final layers "
              f"{[ep.final_layer for ep in logs]} -> {args.out / 'validation'}")
    elif args.command == "fmodel-pretrain":
        report = run_fmodel_pretrain(cfg, args.out)
        for r in report.rows:
            print(f"{r.dataset}\ttrue={r.target:g}\ttrain={r.train:.4f}\ttest={r.test:.4f}")
    elif args.command == "surrogate":
        results = run_surrogate(cfg, args.out, tolerance=args.tolerance)
        wins = sum(r.success for r in results)
        print(f"{cfg.surrogate.family}: {wins}/{len(results)} seeds reached the argmin")
    elif args.command == "report":
        files = emit_report(args.out, svg=not args.no_svg)
        print(f"wrote {len(files)} report CSVs -> {args.out / 'report'}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        dispatch(args)
    except (OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
