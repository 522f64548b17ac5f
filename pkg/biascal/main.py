#!/usr/bin/env python3
"""
biascal command-line entry point
"""

import argparse
import logging
import sys
from datetime import datetime
from typing import List, Optional

from pydantic import ValidationError

from config import Config, load_settings
from core.pipeline import CalibrationPipeline
from diffcore import InvalidInputError
from harness import Protocol
from transfercal import LossMode, Strategy

_log = logging.getLogger("biascal")

EXIT_OK, EXIT_FAILURE, EXIT_INVALID = 0, 1, 2

SUBCOMMANDS = {
    "generate-data": "generate the simulation and experiment data sets",
    "train-surrogate": "train the initial surrogate on the simulations",
    "evaluate-surrogate": "held-out R² of the trained surrogate",
    "transfer-learn": "retrain the surrogate on the training experiments",
    "baseline": "fit the PCA + linear-map output calibration",
    "crossval": "cross-validate transfer learning (and the baseline) over experiment splits",
    "synthetic-protocol": "run generate -> train -> transfer-learn -> evaluate end to end",
    "report": "re-emit tables and plots of a saved report",
}


def print_banner(command: str) -> None:
    print("=" * 60)
    print("biascal - simulation bias calibration")
    print(f"Command: {command}")
    print(f"Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print("=" * 60)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biascal", description="Transfer-learning calibration of surrogates")
    parser.add_argument("--config", help="JSON settings file (one section per component)")
    parser.add_argument("--seed", type=int, help="master seed for every seeded component")
    parser.add_argument("--out", help=f"output directory (default: BIASCAL_OUT or {Config.OUT_DIR})")
    parser.add_argument("--splits", type=int, help="number of cross-validation splits")
    parser.add_argument("--strategy", choices=[s.value for s in Strategy], help="transfer-learning strategy")
    parser.add_argument("--loss", choices=[m.value for m in LossMode], help="transfer-learning loss")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        if name == "crossval":
            cmd.add_argument("--protocol", choices=[p.value for p in Protocol])
            cmd.add_argument("--no-baseline", action="store_true", help="skip the baseline calibrator")
        elif name == "synthetic-protocol":
            cmd.add_argument("--reuse-surrogate", action="store_true",
                             help="use the saved surrogate instead of training a new one")
        elif name == "report":
            cmd.add_argument("name", help="report directory name under <out>/reports")
    return parser


def run(args: argparse.Namespace) -> None:
    settings = load_settings(args.config).with_overrides(
        seed=args.seed, n_splits=args.splits, strategy=args.strategy, loss=args.loss)
    if getattr(args, "protocol", None):
        settings = settings.model_copy(update={"splits": settings.splits.model_copy(
            update={"protocol": Protocol(args.protocol)})})
    pipeline = CalibrationPipeline(settings, args.out or Config.OUT_DIR, threads=Config.threads(),
                                   generator_manifest=Config.GENERATOR_MANIFEST)
    command = args.command

    if command == "generate-data":
        for name, path in pipeline.generate_data().items():
            print(f"[OK] {name}: {path}")
    elif command == "train-surrogate":
        _, fit = pipeline.train_surrogate()
        print(f"[OK] Surrogate trained in {fit.runtime_seconds:.1f}s on {fit.n_train} simulations")
    elif command == "evaluate-surrogate":
        print(pipeline.evaluate_surrogate().to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    elif command == "transfer-learn":
        calibrated = pipeline.transfer_learn()
        final = f"{calibrated.trace[-1]:.4g}" if calibrated.trace else "n/a"
        print(f"[OK] Retrained {sorted(calibrated.retrained)}; final loss {final}")
    elif command == "baseline":
        baseline = pipeline.baseline()
        print(f"[OK] Baseline fitted in a {baseline.compressor.dim}-dimensional compressed space")
    elif command == "crossval":
        report = pipeline.crossval(with_baseline=not args.no_baseline)
        print(pipeline.summary(report))
        if not report.complete:
            print(f"[ERROR] {len(report.failed_splits)} split(s) failed; see failed_splits.csv")
    elif command == "synthetic-protocol":
        report = pipeline.synthetic_protocol(reuse_surrogate=args.reuse_surrogate)
        print(pipeline.summary(report))
    elif command == "report":
        print(f"[OK] Re-emitted {len(pipeline.report(args.name))} files")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, Config.LOG_LEVEL, logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    print_banner(args.command)
    if not Config.validate():
        print("[ERROR] Invalid environment configuration")
        return EXIT_INVALID
    try:
        run(args)
    except (InvalidInputError, ValidationError) as e:
        print(f"[ERROR] {e}")
        return EXIT_INVALID
    except Exception as e:
        _log.exception("[ERROR] %s failed", args.command)
        print(f"[ERROR] {type(e).__name__}: {e}")
        return EXIT_FAILURE
    print(f"[OK] {args.command} finished")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
