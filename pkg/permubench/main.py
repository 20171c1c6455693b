"""
Command line entry point.

Sets up structured logging and dispatches the permubench subcommands:
train, sweep, eval, analyze, permute and stats.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import structlog

from permubench.config import settings
from permubench.connectors import save_container
from permubench.models.dataset import DatasetKind, Split
from permubench.models.run_record import RunRecord
from permubench.models.train_config import SweepConfig, TrainConfig
from permubench.services.dataset_service import load_dataset
from permubench.services.harness import ExperimentService
from permubench.services.randomize import apply_permutation, build_permutation, save_permutation
from permubench.services.report import ReportError, ReportService, write_sample_grid


def setup_logging() -> None:
    """Configure structlog with console output in development and JSON otherwise."""
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.CallsiteParameterAdder(
                parameters=[structlog.processors.CallsiteParameter.FUNC_NAME]
            ),
            structlog.processors.TimeStamper(fmt="ISO"),
            structlog.dev.ConsoleRenderer()
            if settings.is_development
            else structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    logging.basicConfig(
        format="%(message)s",
        level=settings.log_level_int,
        handlers=[logging.StreamHandler(sys.stderr)],
    )


def _prepare_output(target: Path | None) -> None:
    """Create the configured output directories when no explicit target is given."""
    if target is None:
        settings.ensure_directories()


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig.from_file(args.config)
    _prepare_output(args.output_dir)
    service = ExperimentService(output_dir=args.output_dir, save_checkpoints=not args.no_checkpoint)
    record = service.run_experiment(cfg)
    print(
        json.dumps(
            {
                "run": record.name,
                "peak_test_accuracy": record.peak_test_accuracy,
                "final_test_accuracy": record.final_test_accuracy,
            }
        )
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    sweep = SweepConfig.from_file(args.config)
    _prepare_output(args.output_dir)
    service = ExperimentService(
        output_dir=args.output_dir, save_checkpoints=not args.no_checkpoint, workers=args.workers
    )
    result = service.run_sweep(sweep)
    print(result.summary.to_string(index=False))
    if result.trend is not None:
        print(f"spearman trend: {result.trend:.3f}")
    return 0 if all(record.completed for record in result.records) else 1


def _cmd_eval(args: argparse.Namespace) -> int:
    accuracy, matrix = ExperimentService().evaluate_checkpoint(args.checkpoint, args.split)
    print(json.dumps({"split": args.split, "accuracy": accuracy, "confusion": [list(r) for r in matrix.counts]}))
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    _prepare_output(args.out)
    records = [RunRecord.from_file(path) for path in args.runs]
    written = ReportService().emit_report(records, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_permute(args: argparse.Namespace) -> int:
    dataset = load_dataset(DatasetKind(args.dataset), args.inputs, Split(args.split))
    height, width, _ = dataset.image_shape
    permutation = build_permutation(
        args.scheme, height, width, args.seed, patch_side=args.patch_side, distance=args.distance
    )
    permuted = dataset.with_images(
        apply_permutation(dataset.images, permutation), permutation=permutation.describe()
    )
    out = Path(args.out)
    save_container(permuted, out / f"{args.dataset}_{args.split}.json")
    save_permutation(permutation, out / "permutation.json")
    if args.samples > 0:
        count = min(args.samples, len(dataset))
        ext = "pgm" if dataset.image_shape[2] == 1 else "ppm"
        if count:
            write_sample_grid(dataset.images[:count], out / f"samples_natural.{ext}")
            write_sample_grid(permuted.images[:count], out / f"samples_permuted.{ext}")
    print(out / f"{args.dataset}_{args.split}.json")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    _prepare_output(args.out)
    dataset = load_dataset(DatasetKind(args.dataset), args.inputs, Split(args.split))
    for path in ReportService().write_class_statistics(dataset, args.out):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permubench", description="Permuted-image CNN/MLP experiment engine"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one experiment from a JSON config")
    train.add_argument("--config", required=True, type=Path)
    train.add_argument("--output-dir", type=Path, default=None)
    train.add_argument("--no-checkpoint", action="store_true")
    train.set_defaults(handler=_cmd_train)

    sweep = sub.add_parser("sweep", help="run one experiment per sweep axis value")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--output-dir", type=Path, default=None)
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--no-checkpoint", action="store_true")
    sweep.set_defaults(handler=_cmd_sweep)

    evaluate = sub.add_parser("eval", help="evaluate a run checkpoint")
    evaluate.add_argument("--checkpoint", required=True, type=Path)
    evaluate.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)
    evaluate.set_defaults(handler=_cmd_eval)

    analyze = sub.add_parser("analyze", help="write a report for run records")
    analyze.add_argument("--runs", required=True, nargs="+", type=Path)
    analyze.add_argument("--out", type=Path, default=None)
    analyze.set_defaults(handler=_cmd_analyze)

    kinds = [k.value for k in DatasetKind]
    permute = sub.add_parser("permute", help="write a permuted dataset and its permutation")
    permute.add_argument("--dataset", required=True, choices=kinds)
    permute.add_argument("--inputs", required=True, nargs="+", type=Path)
    permute.add_argument("--split", choices=[s.value for s in Split], default=Split.TRAIN.value)
    permute.add_argument("--scheme", required=True, choices=["none", "pixel", "patch", "local"])
    permute.add_argument("--patch-side", type=int, default=None)
    permute.add_argument("--distance", type=int, default=None)
    permute.add_argument("--seed", type=int, default=0)
    permute.add_argument("--samples", type=int, default=16, help="images in the sample mosaics (0 disables)")
    permute.add_argument("--out", required=True, type=Path)
    permute.set_defaults(handler=_cmd_permute)

    stats = sub.add_parser("stats", help="write per-class mean/std images")
    stats.add_argument("--dataset", required=True, choices=kinds)
    stats.add_argument("--inputs", required=True, nargs="+", type=Path)
    stats.add_argument("--split", choices=[s.value for s in Split], default=Split.TRAIN.value)
    stats.add_argument("--out", type=Path, default=None)
    stats.set_defaults(handler=_cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the subcommand and map failures to exit code 1."""
    args = build_parser().parse_args(argv)
    setup_logging()
    logger = structlog.get_logger("permubench.cli")
    logger.debug("Starting permubench", command=args.command, version=settings.app_version)
    try:
        return int(args.handler(args))
    except (ValueError, ReportError, OSError) as e:
        logger.error(
            "Command failed",
            command=args.command,
            error=str(e),
            error_type=type(e).__name__,
            field=getattr(e, "field", None),
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
