"""
Experiment harness: config-driven training runs and sweeps.

A run loads both splits, builds one permutation and applies it to every
train and test image, trains a freshly initialized network with Adam and
per-epoch seeded shuffling, evaluates the full test split after every
epoch, and persists the outcome in its own run directory:

    <output_dir>/<run name>/record.json       RunRecord
    <output_dir>/<run name>/curve.csv         epoch,train_acc,test_acc,loss
    <output_dir>/<run name>/permutation.json  the permutation document
    <output_dir>/<run name>/checkpoint/       final parameters (optional)

A sweep runs one such experiment per axis value under
<output_dir>/<sweep name>/ and writes summary.csv next to the runs.
"""

import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from pydantic import ValidationError

from permubench.config import settings
from permubench.connectors import DatasetError
from permubench.models.architecture import ArchitectureError, build_model
from permubench.models.confusion import ConfusionMatrix
from permubench.models.dataset import LabeledDataset, Split
from permubench.models.layers import ShapeError
from permubench.models.permutation import Permutation
from permubench.models.run_record import EpochMetrics, RunRecord
from permubench.models.train_config import RandomizationKind, SweepAxis, SweepConfig, TrainConfig
from permubench.nn import (
    AdamState,
    CheckpointError,
    Network,
    adam_step,
    load_checkpoint,
    save_checkpoint,
    softmax_cross_entropy,
)
from permubench.utils import derive_seed, make_generator

from .analysis import UndefinedCorrelationError, confusion, spearman
from .dataset_service import load_dataset, subset_per_class
from .randomize import (
    PermutationError,
    apply_permutation,
    build_permutation,
    load_permutation,
    patches_per_side,
    permutation_document,
    permutation_hash,
    save_permutation,
    select_channel,
)

logger = structlog.get_logger("permubench.harness")

RECORD_NAME = "record.json"
CURVE_NAME = "curve.csv"
PERMUTATION_NAME = "permutation.json"
CHECKPOINT_NAME = "checkpoint"
SUMMARY_NAME = "summary.csv"
EVAL_BATCH_SIZE = 256


class ExperimentError(ValueError):
    """Raised when a run cannot be carried out; names the responsible config field."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class SweepResult:
    """Records of a sweep in axis order, the summary table and its rank trend."""

    sweep: SweepConfig
    records: list[RunRecord]
    summary: pd.DataFrame
    trend: float | None


def evaluate(
    network: Network, dataset: LabeledDataset, batch_size: int = EVAL_BATCH_SIZE
) -> tuple[float, ConfusionMatrix]:
    """
    Accuracy and confusion matrix of argmax predictions on a dataset.

    Ties between logits go to the lowest class index.

    Raises:
        ShapeError: If the dataset images do not match the network input
    """
    if dataset.image_shape != network.spec.input_shape:
        raise ShapeError("dataset does not fit the network", dataset.image_shape, network.spec.input_shape)
    preds = network.predict(dataset.images, batch_size)
    matrix = confusion(preds, dataset.labels, dataset.num_classes, dataset.class_names)
    return matrix.accuracy(), matrix


def resolve_permutation(cfg: TrainConfig, height: int, width: int) -> Permutation:
    """
    The permutation of a run: the stored file if configured, else built from perm_seed.

    Raises:
        ExperimentError: With field permutation_file or randomization
    """
    if cfg.permutation_file is not None:
        try:
            p = load_permutation(cfg.permutation_file)
        except (PermutationError, OSError) as e:
            raise ExperimentError("permutation_file", str(e)) from e
        if p.size != height * width:
            raise ExperimentError(
                "permutation_file", f"permutation has size {p.size}, images have {height * width} pixels"
            )
        return p
    spec = cfg.randomization
    try:
        return build_permutation(
            spec.kind.value, height, width, cfg.perm_seed, spec.patch_side, spec.distance
        )
    except PermutationError as e:
        raise ExperimentError("randomization", str(e)) from e


def prepare_split(
    cfg: TrainConfig, split: Split, permutation: Permutation | None = None
) -> tuple[LabeledDataset, Permutation]:
    """
    Load one split as the run sees it: subset, channel-selected and permuted.

    The permutation is resolved from the config unless one is passed in, so
    the caller can build it once and reuse it for the other split.

    Raises:
        ExperimentError: Naming the config field whose value failed
    """
    paths = cfg.dataset.train if split == Split.TRAIN else cfg.dataset.test
    try:
        data = load_dataset(cfg.dataset.kind, paths, split)
    except (DatasetError, OSError) as e:
        raise ExperimentError(f"dataset.{split.value}", str(e)) from e

    subset_field = "n_per_class" if split == Split.TRAIN else "test_n_per_class"
    n_per_class = getattr(cfg, subset_field)
    if n_per_class is not None:
        try:
            data = subset_per_class(data, n_per_class, cfg.subset_seed)
        except (DatasetError, ValueError) as e:
            raise ExperimentError(subset_field, str(e)) from e

    channel = cfg.channels.index
    if channel is not None:
        try:
            data = data.with_images(select_channel(data.images, channel), channels=cfg.channels.value)
        except PermutationError as e:
            raise ExperimentError("channels", str(e)) from e

    height, width, _ = data.image_shape
    if permutation is None:
        permutation = resolve_permutation(cfg, height, width)
    try:
        images = data.images if permutation.is_identity() else apply_permutation(data.images, permutation)
    except PermutationError as e:
        field = "permutation_file" if cfg.permutation_file is not None else "randomization"
        raise ExperimentError(field, str(e)) from e
    permuted = data.with_images(
        images, permutation=permutation.describe(), permutation_hash=permutation_hash(permutation)
    )
    return permuted, permutation


def write_curve_csv(record: RunRecord, path: Path | str) -> Path:
    """
    Write the accuracy curve as epoch,train_acc,test_acc,loss.

    Wall-clock times are left out so identical runs give identical files.
    """
    path = Path(path)
    frame = pd.DataFrame(
        {
            "epoch": [m.epoch for m in record.epochs],
            "train_acc": [m.train_accuracy for m in record.epochs],
            "test_acc": [m.test_accuracy for m in record.epochs],
            "loss": [m.loss for m in record.epochs],
        }
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def summarize_sweep(sweep: SweepConfig, records: Sequence[RunRecord]) -> pd.DataFrame:
    """One row per axis value: status, peak and final test accuracy."""
    rows = []
    for value, record in zip(sweep.values, records, strict=True):
        rows.append(
            {
                "run": record.name,
                "axis": sweep.axis.value,
                "value": value,
                "status": record.status.value,
                "peak_test_accuracy": record.peak_test_accuracy,
                "final_test_accuracy": record.final_test_accuracy,
                "patches_per_side": record.metadata.get("patches_per_side"),
                "error": record.error,
            }
        )
    return pd.DataFrame(rows)


def sweep_trend(summary: pd.DataFrame) -> float | None:
    """
    Spearman rank correlation between the axis parameter and peak accuracy.

    The parameter is patches per side for patch sweeps and the distance for
    local sweeps; other axes, fewer than two completed runs or a constant
    column give None.
    """
    if summary.empty:
        return None
    axis = summary["axis"].iloc[0]
    done = summary[summary["status"] == "completed"]
    if axis == SweepAxis.PATCH_SIDE.value:
        x = done["patches_per_side"]
    elif axis == SweepAxis.DISTANCE.value:
        x = done["value"]
    else:
        return None
    if len(done) < 2:
        return None
    try:
        return spearman(x.astype(float).to_numpy(), done["peak_test_accuracy"].astype(float).to_numpy())
    except UndefinedCorrelationError:
        logger.warning("Sweep trend undefined", axis=axis, runs=len(done))
        return None


class ExperimentService:
    """
    Runs training experiments and sweeps and evaluates checkpoints.

    Run directories are created under output_dir (settings.output_dir by
    default); checkpoints are saved when save_checkpoints is on.
    """

    def __init__(
        self,
        output_dir: Path | str | None = None,
        save_checkpoints: bool | None = None,
        workers: int | None = None,
    ) -> None:
        self.output_dir = Path(output_dir if output_dir is not None else settings.output_dir)
        self.save_checkpoints = settings.save_checkpoints if save_checkpoints is None else save_checkpoints
        self.workers = workers if workers is not None else settings.sweep_workers
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    def run_experiment(
        self,
        cfg: TrainConfig,
        sweep_axis: SweepAxis | None = None,
        sweep_value: int | str | None = None,
    ) -> RunRecord:
        """
        Train and evaluate one configuration.

        Args:
            cfg: Validated run configuration
            sweep_axis: Axis when the run is part of a sweep
            sweep_value: Axis value when the run is part of a sweep

        Returns:
            The completed RunRecord, also written to <output_dir>/<name>/

        Raises:
            ExperimentError: Naming the config field responsible for the failure
        """
        log = logger.bind(run=cfg.name)
        train, permutation = prepare_split(cfg, Split.TRAIN)
        test, _ = prepare_split(cfg, Split.TEST, permutation)
        if len(train) == 0:
            raise ExperimentError("dataset.train", "training split is empty")
        if test.image_shape != train.image_shape:
            raise ExperimentError(
                "dataset.test", f"test images {test.image_shape} differ from train images {train.image_shape}"
            )
        if test.class_names != train.class_names:
            raise ExperimentError("dataset.test", "test split uses a different class table")

        try:
            spec = build_model(cfg.model, train.image_shape, train.num_classes, **cfg.model_options)
        except (ArchitectureError, TypeError) as e:
            raise ExperimentError("model", str(e)) from e
        network = Network(spec, init_seed=cfg.init_seed, precision=cfg.precision)
        log.info(
            "Starting run",
            model=spec.name.value,
            parameters=spec.parameter_count(),
            permutation=permutation.describe(),
            train_examples=len(train),
            test_examples=len(test),
            epochs=cfg.epochs,
        )

        epochs, matrix = self._train(network, train, test, cfg, log)

        run_dir = self.output_dir / cfg.name
        metadata: dict[str, object] = {
            "normalization": "uint8 / 255 to [0, 1]",
            "lr_schedule": "lr_t = base_lr / (1 + decay * t), t counted in optimizer steps",
            "generator": "numpy PCG64",
            "image_shape": list(train.image_shape),
            "train_examples": len(train),
            "test_examples": len(test),
            "parameter_count": spec.parameter_count(),
        }
        if cfg.randomization.kind == RandomizationKind.PATCH and cfg.randomization.patch_side:
            metadata["patches_per_side"] = patches_per_side(train.image_shape[0], cfg.randomization.patch_side)
        record = RunRecord(
            name=cfg.name,
            config=cfg,
            sweep_axis=sweep_axis.value if sweep_axis is not None else None,
            sweep_value=sweep_value,
            epochs=epochs,
            confusion=matrix,
            permutation=permutation.describe(),
            permutation_file=str(run_dir / PERMUTATION_NAME),
            train_permutation_hash=train.metadata["permutation_hash"],
            test_permutation_hash=test.metadata["permutation_hash"],
            metadata=metadata,
        )
        self._persist(run_dir, record, network, permutation)
        log.info(
            "Run finished",
            peak_test_accuracy=record.peak_test_accuracy,
            final_test_accuracy=record.final_test_accuracy,
            run_dir=str(run_dir),
        )
        return record

    def _train(
        self,
        network: Network,
        train: LabeledDataset,
        test: LabeledDataset,
        cfg: TrainConfig,
        log: structlog.stdlib.BoundLogger,
    ) -> tuple[list[EpochMetrics], ConfusionMatrix]:
        state = AdamState(base_lr=cfg.base_lr, decay=cfg.decay)
        n = len(train)
        images = train.images.astype(network.dtype, copy=False)
        history: list[EpochMetrics] = []
        matrix: ConfusionMatrix | None = None

        for epoch in range(1, cfg.epochs + 1):
            start = time.perf_counter()
            if cfg.shuffle:
                order = make_generator(derive_seed(cfg.shuffle_seed, epoch)).permutation(n)
            else:
                order = np.arange(n)
            loss_sum = 0.0
            correct = 0
            for begin in range(0, n, cfg.batch_size):
                batch = order[begin : begin + cfg.batch_size]
                labels = train.labels[batch]
                logits = network.forward(images[batch])
                loss, grad = softmax_cross_entropy(logits, labels)
                correct += int((logits.argmax(axis=1) == labels).sum())
                loss_sum += loss * len(batch)
                adam_step(network.params, network.backward(grad), state)

            test_accuracy, matrix = evaluate(network, test)
            metrics = EpochMetrics(
                epoch=epoch,
                train_accuracy=correct / n,
                test_accuracy=test_accuracy,
                loss=loss_sum / n,
                seconds=time.perf_counter() - start,
            )
            history.append(metrics)
            log.info(
                "Epoch finished",
                epoch=epoch,
                loss=round(metrics.loss, 6),
                train_accuracy=round(metrics.train_accuracy, 4),
                test_accuracy=round(metrics.test_accuracy, 4),
                seconds=round(metrics.seconds, 2),
            )

        assert matrix is not None
        return history, matrix

    def _persist(self, run_dir: Path, record: RunRecord, network: Network, permutation: Permutation) -> None:
        try:
            run_dir.mkdir(parents=True, exist_ok=True)
            (run_dir / RECORD_NAME).write_text(record.model_dump_json(indent=2), encoding="utf-8")
            write_curve_csv(record, run_dir / CURVE_NAME)
            save_permutation(permutation, run_dir / PERMUTATION_NAME)
            if self.save_checkpoints:
                save_checkpoint(
                    network,
                    run_dir / CHECKPOINT_NAME,
                    metadata={
                        "config": record.config.model_dump(mode="json"),
                        "permutation": permutation_document(permutation),
                    },
                )
        except (OSError, CheckpointError) as e:
            raise ExperimentError("output_dir", f"cannot write run directory {run_dir}: {e}") from e

    def run_sweep(self, sweep: SweepConfig) -> SweepResult:
        """
        One run per axis value; a failing value is recorded and the sweep continues.

        Runs share every seed of the base config unless the axis is seed.
        With more than one worker the runs execute in a process pool; the
        records are still returned in axis order.
        """
        sweep_dir = self.output_dir / sweep.name
        log = logger.bind(sweep=sweep.name, axis=sweep.axis.value)
        log.info("Starting sweep", values=sweep.values, workers=self.workers)

        if self.workers > 1 and len(sweep.values) > 1:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(sweep.values))) as pool:
                records = list(
                    pool.map(
                        _run_sweep_member,
                        repeat(sweep),
                        sweep.values,
                        repeat(sweep_dir),
                        repeat(self.save_checkpoints),
                    )
                )
        else:
            records = [
                _run_sweep_member(sweep, value, sweep_dir, self.save_checkpoints) for value in sweep.values
            ]

        summary = summarize_sweep(sweep, records)
        trend = sweep_trend(summary)
        try:
            sweep_dir.mkdir(parents=True, exist_ok=True)
            summary.to_csv(sweep_dir / SUMMARY_NAME, index=False, lineterminator="\n")
        except OSError as e:
            raise ExperimentError("output_dir", f"cannot write sweep summary: {e}") from e

        log.info(
            "Sweep finished",
            completed=int((summary["status"] == "completed").sum()),
            failed=int((summary["status"] == "failed").sum()),
            trend=trend,
        )
        return SweepResult(sweep=sweep, records=records, summary=summary, trend=trend)

    def evaluate_checkpoint(
        self, directory: Path | str, split: Split | str = Split.TEST
    ) -> tuple[float, ConfusionMatrix]:
        """
        Evaluate a run checkpoint on a split rebuilt from its stored config.

        The stored permutation is reapplied, so the test split reproduces the
        final accuracy of the run.

        Raises:
            CheckpointError: If the checkpoint lacks the run config or permutation
            ExperimentError: If the split cannot be rebuilt
        """
        network, manifest = load_checkpoint(directory)
        try:
            cfg = TrainConfig.model_validate(manifest.metadata["config"])
            permutation = Permutation.model_validate(manifest.metadata["permutation"])
        except (KeyError, ValidationError) as e:
            raise CheckpointError(f"checkpoint {directory} does not carry a run config: {e}") from e
        data, _ = prepare_split(cfg, Split(split), permutation)
        accuracy, matrix = evaluate(network, data)
        logger.info("Checkpoint evaluated", checkpoint=str(directory), split=Split(split).value, accuracy=accuracy)
        return accuracy, matrix


def _run_sweep_member(
    sweep: SweepConfig, value: int | str, sweep_dir: Path, save_checkpoints: bool
) -> RunRecord:
    log = logger.bind(sweep=sweep.name, axis=sweep.axis.value, value=value)
    try:
        cfg = sweep.config_for(value)
    except ValidationError as e:
        log.error("Sweep value rejected", error=str(e))
        failed_cfg = sweep.base.model_copy(update={"name": f"{sweep.base.name}-{sweep.axis.value}{value}"})
        return RunRecord.failed(failed_cfg, str(e), sweep.axis.value, sweep.axis.value, value)

    service = ExperimentService(output_dir=sweep_dir, save_checkpoints=save_checkpoints, workers=1)
    try:
        return service.run_experiment(cfg, sweep_axis=sweep.axis, sweep_value=value)
    except ExperimentError as e:
        log.error("Sweep run failed", field=e.field, error=str(e))
        return RunRecord.failed(cfg, str(e), e.field, sweep.axis.value, value)
    except (ValueError, OSError) as e:
        log.error("Sweep run failed", error=str(e))
        return RunRecord.failed(cfg, str(e), None, sweep.axis.value, value)
