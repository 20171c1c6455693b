"""
CIFAR-10 binary batch connector.

Each record is 3073 bytes: one label byte followed by 3 x 1024 pixel bytes
stored channel-major (red plane, green plane, blue plane), each plane
row-major 32 x 32.
"""

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import structlog

from permubench.models.dataset import CIFAR10_CLASS_NAMES, LabeledDataset, Split

from .base import BaseConnector, LabelRangeError, RecordLengthError

logger = structlog.get_logger("permubench.connectors.cifar10")

CIFAR_SIDE = 32
CIFAR_CHANNELS = 3
CIFAR_RECORD_BYTES = 1 + CIFAR_CHANNELS * CIFAR_SIDE * CIFAR_SIDE


class Cifar10Connector(BaseConnector):
    """Reader/writer for CIFAR-10 binary batch files."""

    format_name = "cifar10"

    def __init__(self, class_names: Sequence[str] = CIFAR10_CLASS_NAMES) -> None:
        super().__init__(class_names)

    def _read_batch(self, path: Path | str) -> tuple[np.ndarray, np.ndarray]:
        payload = self._read_bytes(path)
        if len(payload) % CIFAR_RECORD_BYTES != 0:
            raise RecordLengthError(
                path, f"length {len(payload)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(payload, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        labels = records[:, 0].astype(np.int64)
        if labels.size and labels.max() >= len(self.class_names):
            raise LabelRangeError(
                path, f"label {labels.max()} outside {len(self.class_names)} classes"
            )
        planes = records[:, 1:].reshape(-1, CIFAR_CHANNELS, CIFAR_SIDE, CIFAR_SIDE)
        return planes.transpose(0, 2, 3, 1), labels

    def load(self, paths: Sequence[Path | str], split: Split = Split.TRAIN) -> LabeledDataset:
        """
        Load and concatenate CIFAR-10 batch files.

        Returns:
            Dataset of (n, 32, 32, 3) grids with intensities divided by 255

        Raises:
            RecordLengthError: File length not a multiple of 3073 bytes
            LabelRangeError: Label byte >= 10
        """
        batches = [self._read_batch(path) for path in paths]
        if batches:
            raw = np.concatenate([images for images, _ in batches])
            labels = np.concatenate([labels for _, labels in batches])
        else:
            raw = np.zeros((0, CIFAR_SIDE, CIFAR_SIDE, CIFAR_CHANNELS), dtype=np.uint8)
            labels = np.zeros(0, dtype=np.int64)

        images = raw.astype(np.float32) / np.float32(255.0)
        logger.info("Loaded CIFAR-10 batches", files=len(batches), count=len(labels), split=split.value)
        return LabeledDataset(
            images=images,
            labels=labels,
            class_names=self.class_names,
            split=split,
            metadata={"source_format": self.format_name, "normalization": "divide_by_255"},
        )

    def write(self, dataset: LabeledDataset, paths: Sequence[Path | str]) -> list[Path]:
        """Write a 32x32x3 dataset into a single batch file."""
        if dataset.image_shape != (CIFAR_SIDE, CIFAR_SIDE, CIFAR_CHANNELS):
            raise ValueError(f"CIFAR-10 records hold 32x32x3 images, got {dataset.image_shape}")
        if len(paths) != 1:
            raise ValueError("CIFAR-10 datasets are written to exactly one batch file")
        pixels = np.rint(dataset.images * 255.0).astype(np.uint8).transpose(0, 3, 1, 2)
        records = np.empty((len(dataset), CIFAR_RECORD_BYTES), dtype=np.uint8)
        records[:, 0] = dataset.labels.astype(np.uint8)
        records[:, 1:] = pixels.reshape(len(dataset), -1)
        return [self._write_bytes(paths[0], records.tobytes())]


def load_cifar10(
    batch_paths: Sequence[Path | str], split: Split = Split.TRAIN
) -> LabeledDataset:
    """Load CIFAR-10 binary batches (see Cifar10Connector.load)."""
    return Cifar10Connector().load(batch_paths, split)


def write_cifar10(dataset: LabeledDataset, batch_path: Path | str) -> list[Path]:
    """Write a dataset as one CIFAR-10 binary batch."""
    return Cifar10Connector(dataset.class_names).write(dataset, [batch_path])
