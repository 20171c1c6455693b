"""
IDX connector for MNIST and Fashion-MNIST.

Data format (big endian):
    images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8[] pixels (row-major)
    labels: u32 magic 0x00000801 | u32 count | u8[] labels
"""

import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import structlog

from permubench.models.dataset import MNIST_CLASS_NAMES, LabeledDataset, Split

from .base import (
    BadMagicError,
    BaseConnector,
    CountMismatchError,
    DatasetFormatError,
    LabelRangeError,
    TruncatedPayloadError,
)

logger = structlog.get_logger("permubench.connectors.idx")

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxConnector(BaseConnector):
    """Reader/writer for IDX image/label file pairs."""

    format_name = "idx"

    def __init__(self, class_names: Sequence[str] = MNIST_CLASS_NAMES) -> None:
        super().__init__(class_names)

    def _parse_header(
        self, path: Path | str, payload: bytes, magic: int, dims: int
    ) -> tuple[int, ...]:
        header_size = 4 * (dims + 1)
        if len(payload) < header_size:
            raise TruncatedPayloadError(
                path, f"header needs {header_size} bytes, file has {len(payload)}"
            )
        found, *sizes = struct.unpack(f">{dims + 1}I", payload[:header_size])
        if found != magic:
            raise BadMagicError(path, f"magic 0x{found:08x}, expected 0x{magic:08x}")
        return tuple(sizes)

    def _read_images(self, path: Path | str) -> np.ndarray:
        payload = self._read_bytes(path)
        count, rows, cols = self._parse_header(path, payload, IDX_IMAGE_MAGIC, 3)
        expected = count * rows * cols
        body = payload[16:]
        if len(body) < expected:
            raise TruncatedPayloadError(
                path, f"{count} images of {rows}x{cols} need {expected} bytes, found {len(body)}"
            )
        if len(body) > expected:
            raise DatasetFormatError(path, f"{len(body) - expected} trailing bytes after images")
        return np.frombuffer(body, dtype=np.uint8).reshape(count, rows, cols, 1)

    def _read_labels(self, path: Path | str) -> np.ndarray:
        payload = self._read_bytes(path)
        (count,) = self._parse_header(path, payload, IDX_LABEL_MAGIC, 1)
        body = payload[8:]
        if len(body) < count:
            raise TruncatedPayloadError(path, f"{count} labels announced, found {len(body)}")
        if len(body) > count:
            raise DatasetFormatError(path, f"{len(body) - count} trailing bytes after labels")
        labels = np.frombuffer(body, dtype=np.uint8).astype(np.int64)
        if labels.size and labels.max() >= len(self.class_names):
            raise LabelRangeError(
                path, f"label {labels.max()} outside {len(self.class_names)} classes"
            )
        return labels

    def load(self, paths: Sequence[Path | str], split: Split = Split.TRAIN) -> LabeledDataset:
        """
        Load an IDX (images, labels) pair.

        Args:
            paths: [images_path, labels_path]
            split: Split tag of the resulting dataset

        Returns:
            Dataset of (n, rows, cols, 1) grids with intensities divided by 255

        Raises:
            BadMagicError: Wrong magic number in either file
            TruncatedPayloadError: File shorter than announced
            CountMismatchError: Image and label counts differ
        """
        if len(paths) != 2:
            raise ValueError(f"IDX datasets need [images, labels] paths, got {len(paths)}")
        images_path, labels_path = paths
        raw = self._read_images(images_path)
        labels = self._read_labels(labels_path)
        if len(raw) != len(labels):
            raise CountMismatchError(
                labels_path, f"{len(labels)} labels but {images_path} holds {len(raw)} images"
            )

        images = raw.astype(np.float32) / np.float32(255.0)
        logger.info(
            "Loaded IDX dataset",
            images=str(images_path),
            count=len(labels),
            shape=list(images.shape[1:]),
            split=split.value,
        )
        return LabeledDataset(
            images=images,
            labels=labels,
            class_names=self.class_names,
            split=split,
            metadata={"source_format": self.format_name, "normalization": "divide_by_255"},
        )

    def write(self, dataset: LabeledDataset, paths: Sequence[Path | str]) -> list[Path]:
        """
        Write a single-channel dataset as an IDX (images, labels) pair.

        Intensities are stored as round(255 * value).
        """
        height, width, channels = dataset.image_shape
        if channels != 1:
            raise ValueError(f"IDX stores single-channel images, got {channels} channels")
        images_path, labels_path = paths
        pixels = np.rint(dataset.images[..., 0] * 255.0).astype(np.uint8)
        image_payload = struct.pack(">4I", IDX_IMAGE_MAGIC, len(dataset), height, width)
        label_payload = struct.pack(">2I", IDX_LABEL_MAGIC, len(dataset))
        return [
            self._write_bytes(images_path, image_payload + pixels.tobytes()),
            self._write_bytes(labels_path, label_payload + dataset.labels.astype(np.uint8).tobytes()),
        ]


def load_idx(
    images_path: Path | str,
    labels_path: Path | str,
    class_names: Sequence[str] = MNIST_CLASS_NAMES,
    split: Split = Split.TRAIN,
) -> LabeledDataset:
    """Load an MNIST-style IDX pair (see IdxConnector.load)."""
    return IdxConnector(class_names).load([images_path, labels_path], split)


def write_idx(
    dataset: LabeledDataset, images_path: Path | str, labels_path: Path | str
) -> list[Path]:
    """Write a dataset as an IDX pair (see IdxConnector.write)."""
    return IdxConnector(dataset.class_names).write(dataset, [images_path, labels_path])
