"""
Shared fixtures for permubench tests.

Synthetic datasets are written as raw IDX / CIFAR-10 bytes into tmp_path so
that loaders are exercised against the published byte layouts rather than
against the package's own writers.
"""

import struct
from pathlib import Path

import numpy as np
import pytest

from permubench.models.dataset import MNIST_CLASS_NAMES, LabeledDataset, Split
from permubench.models.train_config import TrainConfig


def idx_images_bytes(images: np.ndarray) -> bytes:
    """IDX3 payload for an (N, rows, cols) uint8 array."""
    n, rows, cols = images.shape
    return struct.pack(">4I", 0x00000803, n, rows, cols) + images.astype(np.uint8).tobytes()


def idx_labels_bytes(labels: np.ndarray) -> bytes:
    """IDX1 payload for a uint8 label vector."""
    return struct.pack(">2I", 0x00000801, len(labels)) + labels.astype(np.uint8).tobytes()


def cifar_record_bytes(label: int, image: np.ndarray) -> bytes:
    """One 3073-byte CIFAR-10 record for a (32, 32, 3) uint8 image."""
    return bytes([label]) + image.astype(np.uint8).transpose(2, 0, 1).tobytes()


def separable_images(labels: np.ndarray, side: int, seed: int) -> np.ndarray:
    """uint8 (N, side, side) images whose class is encoded by a bright row."""
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 40, size=(len(labels), side, side), dtype=np.uint8)
    for i, label in enumerate(labels):
        images[i, int(label) % side, :] = 250
        images[i, :, (2 * (int(label) // side + 1)) % side] = 200
    return images


def write_idx_pair(directory: Path, stem: str, images: np.ndarray, labels: np.ndarray) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    images_path = directory / f"{stem}-images-idx3-ubyte"
    labels_path = directory / f"{stem}-labels-idx1-ubyte"
    images_path.write_bytes(idx_images_bytes(images))
    labels_path.write_bytes(idx_labels_bytes(labels))
    return [images_path, labels_path]


@pytest.fixture
def tiny_mnist(tmp_path: Path) -> dict[str, list[Path]]:
    """8x8 ten-class IDX dataset: 6 train and 3 test images per class."""
    train_labels = np.repeat(np.arange(10), 6).astype(np.uint8)
    test_labels = np.repeat(np.arange(10), 3).astype(np.uint8)
    data_dir = tmp_path / "mnist"
    return {
        "train": write_idx_pair(data_dir, "train", separable_images(train_labels, 8, 1), train_labels),
        "test": write_idx_pair(data_dir, "t10k", separable_images(test_labels, 8, 2), test_labels),
    }


@pytest.fixture
def tiny_cifar(tmp_path: Path) -> dict[str, list[Path]]:
    """32x32x3 CIFAR-10 batches: 2 train and 1 test record per class."""
    rng = np.random.default_rng(3)
    data_dir = tmp_path / "cifar"
    data_dir.mkdir()
    paths: dict[str, list[Path]] = {}
    for split, per_class in (("train", 2), ("test", 1)):
        payload = b"".join(
            cifar_record_bytes(label, rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8))
            for label in np.repeat(np.arange(10), per_class)
        )
        path = data_dir / f"{split}_batch.bin"
        path.write_bytes(payload)
        paths[split] = [path]
    return paths


@pytest.fixture
def small_dataset() -> LabeledDataset:
    """In-memory 4x4 single-channel dataset with two examples per class."""
    rng = np.random.default_rng(0)
    labels = np.repeat(np.arange(10), 2)
    images = rng.random((20, 4, 4, 1)).astype(np.float32)
    return LabeledDataset(images=images, labels=labels, class_names=MNIST_CLASS_NAMES, split=Split.TRAIN)


@pytest.fixture
def mnist_config(tiny_mnist: dict[str, list[Path]]) -> TrainConfig:
    """Fast MLP run on the tiny IDX dataset."""
    return TrainConfig(
        name="tiny",
        dataset={"kind": "mnist", "train": tiny_mnist["train"], "test": tiny_mnist["test"]},
        model="mlp_deep",
        model_options={"depth": 1, "width": 16},
        epochs=2,
        batch_size=8,
        base_lr=1e-3,
    )
