"""
Labeled image dataset model.

Images are held as a single float32 array of shape (N, H, W, C) with
intensities in [0, 1]; one image of that array is an ImageGrid of shape
(H, W, C).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt

ImageGrid = npt.NDArray[np.floating]


class Split(str, Enum):
    """Dataset split tag."""

    TRAIN = "train"
    TEST = "test"


class DatasetKind(str, Enum):
    """Supported image collections."""

    MNIST = "mnist"
    FASHION = "fashion"
    CIFAR10 = "cifar10"


MNIST_CLASS_NAMES: tuple[str, ...] = tuple(str(digit) for digit in range(10))

FASHION_CLASS_NAMES: tuple[str, ...] = (
    "T-shirt/top",
    "Trouser",
    "Pullover",
    "Dress",
    "Coat",
    "Sandal",
    "Shirt",
    "Sneaker",
    "Bag",
    "Ankle boot",
)

CIFAR10_CLASS_NAMES: tuple[str, ...] = (
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
)

CLASS_NAMES: dict[DatasetKind, tuple[str, ...]] = {
    DatasetKind.MNIST: MNIST_CLASS_NAMES,
    DatasetKind.FASHION: FASHION_CLASS_NAMES,
    DatasetKind.CIFAR10: CIFAR10_CLASS_NAMES,
}


@dataclass(frozen=True)
class LabeledDataset:
    """
    Uniformly shaped images with integer class labels.

    Invariants: images and labels have equal length, every label is below
    the number of class names, all values lie in [0, 1].
    """

    images: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    split: Split = Split.TRAIN
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.images.ndim != 4:
            raise ValueError(f"images must have shape (N, H, W, C), got {self.images.shape}")
        if min(self.images.shape[1:]) < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.images.shape[1:]}")
        if self.labels.ndim != 1 or len(self.labels) != len(self.images):
            raise ValueError(
                f"{len(self.images)} images but labels of shape {self.labels.shape}"
            )
        if not self.class_names:
            raise ValueError("class_names must not be empty")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("image intensities must lie in [0, 1]")

    def __len__(self) -> int:
        return int(len(self.labels))

    @property
    def num_classes(self) -> int:
        """Number of classes K."""
        return len(self.class_names)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        """Shape (H, W, C) shared by all images."""
        height, width, channels = self.images.shape[1:]
        return int(height), int(width), int(channels)

    def class_counts(self) -> np.ndarray:
        """Number of examples per class index."""
        return np.bincount(self.labels, minlength=self.num_classes)

    def with_images(self, images: np.ndarray, **metadata: str) -> "LabeledDataset":
        """Copy with replaced images (same labels), merging extra metadata."""
        return LabeledDataset(
            images=images,
            labels=self.labels,
            class_names=self.class_names,
            split=self.split,
            metadata={**self.metadata, **metadata},
        )

    def take(self, indices: np.ndarray) -> "LabeledDataset":
        """Copy restricted to the given example indices, in that order."""
        return LabeledDataset(
            images=self.images[indices],
            labels=self.labels[indices],
            class_names=self.class_names,
            split=self.split,
            metadata=dict(self.metadata),
        )
