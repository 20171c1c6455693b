"""
Dataset service: loading by collection, deterministic subsetting, and
per-class pixel statistics.
"""

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import structlog

from permubench.config import settings
from permubench.connectors import Cifar10Connector, ContainerConnector, DatasetError, IdxConnector
from permubench.models.dataset import CLASS_NAMES, DatasetKind, LabeledDataset, Split
from permubench.utils import make_generator

logger = structlog.get_logger("permubench.dataset_service")


class InsufficientExamplesError(DatasetError):
    """Raised when a class has fewer examples than requested."""

    def __init__(self, class_index: int, class_name: str, available: int, requested: int) -> None:
        self.class_index = class_index
        super().__init__(
            f"class {class_index} ({class_name}) has {available} examples, {requested} requested"
        )


class EmptyClassError(DatasetError):
    """Raised when a statistic is requested for a class without examples."""

    pass


def resolve_data_path(path: Path | str) -> Path:
    """Relative paths that do not exist from the working directory are taken under settings.data_dir."""
    path = Path(path)
    if path.is_absolute() or path.exists():
        return path
    return Path(settings.data_dir) / path


def load_dataset(
    kind: DatasetKind, paths: Sequence[Path | str], split: Split = Split.TRAIN
) -> LabeledDataset:
    """
    Load a collection from its native files or from a container manifest.

    Args:
        kind: Collection tag, selects the format and class table
        paths: [images, labels] for IDX, batch files for CIFAR-10, or a
            single *.json container manifest
        split: Split tag of the result
    """
    class_names = CLASS_NAMES[kind]
    paths = [resolve_data_path(p) for p in paths]
    if len(paths) == 1 and Path(paths[0]).suffix == ".json":
        return ContainerConnector(class_names).load(paths, split)
    if kind == DatasetKind.CIFAR10:
        return Cifar10Connector(class_names).load(paths, split)
    return IdxConnector(class_names).load(paths, split)


def subset_per_class(d: LabeledDataset, n_per_class: int, seed: int) -> LabeledDataset:
    """
    Keep exactly n_per_class examples of every class.

    Indices are drawn without replacement per class from
    Generator(PCG64(seed)), classes in index order; the kept examples stay
    in their original dataset order.

    Raises:
        InsufficientExamplesError: If a class has fewer than n_per_class examples
    """
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = make_generator(seed)
    chosen: list[np.ndarray] = []
    for k in range(d.num_classes):
        candidates = np.flatnonzero(d.labels == k)
        if len(candidates) < n_per_class:
            raise InsufficientExamplesError(k, d.class_names[k], len(candidates), n_per_class)
        chosen.append(rng.choice(candidates, size=n_per_class, replace=False))

    keep = np.sort(np.concatenate(chosen))
    logger.info(
        "Subset dataset per class",
        split=d.split.value,
        n_per_class=n_per_class,
        kept=len(keep),
        total=len(d),
    )
    return d.take(keep)


def class_mean_std(d: LabeledDataset) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """
    Pixel-wise mean and population standard deviation of every class.

    Returns:
        Mapping class index -> (mean grid, std grid), each of shape (H, W, C)

    Raises:
        EmptyClassError: If the dataset is empty or a class has no examples
    """
    if len(d) == 0:
        raise EmptyClassError("cannot compute class statistics of an empty dataset")
    stats: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for k in range(d.num_classes):
        members = d.images[d.labels == k].astype(np.float64)
        if len(members) == 0:
            raise EmptyClassError(f"class {k} ({d.class_names[k]}) has no examples")
        stats[k] = (members.mean(axis=0), members.std(axis=0))
    return stats
