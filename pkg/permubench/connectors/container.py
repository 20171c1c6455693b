"""
Internal dataset container.

A container is two files side by side:

    <name>.json  manifest: format, version, split, shape [N, H, W, C],
                 dtype "<f4", data_file, class_names, labels, metadata
    <name>.f32   N*H*W*C little-endian IEEE-754 float32 values, row-major
                 over (N, H, W, C), no header

Unlike the native formats the container stores intensities exactly, so
permuted or channel-selected datasets survive a round trip bit for bit.
"""

from collections.abc import Sequence
from pathlib import Path
from typing import Literal

import numpy as np
import structlog
from pydantic import BaseModel, Field, ValidationError

from permubench.models.dataset import LabeledDataset, Split

from .base import (
    BaseConnector,
    CountMismatchError,
    DatasetFormatError,
    LabelRangeError,
    TruncatedPayloadError,
)

logger = structlog.get_logger("permubench.connectors.container")

CONTAINER_FORMAT = "permubench-dataset"
CONTAINER_VERSION = 1


class ContainerManifest(BaseModel):
    """JSON manifest of a dataset container."""

    format: Literal["permubench-dataset"] = CONTAINER_FORMAT
    version: int = CONTAINER_VERSION
    split: Split
    shape: tuple[int, int, int, int] = Field(description="(N, H, W, C)")
    dtype: Literal["<f4"] = "<f4"
    data_file: str
    class_names: list[str]
    labels: list[int]
    metadata: dict[str, str] = Field(default_factory=dict)


class ContainerConnector(BaseConnector):
    """Reader/writer for the manifest + float32 tensor container."""

    format_name = "container"

    def __init__(self, class_names: Sequence[str] = ()) -> None:
        super().__init__(class_names)

    def load(self, paths: Sequence[Path | str], split: Split | None = None) -> LabeledDataset:
        """
        Load a container from its manifest path.

        The split stored in the manifest wins unless one is given explicitly.
        """
        if len(paths) != 1:
            raise ValueError("a container is addressed by exactly one manifest path")
        manifest_path = Path(paths[0])
        try:
            manifest = ContainerManifest.model_validate_json(self._read_bytes(manifest_path))
        except ValidationError as e:
            raise DatasetFormatError(manifest_path, f"invalid container manifest: {e}") from e

        if len(manifest.labels) != manifest.shape[0]:
            raise CountMismatchError(
                manifest_path, f"{len(manifest.labels)} labels for {manifest.shape[0]} images"
            )
        class_names = tuple(self.class_names or manifest.class_names)
        if any(not 0 <= label < len(class_names) for label in manifest.labels):
            raise LabelRangeError(manifest_path, f"labels must lie in [0, {len(class_names)})")

        data_path = manifest_path.parent / manifest.data_file
        payload = self._read_bytes(data_path)
        expected = int(np.prod(manifest.shape)) * 4
        if len(payload) != expected:
            raise TruncatedPayloadError(
                data_path, f"manifest shape {manifest.shape} needs {expected} bytes, found {len(payload)}"
            )
        images = np.frombuffer(payload, dtype="<f4").reshape(manifest.shape).astype(np.float32)
        logger.info("Loaded dataset container", manifest=str(manifest_path), count=manifest.shape[0])
        return LabeledDataset(
            images=images,
            labels=np.asarray(manifest.labels, dtype=np.int64),
            class_names=class_names,
            split=split or manifest.split,
            metadata=manifest.metadata,
        )

    def write(self, dataset: LabeledDataset, paths: Sequence[Path | str]) -> list[Path]:
        """Write a dataset as manifest + tensor file; returns both paths."""
        manifest_path = Path(paths[0])
        data_path = manifest_path.with_suffix(".f32")
        manifest = ContainerManifest(
            split=dataset.split,
            shape=(len(dataset), *dataset.image_shape),
            data_file=data_path.name,
            class_names=list(dataset.class_names),
            labels=[int(label) for label in dataset.labels],
            metadata=dataset.metadata,
        )
        self._write_bytes(data_path, dataset.images.astype("<f4").tobytes())
        self._write_bytes(manifest_path, manifest.model_dump_json(indent=2).encode("utf-8"))
        return [manifest_path, data_path]


def save_container(dataset: LabeledDataset, manifest_path: Path | str) -> list[Path]:
    """Write a dataset container (see ContainerConnector.write)."""
    return ContainerConnector().write(dataset, [manifest_path])


def load_container(manifest_path: Path | str) -> LabeledDataset:
    """Read a dataset container (see ContainerConnector.load)."""
    return ContainerConnector().load([manifest_path])
