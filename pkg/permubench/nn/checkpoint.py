"""
Parameter checkpoints.

A checkpoint is a directory holding

    manifest.json  format, version, model spec, precision, init seed, and the
                   parameter table [{name, shape, offset, count}] where offset
                   and count are in elements of the blob dtype
    params.bin     all parameters concatenated in table order as flat
                   little-endian IEEE-754 values ("<f4" for single precision,
                   "<f8" for double), each tensor row-major

plus any extra metadata the caller records (the harness stores the run
config so `permubench eval` can rebuild the evaluation split).
"""

from pathlib import Path
from typing import Any, Literal

import numpy as np
import structlog
from pydantic import BaseModel, Field, ValidationError

from permubench.models.architecture import ModelSpec
from permubench.models.layers import Precision

from .network import Network

logger = structlog.get_logger("permubench.nn.checkpoint")

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "params.bin"


class CheckpointError(ValueError):
    """Raised when a checkpoint cannot be written or read back."""

    pass


class ParameterEntry(BaseModel):
    name: str
    shape: tuple[int, ...]
    offset: int = Field(ge=0)
    count: int = Field(ge=0)


class CheckpointManifest(BaseModel):
    """JSON manifest of a checkpoint directory."""

    format: Literal["permubench-checkpoint"] = "permubench-checkpoint"
    version: int = 1
    model_spec: ModelSpec
    precision: Precision
    init_seed: int
    blob_dtype: Literal["<f4", "<f8"]
    parameters: list[ParameterEntry]
    metadata: dict[str, Any] = Field(default_factory=dict)


def save_checkpoint(
    network: Network, directory: Path | str, metadata: dict[str, Any] | None = None
) -> Path:
    """Write manifest.json and params.bin for a network; returns the directory."""
    directory = Path(directory)
    blob_dtype: Literal["<f4", "<f8"] = "<f4" if network.precision == Precision.SINGLE else "<f8"
    entries: list[ParameterEntry] = []
    chunks: list[bytes] = []
    offset = 0
    for name, value in network.params.items():
        entries.append(ParameterEntry(name=name, shape=value.shape, offset=offset, count=value.size))
        chunks.append(np.ascontiguousarray(value, dtype=blob_dtype).tobytes())
        offset += value.size

    manifest = CheckpointManifest(
        model_spec=network.spec,
        precision=network.precision,
        init_seed=network.init_seed,
        blob_dtype=blob_dtype,
        parameters=entries,
        metadata=metadata or {},
    )
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / BLOB_NAME).write_bytes(b"".join(chunks))
        (directory / MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {directory}: {e}") from e

    logger.info("Checkpoint written", directory=str(directory), parameters=offset)
    return directory


def load_checkpoint(directory: Path | str) -> tuple[Network, CheckpointManifest]:
    """
    Rebuild a network from a checkpoint directory.

    Raises:
        CheckpointError: If the manifest is invalid or the blob length disagrees
    """
    directory = Path(directory)
    try:
        manifest = CheckpointManifest.model_validate_json(
            (directory / MANIFEST_NAME).read_text(encoding="utf-8")
        )
        payload = (directory / BLOB_NAME).read_bytes()
    except (OSError, ValidationError) as e:
        raise CheckpointError(f"cannot read checkpoint {directory}: {e}") from e

    itemsize = np.dtype(manifest.blob_dtype).itemsize
    if len(payload) % itemsize != 0:
        raise CheckpointError(f"{directory / BLOB_NAME} length is not a multiple of {itemsize}")
    blob = np.frombuffer(payload, dtype=manifest.blob_dtype)
    total = sum(entry.count for entry in manifest.parameters)
    if blob.size != total:
        raise CheckpointError(f"{directory / BLOB_NAME} holds {blob.size} values, manifest lists {total}")

    params = {
        entry.name: blob[entry.offset : entry.offset + entry.count].reshape(entry.shape)
        for entry in manifest.parameters
    }
    network = Network(
        manifest.model_spec,
        init_seed=manifest.init_seed,
        precision=manifest.precision,
        params=params,
    )
    return network, manifest
