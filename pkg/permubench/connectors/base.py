"""
Abstract base class for dataset file connectors.

Provides file access (plain or gzip-compressed), the dataset error hierarchy,
and logging shared by every on-disk format reader/writer.
"""

import gzip
from abc import ABC, abstractmethod
from collections.abc import Sequence
from pathlib import Path

import structlog

from permubench.models.dataset import LabeledDataset, Split

logger = structlog.get_logger("permubench.connectors")


class DatasetError(ValueError):
    """Base exception for dataset failures."""

    pass


class DatasetFormatError(DatasetError):
    """Raised when a file does not follow its declared format."""

    def __init__(self, path: Path | str, message: str) -> None:
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class BadMagicError(DatasetFormatError):
    """Raised when an IDX file starts with an unexpected magic number."""

    pass


class TruncatedPayloadError(DatasetFormatError):
    """Raised when a file is shorter than its header announces."""

    pass


class CountMismatchError(DatasetFormatError):
    """Raised when paired image and label files disagree on item count."""

    pass


class RecordLengthError(DatasetFormatError):
    """Raised when a fixed-record file has a length that is not a multiple of the record."""

    pass


class LabelRangeError(DatasetFormatError):
    """Raised when a stored label is outside the class table."""

    pass


class BaseConnector(ABC):
    """
    Abstract base class for dataset file formats.

    Concrete connectors decode a list of files into a LabeledDataset and
    encode a LabeledDataset back into the same files.
    """

    format_name: str = "abstract"

    def __init__(self, class_names: Sequence[str]) -> None:
        """
        Initialize connector with the class table of the collection.

        Args:
            class_names: Names of the K classes, indexed by label
        """
        self.class_names = tuple(class_names)

    def _read_bytes(self, path: Path | str) -> bytes:
        """
        Read a whole file, decompressing transparently when it ends in .gz.

        Raises:
            DatasetError: If the file cannot be read
        """
        path = Path(path)
        try:
            if path.suffix == ".gz":
                with gzip.open(path, "rb") as handle:
                    payload = handle.read()
            else:
                payload = path.read_bytes()
        except OSError as e:
            raise DatasetError(f"cannot read dataset file {path}: {e}") from e

        logger.debug("Read dataset file", path=str(path), bytes=len(payload))
        return payload

    def _write_bytes(self, path: Path | str, payload: bytes) -> Path:
        """Write a whole file, gzip-compressing when it ends in .gz."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".gz":
            with gzip.open(path, "wb") as handle:
                handle.write(payload)
        else:
            path.write_bytes(payload)
        return path

    @abstractmethod
    def load(self, paths: Sequence[Path | str], split: Split = Split.TRAIN) -> LabeledDataset:
        """Decode the given files into a dataset."""
        pass

    @abstractmethod
    def write(self, dataset: LabeledDataset, paths: Sequence[Path | str]) -> list[Path]:
        """Encode a dataset into the given files."""
        pass
