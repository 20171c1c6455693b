# Connectors module initialization

from .base import (
    BadMagicError,
    BaseConnector,
    CountMismatchError,
    DatasetError,
    DatasetFormatError,
    LabelRangeError,
    RecordLengthError,
    TruncatedPayloadError,
)
from .cifar10 import Cifar10Connector, load_cifar10, write_cifar10
from .container import ContainerConnector, load_container, save_container
from .idx import IdxConnector, load_idx, write_idx

__all__ = [
    "BadMagicError",
    "BaseConnector",
    "Cifar10Connector",
    "ContainerConnector",
    "CountMismatchError",
    "DatasetError",
    "DatasetFormatError",
    "IdxConnector",
    "LabelRangeError",
    "RecordLengthError",
    "TruncatedPayloadError",
    "load_cifar10",
    "load_container",
    "load_idx",
    "save_container",
    "write_cifar10",
    "write_idx",
]
