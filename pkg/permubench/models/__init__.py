"""
Domain models for permubench.

Declarative, validated types shared by the services: permutations, image
datasets, layer descriptors and architectures, run configuration, run
records and confusion matrices.
"""

from .architecture import (
    ArchitectureError,
    ArchitectureName,
    ModelSpec,
    build_cnn_dilated,
    build_cnn_vgg,
    build_cnn_wide,
    build_mlp_deep,
    build_mlp_head,
    build_model,
)
from .confusion import ConfusionMatrix
from .dataset import CLASS_NAMES, DatasetKind, ImageGrid, LabeledDataset, Split
from .layers import (
    ConvSpec,
    DenseSpec,
    FlattenSpec,
    LayerSpec,
    MaxPoolSpec,
    Padding,
    Precision,
    ReluSpec,
    ShapeError,
)
from .permutation import Permutation, PermutationScheme
from .run_record import EpochMetrics, RunRecord, RunStatus
from .train_config import (
    ChannelSelection,
    DatasetSource,
    RandomizationKind,
    RandomizationSpec,
    SweepAxis,
    SweepConfig,
    TrainConfig,
)

__all__ = [
    # Models
    "ConfusionMatrix",
    "DatasetSource",
    "EpochMetrics",
    "LabeledDataset",
    "ModelSpec",
    "Permutation",
    "RandomizationSpec",
    "RunRecord",
    "SweepConfig",
    "TrainConfig",
    # Layer descriptors
    "ConvSpec",
    "DenseSpec",
    "FlattenSpec",
    "LayerSpec",
    "MaxPoolSpec",
    "ReluSpec",
    # Enums
    "ArchitectureName",
    "ChannelSelection",
    "DatasetKind",
    "Padding",
    "PermutationScheme",
    "Precision",
    "RandomizationKind",
    "RunStatus",
    "Split",
    "SweepAxis",
    # Builders
    "build_cnn_dilated",
    "build_cnn_vgg",
    "build_cnn_wide",
    "build_mlp_deep",
    "build_mlp_head",
    "build_model",
    # Misc
    "CLASS_NAMES",
    "ArchitectureError",
    "ImageGrid",
    "ShapeError",
]
