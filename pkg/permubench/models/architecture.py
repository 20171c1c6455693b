"""
Model specifications and builders for the compared architectures.

All builders share the same fully connected head so that comparisons
isolate the front end: a VGG-style convolution stack, the bare head (MLP),
two dilated convolutions, one wide strided convolution, or a deeper MLP.
"""

from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .layers import (
    ConvSpec,
    DenseSpec,
    FlattenSpec,
    LayerSpec,
    MaxPoolSpec,
    Padding,
    ReluSpec,
    ShapeError,
)

HEAD_WIDTH = 512
VGG_WIDTHS = (32, 64, 128)
VGG_SIDES = (28, 32)
DILATED_FILTERS = 64
DILATED_KERNEL = 4
DILATED_RATE = 4
WIDE_FILTERS = 64
WIDE_KERNEL = 8
WIDE_STRIDE = 4


class ArchitectureError(ValueError):
    """Raised when an architecture cannot be built for an input geometry."""

    pass


class ArchitectureName(str, Enum):
    """Architecture tag of a ModelSpec."""

    CNN_VGG = "cnn_vgg"
    MLP_HEAD = "mlp_head"
    CNN_DILATED = "cnn_dilated"
    CNN_WIDE = "cnn_wide"
    MLP_DEEP = "mlp_deep"


class ModelSpec(BaseModel):
    """Declarative layer stack with its input geometry."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: ArchitectureName
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int] = Field(description="(H, W, C)")
    num_classes: int = Field(ge=1)

    @model_validator(mode="after")
    def validate_chain(self) -> "ModelSpec":
        """Validate consecutive layer shapes chain and the last layer emits K logits."""
        shapes = self.output_shapes()
        if shapes[-1] != (self.num_classes,):
            raise ValueError(f"final layer emits {shapes[-1]}, expected ({self.num_classes},)")
        return self

    def output_shapes(self) -> list[tuple[int, ...]]:
        """Per-example output shape after each layer."""
        shapes: list[tuple[int, ...]] = []
        current: tuple[int, ...] = self.input_shape
        for layer in self.layers:
            current = layer.output_shape(current)  # type: ignore[arg-type]
            shapes.append(current)
        if not shapes:
            raise ValueError("a model needs at least one layer")
        return shapes

    def parameter_shapes(self) -> list[tuple[int, tuple[int, ...], tuple[int, ...]]]:
        """(layer index, weight shape, bias shape) for every parametrised layer."""
        result: list[tuple[int, tuple[int, ...], tuple[int, ...]]] = []
        current: tuple[int, ...] = self.input_shape
        for index, layer in enumerate(self.layers):
            if isinstance(layer, ConvSpec):
                result.append((index, layer.weight_shape, (layer.out_channels,)))
            elif isinstance(layer, DenseSpec):
                result.append((index, (current[0], layer.units), (layer.units,)))
            current = layer.output_shape(current)  # type: ignore[arg-type]
        return result

    def parameter_count(self) -> int:
        """Total number of weights and biases."""
        total = 0
        for _, weight_shape, bias_shape in self.parameter_shapes():
            count = 1
            for dim in weight_shape:
                count *= dim
            total += count + bias_shape[0]
        return total

    def head_index(self) -> int:
        """Index of the flatten layer that starts the dense head."""
        for index, layer in enumerate(self.layers):
            if isinstance(layer, FlattenSpec):
                return index
        raise ArchitectureError(f"model {self.name.value} has no flatten layer")


def _dense_head(num_classes: int, depth: int = 2, width: int = HEAD_WIDTH) -> list[LayerSpec]:
    layers: list[LayerSpec] = [FlattenSpec()]
    for _ in range(depth):
        layers.extend([DenseSpec(units=width), ReluSpec()])
    layers.append(DenseSpec(units=num_classes))
    return layers


def _finish(
    name: ArchitectureName,
    layers: list[LayerSpec],
    input_shape: tuple[int, int, int],
    num_classes: int,
) -> ModelSpec:
    try:
        return ModelSpec(
            name=name, layers=tuple(layers), input_shape=input_shape, num_classes=num_classes
        )
    except (ShapeError, ValueError) as e:
        raise ArchitectureError(f"cannot build {name.value} for input {input_shape}: {e}") from e


def build_cnn_vgg(input_shape: tuple[int, int, int], num_classes: int) -> ModelSpec:
    """
    VGG-style stack: three blocks of two same-padded 3x3 convolutions + ReLU
    (32, 64, 128 filters), each followed by 2x2 max pooling, then the head.

    Raises:
        ArchitectureError: If the input is not a 28- or 32-pixel square
    """
    height, width, channels = input_shape
    if height != width or height not in VGG_SIDES:
        raise ArchitectureError(
            f"cnn_vgg supports square inputs of side {VGG_SIDES}, got {height}x{width}"
        )
    layers: list[LayerSpec] = []
    in_channels = channels
    for filters in VGG_WIDTHS:
        for _ in range(2):
            layers.append(
                ConvSpec(in_channels=in_channels, out_channels=filters, kernel=(3, 3), padding=Padding.SAME)
            )
            layers.append(ReluSpec())
            in_channels = filters
        layers.append(MaxPoolSpec())
    layers.extend(_dense_head(num_classes))
    return _finish(ArchitectureName.CNN_VGG, layers, input_shape, num_classes)


def build_mlp_head(input_shape: tuple[int, int, int], num_classes: int) -> ModelSpec:
    """The dense head of cnn_vgg applied directly to the flattened image."""
    return _finish(ArchitectureName.MLP_HEAD, _dense_head(num_classes), input_shape, num_classes)


def build_mlp_deep(
    input_shape: tuple[int, int, int],
    num_classes: int,
    depth: int = 4,
    width: int = HEAD_WIDTH,
) -> ModelSpec:
    """Stack of `depth` fully connected ReLU layers of `width` units."""
    if depth < 1 or width < 1:
        raise ArchitectureError(f"mlp_deep needs depth >= 1 and width >= 1, got {depth}, {width}")
    return _finish(
        ArchitectureName.MLP_DEEP, _dense_head(num_classes, depth, width), input_shape, num_classes
    )


def build_cnn_dilated(
    input_shape: tuple[int, int, int], num_classes: int, num_layers: int = 2
) -> ModelSpec:
    """
    Identical valid-padded dilated convolutions (64 filters, 4x4 kernel,
    dilation 4, stride 1) + ReLU, then the head.

    Each layer shrinks the side by 12 pixels; a layer that no longer fits
    is rejected.

    Raises:
        ArchitectureError: If any dilated layer does not fit the remaining image
    """
    height, width, channels = input_shape
    extent = (DILATED_KERNEL - 1) * DILATED_RATE + 1
    layers: list[LayerSpec] = []
    in_channels = channels
    for index in range(num_layers):
        if min(height, width) < extent:
            raise ArchitectureError(
                f"dilated layer {index + 1} needs a side of at least {extent} pixels, "
                f"{height}x{width} remain after image size reduction"
            )
        layers.append(
            ConvSpec(
                in_channels=in_channels,
                out_channels=DILATED_FILTERS,
                kernel=(DILATED_KERNEL, DILATED_KERNEL),
                dilation=DILATED_RATE,
                padding=Padding.VALID,
            )
        )
        layers.append(ReluSpec())
        in_channels = DILATED_FILTERS
        height, width = height - extent + 1, width - extent + 1
    layers.extend(_dense_head(num_classes))
    return _finish(ArchitectureName.CNN_DILATED, layers, input_shape, num_classes)


def build_cnn_wide(input_shape: tuple[int, int, int], num_classes: int) -> ModelSpec:
    """
    One valid 8x8 convolution with stride 4 (64 filters) + ReLU, then the head.

    Raises:
        ArchitectureError: If the input side is below 8
    """
    height, width, channels = input_shape
    if min(height, width) < WIDE_KERNEL:
        raise ArchitectureError(f"cnn_wide needs a side of at least {WIDE_KERNEL}, got {height}x{width}")
    layers: list[LayerSpec] = [
        ConvSpec(
            in_channels=channels,
            out_channels=WIDE_FILTERS,
            kernel=(WIDE_KERNEL, WIDE_KERNEL),
            stride=WIDE_STRIDE,
            padding=Padding.VALID,
        ),
        ReluSpec(),
        *_dense_head(num_classes),
    ]
    return _finish(ArchitectureName.CNN_WIDE, layers, input_shape, num_classes)


MODEL_OPTIONS: dict[ArchitectureName, frozenset[str]] = {
    ArchitectureName.CNN_VGG: frozenset(),
    ArchitectureName.MLP_HEAD: frozenset(),
    ArchitectureName.CNN_DILATED: frozenset({"num_layers"}),
    ArchitectureName.CNN_WIDE: frozenset(),
    ArchitectureName.MLP_DEEP: frozenset({"depth", "width"}),
}


def build_model(
    name: ArchitectureName | str,
    input_shape: tuple[int, int, int],
    num_classes: int,
    **options: Any,
) -> ModelSpec:
    """
    Dispatch to the builder of an architecture tag.

    Options are forwarded (depth/width for mlp_deep, num_layers for cnn_dilated).

    Raises:
        ArchitectureError: If an option is not accepted by the architecture
    """
    name = ArchitectureName(name)
    unknown = sorted(set(options) - MODEL_OPTIONS[name])
    if unknown:
        allowed = ", ".join(sorted(MODEL_OPTIONS[name])) or "none"
        raise ArchitectureError(f"{name.value} does not accept options {unknown} (allowed: {allowed})")
    if name == ArchitectureName.CNN_VGG:
        return build_cnn_vgg(input_shape, num_classes)
    if name == ArchitectureName.MLP_HEAD:
        return build_mlp_head(input_shape, num_classes)
    if name == ArchitectureName.CNN_DILATED:
        return build_cnn_dilated(input_shape, num_classes, **options)
    if name == ArchitectureName.CNN_WIDE:
        return build_cnn_wide(input_shape, num_classes)
    return build_mlp_deep(input_shape, num_classes, **options)
