"""
Layer descriptors and their shape arithmetic.

Descriptors are declarative (no parameters); permubench.nn turns a list of
them into weights and forward/backward passes. Activations are NHWC.
"""

from enum import Enum
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ShapeError(ValueError):
    """Raised when tensor shapes do not fit a layer."""

    def __init__(self, message: str, got: tuple[int, ...], expected: object) -> None:
        self.got = tuple(got)
        self.expected = expected
        super().__init__(f"{message}: got shape {self.got}, expected {expected}")


class Precision(str, Enum):
    """Floating point precision of parameters and activations."""

    SINGLE = "single"
    DOUBLE = "double"

    @property
    def dtype(self) -> type[np.floating[Any]]:
        return np.float32 if self == Precision.SINGLE else np.float64


class Padding(str, Enum):
    """Convolution padding mode."""

    SAME = "same"
    VALID = "valid"


class _Layer(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ConvSpec(_Layer):
    """2-D cross-correlation with optional stride and dilation."""

    kind: Literal["conv"] = "conv"
    in_channels: int = Field(ge=1)
    out_channels: int = Field(ge=1)
    kernel: tuple[int, int] = Field(description="(kh, kw) in pixels")
    stride: int = Field(default=1, ge=1)
    dilation: int = Field(default=1, ge=1)
    padding: Padding = Padding.SAME

    @model_validator(mode="after")
    def validate_geometry(self) -> "ConvSpec":
        """Validate kernel sizes and the stride/padding combination."""
        if min(self.kernel) < 1:
            raise ValueError(f"kernel sizes must be >= 1, got {self.kernel}")
        if self.padding == Padding.SAME and self.stride != 1:
            raise ValueError("same padding is only defined for stride 1")
        return self

    @property
    def effective_kernel(self) -> tuple[int, int]:
        """Extent (k - 1) * dilation + 1 covered by the dilated kernel."""
        kh, kw = self.kernel
        return (kh - 1) * self.dilation + 1, (kw - 1) * self.dilation + 1

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        """Kernel tensor layout (kh, kw, Cin, Cout)."""
        return (*self.kernel, self.in_channels, self.out_channels)

    def pad_amounts(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """((top, bottom), (left, right)); same padding puts the odd pixel bottom/right."""
        if self.padding == Padding.VALID:
            return (0, 0), (0, 0)
        eh, ew = self.effective_kernel
        return ((eh - 1) // 2, eh - 1 - (eh - 1) // 2), ((ew - 1) // 2, ew - 1 - (ew - 1) // 2)

    def output_shape(self, input_shape: tuple[int, int, int]) -> tuple[int, int, int]:
        """
        (H', W', Cout) for an (H, W, Cin) input.

        Raises:
            ShapeError: If channels disagree or the dilated kernel does not fit
        """
        height, width, channels = input_shape
        if channels != self.in_channels:
            raise ShapeError("conv input channels mismatch", input_shape, f"(H, W, {self.in_channels})")
        (top, bottom), (left, right) = self.pad_amounts()
        eh, ew = self.effective_kernel
        padded_h, padded_w = height + top + bottom, width + left + right
        if padded_h < eh or padded_w < ew:
            raise ShapeError(
                f"kernel extent {eh}x{ew} does not fit padded input {padded_h}x{padded_w}",
                input_shape,
                f"(>= {eh - top - bottom}, >= {ew - left - right}, {channels})",
            )
        return (
            (padded_h - eh) // self.stride + 1,
            (padded_w - ew) // self.stride + 1,
            self.out_channels,
        )


class MaxPoolSpec(_Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""

    kind: Literal["maxpool"] = "maxpool"

    def output_shape(self, input_shape: tuple[int, int, int]) -> tuple[int, int, int]:
        height, width, channels = input_shape
        if height < 2 or width < 2:
            raise ShapeError("maxpool needs at least 2x2 spatial input", input_shape, "(>=2, >=2, C)")
        return height // 2, width // 2, channels


class ReluSpec(_Layer):
    """Rectified linear activation."""

    kind: Literal["relu"] = "relu"

    def output_shape(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        return input_shape


class FlattenSpec(_Layer):
    """Row-major (H, W, C) -> H*W*C flattening."""

    kind: Literal["flatten"] = "flatten"

    def output_shape(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        size = 1
        for dim in input_shape:
            size *= dim
        return (size,)


class DenseSpec(_Layer):
    """Fully connected layer; the input width is inferred from the previous layer."""

    kind: Literal["dense"] = "dense"
    units: int = Field(ge=1)

    def output_shape(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        if len(input_shape) != 1:
            raise ShapeError("dense layer needs a flat input", input_shape, "(features,)")
        return (self.units,)


LayerSpec = Annotated[
    ConvSpec | MaxPoolSpec | ReluSpec | FlattenSpec | DenseSpec, Field(discriminator="kind")
]
