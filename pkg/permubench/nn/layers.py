"""
Forward and backward passes of the fixed layer set.

Tensors are NumPy arrays in NHWC layout. Every forward function returns
(output, cache) and the matching backward function consumes the upstream
gradient and that cache. Convolution is cross-correlation (no kernel flip)
computed as an im2col matrix product.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from permubench.models.layers import ConvSpec, ShapeError


@dataclass(frozen=True)
class ConvCache:
    """Values kept from conv2d_forward for the backward pass."""

    input_shape: tuple[int, ...]
    cols: np.ndarray
    weights: np.ndarray
    spec: ConvSpec
    output_hw: tuple[int, int]


@dataclass(frozen=True)
class DenseCache:
    inputs: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class PoolCache:
    input_shape: tuple[int, ...]
    argmax: np.ndarray


def _im2col(x: np.ndarray, spec: ConvSpec) -> tuple[np.ndarray, tuple[int, int]]:
    (top, bottom), (left, right) = spec.pad_amounts()
    padded = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)))
    out_h, out_w, _ = spec.output_shape(x.shape[1:])  # type: ignore[arg-type]
    eh, ew = spec.effective_kernel
    # windows: (N, H_full, W_full, C, eh, ew)
    windows = sliding_window_view(padded, (eh, ew), axis=(1, 2))
    windows = windows[
        :,
        : (out_h - 1) * spec.stride + 1 : spec.stride,
        : (out_w - 1) * spec.stride + 1 : spec.stride,
        :,
        :: spec.dilation,
        :: spec.dilation,
    ]
    kh, kw = spec.kernel
    n = x.shape[0]
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * out_h * out_w, kh * kw * x.shape[3])
    return cols, (out_h, out_w)


def conv2d_forward(
    x: np.ndarray, spec: ConvSpec, weights: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, ConvCache]:
    """
    Cross-correlate an (N, H, W, Cin) batch with (kh, kw, Cin, Cout) weights.

    Output side is (H_padded - ((k - 1) * dilation + 1)) // stride + 1.

    Raises:
        ShapeError: If input, weights or bias do not match the layer descriptor
    """
    if x.ndim != 4:
        raise ShapeError("conv input must be NHWC", x.shape, "(N, H, W, C)")
    if weights.shape != spec.weight_shape:
        raise ShapeError("conv weights mismatch", weights.shape, spec.weight_shape)
    if bias.shape != (spec.out_channels,):
        raise ShapeError("conv bias mismatch", bias.shape, (spec.out_channels,))

    cols, (out_h, out_w) = _im2col(x, spec)
    out = cols @ weights.reshape(-1, spec.out_channels) + bias
    out = out.reshape(x.shape[0], out_h, out_w, spec.out_channels)
    return out, ConvCache(x.shape, cols, weights, spec, (out_h, out_w))


def conv2d_backward(
    upstream: np.ndarray, cache: ConvCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of conv2d_forward.

    Returns:
        (grad_input, grad_weights, grad_bias)

    Raises:
        ShapeError: If upstream does not have the forward output shape
    """
    spec = cache.spec
    n = cache.input_shape[0]
    out_h, out_w = cache.output_hw
    expected = (n, out_h, out_w, spec.out_channels)
    if upstream.shape != expected:
        raise ShapeError("conv upstream gradient mismatch", upstream.shape, expected)

    grad_flat = upstream.reshape(-1, spec.out_channels)
    grad_weights = (cache.cols.T @ grad_flat).reshape(spec.weight_shape)
    grad_bias = grad_flat.sum(axis=0)

    kh, kw = spec.kernel
    cin = spec.in_channels
    grad_cols = (grad_flat @ cache.weights.reshape(-1, spec.out_channels).T).reshape(
        n, out_h, out_w, kh, kw, cin
    )

    (top, bottom), (left, right) = spec.pad_amounts()
    _, height, width, _ = cache.input_shape
    grad_padded = np.zeros(
        (n, height + top + bottom, width + left + right, cin), dtype=upstream.dtype
    )
    row_span = (out_h - 1) * spec.stride + 1
    col_span = (out_w - 1) * spec.stride + 1
    for i in range(kh):
        r0 = i * spec.dilation
        for j in range(kw):
            c0 = j * spec.dilation
            grad_padded[:, r0 : r0 + row_span : spec.stride, c0 : c0 + col_span : spec.stride, :] += (
                grad_cols[:, :, :, i, j, :]
            )
    grad_input = grad_padded[:, top : top + height, left : left + width, :]
    return grad_input, grad_weights, grad_bias


def dense_forward(
    x: np.ndarray, weights: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, DenseCache]:
    """Affine map x @ W + b for an (N, F) batch."""
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError("dense input mismatch", x.shape, f"(N, {weights.shape[0]})")
    if bias.shape != (weights.shape[1],):
        raise ShapeError("dense bias mismatch", bias.shape, (weights.shape[1],))
    return x @ weights + bias, DenseCache(x, weights)


def dense_backward(
    upstream: np.ndarray, cache: DenseCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_weights, grad_bias)."""
    expected = (cache.inputs.shape[0], cache.weights.shape[1])
    if upstream.shape != expected:
        raise ShapeError("dense upstream gradient mismatch", upstream.shape, expected)
    return upstream @ cache.weights.T, cache.inputs.T @ upstream, upstream.sum(axis=0)


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mask = x > 0
    return np.where(mask, x, 0).astype(x.dtype, copy=False), mask


def relu_backward(upstream: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if upstream.shape != mask.shape:
        raise ShapeError("relu upstream gradient mismatch", upstream.shape, mask.shape)
    return np.where(mask, upstream, 0).astype(upstream.dtype, copy=False)


def maxpool2x2_forward(x: np.ndarray) -> tuple[np.ndarray, PoolCache]:
    """
    2x2 max pooling with stride 2 over an NHWC batch.

    Odd trailing rows/columns are dropped; ties go to the first maximum in
    row-major order inside the window.
    """
    if x.ndim != 4 or x.shape[1] < 2 or x.shape[2] < 2:
        raise ShapeError("maxpool input must be NHWC with H, W >= 2", x.shape, "(N, >=2, >=2, C)")
    n, height, width, channels = x.shape
    out_h, out_w = height // 2, width // 2
    blocks = (
        x[:, : out_h * 2, : out_w * 2, :]
        .reshape(n, out_h, 2, out_w, 2, channels)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, out_h, out_w, channels, 4)
    )
    argmax = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
    return out, PoolCache(x.shape, argmax)


def maxpool2x2_backward(upstream: np.ndarray, cache: PoolCache) -> np.ndarray:
    """Route each upstream value to the position that won its window."""
    n, height, width, channels = cache.input_shape
    out_h, out_w = height // 2, width // 2
    if upstream.shape != (n, out_h, out_w, channels):
        raise ShapeError("maxpool upstream gradient mismatch", upstream.shape, (n, out_h, out_w, channels))
    routed = np.zeros((n, out_h, out_w, channels, 4), dtype=upstream.dtype)
    np.put_along_axis(routed, cache.argmax[..., None], upstream[..., None], axis=-1)
    grad = np.zeros(cache.input_shape, dtype=upstream.dtype)
    grad[:, : out_h * 2, : out_w * 2, :] = (
        routed.reshape(n, out_h, out_w, channels, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, out_h * 2, out_w * 2, channels)
    )
    return grad


def flatten(x: np.ndarray) -> np.ndarray:
    """Row-major flattening of everything but the batch axis."""
    return x.reshape(x.shape[0], -1)
