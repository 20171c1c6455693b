"""
Parameterised network instantiated from a ModelSpec.

Holds the weights of every convolution and dense layer, runs the forward pass
while caching what the backward pass needs, and returns parameter gradients
keyed like the parameters ("layer3.weight", "layer3.bias").
"""

from typing import Any

import numpy as np

from permubench.models.architecture import ModelSpec
from permubench.models.layers import (
    ConvSpec,
    DenseSpec,
    FlattenSpec,
    MaxPoolSpec,
    Precision,
    ReluSpec,
    ShapeError,
)
from permubench.utils import derive_seed

from .init import glorot_init
from .layers import (
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    flatten,
    maxpool2x2_backward,
    maxpool2x2_forward,
    relu_backward,
    relu_forward,
)


def weight_name(index: int) -> str:
    return f"layer{index}.weight"


def bias_name(index: int) -> str:
    return f"layer{index}.bias"


class Network:
    """
    Trainable instance of a ModelSpec.

    Weights are Glorot-uniform with a per-layer seed derived from init_seed;
    biases start at zero.
    """

    def __init__(
        self,
        spec: ModelSpec,
        init_seed: int = 0,
        precision: Precision = Precision.SINGLE,
        params: dict[str, np.ndarray] | None = None,
    ) -> None:
        self.spec = spec
        self.init_seed = init_seed
        self.precision = Precision(precision)
        self.dtype = self.precision.dtype
        self.params: dict[str, np.ndarray] = {}
        self._caches: list[Any] = []

        for index, weight_shape, bias_shape in spec.parameter_shapes():
            if params is None:
                self.params[weight_name(index)] = glorot_init(
                    weight_shape, derive_seed(init_seed, index), self.dtype
                )
                self.params[bias_name(index)] = np.zeros(bias_shape, dtype=self.dtype)
            else:
                for name, shape in ((weight_name(index), weight_shape), (bias_name(index), bias_shape)):
                    if name not in params:
                        raise ShapeError(f"missing parameter {name}", (), shape)
                    if params[name].shape != shape:
                        raise ShapeError(f"parameter {name} mismatch", params[name].shape, shape)
                    self.params[name] = np.array(params[name], dtype=self.dtype)

    def forward(self, x: np.ndarray, keep_cache: bool = True) -> np.ndarray:
        """
        Logits of an (N, H, W, C) batch; caches activations for backward().

        With keep_cache=False every layer cache is dropped as soon as the
        next layer has run, so inference never holds the im2col buffers.

        Raises:
            ShapeError: If the batch does not match the model input shape
        """
        if x.ndim != 4 or tuple(x.shape[1:]) != self.spec.input_shape:
            raise ShapeError("network input mismatch", x.shape, ("N", *self.spec.input_shape))
        out = np.asarray(x, dtype=self.dtype)
        self._caches = []
        caches: list[Any] = []
        for index, layer in enumerate(self.spec.layers):
            cache: Any = None
            if isinstance(layer, ConvSpec):
                out, cache = conv2d_forward(
                    out, layer, self.params[weight_name(index)], self.params[bias_name(index)]
                )
            elif isinstance(layer, DenseSpec):
                out, cache = dense_forward(
                    out, self.params[weight_name(index)], self.params[bias_name(index)]
                )
            elif isinstance(layer, ReluSpec):
                out, cache = relu_forward(out)
            elif isinstance(layer, MaxPoolSpec):
                out, cache = maxpool2x2_forward(out)
            elif isinstance(layer, FlattenSpec):
                cache = out.shape
                out = flatten(out)
            if keep_cache:
                caches.append(cache)
        self._caches = caches
        return out

    def backward(self, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients of the last forward() given d(loss)/d(logits)."""
        if len(self._caches) != len(self.spec.layers):
            raise RuntimeError("backward() called before forward()")
        grads: dict[str, np.ndarray] = {}
        grad = grad_logits
        for index in range(len(self.spec.layers) - 1, -1, -1):
            layer, cache = self.spec.layers[index], self._caches[index]
            if isinstance(layer, ConvSpec):
                grad, grads[weight_name(index)], grads[bias_name(index)] = conv2d_backward(grad, cache)
            elif isinstance(layer, DenseSpec):
                grad, grads[weight_name(index)], grads[bias_name(index)] = dense_backward(grad, cache)
            elif isinstance(layer, ReluSpec):
                grad = relu_backward(grad, cache)
            elif isinstance(layer, MaxPoolSpec):
                grad = maxpool2x2_backward(grad, cache)
            elif isinstance(layer, FlattenSpec):
                grad = grad.reshape(cache)
        self._caches = []
        return grads

    def logits(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Forward pass in batches without keeping caches."""
        chunks = [
            self.forward(x[start : start + batch_size], keep_cache=False)
            for start in range(0, len(x), batch_size)
        ]
        if not chunks:
            return np.zeros((0, self.spec.num_classes), dtype=self.dtype)
        return np.concatenate(chunks)

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Predicted class per example; ties go to the lowest class index."""
        return self.logits(x, batch_size).argmax(axis=1)

    def parameter_count(self) -> int:
        return int(sum(value.size for value in self.params.values()))
