"""Glorot-uniform weight initialisation."""

import math

import numpy as np

from permubench.utils import make_generator


def glorot_bound(shape: tuple[int, ...]) -> float:
    """
    sqrt(6 / (fan_in + fan_out)) for dense (F_in, F_out), conv (kh, kw, Cin, Cout)
    or vector shapes.
    """
    if not shape or min(shape) < 1:
        raise ValueError(f"glorot initialisation needs a nonempty shape, got {shape}")
    if len(shape) == 1:
        fan_in = fan_out = shape[0]
    else:
        receptive = math.prod(shape[:-2])
        fan_in, fan_out = shape[-2] * receptive, shape[-1] * receptive
    return math.sqrt(6.0 / (fan_in + fan_out))


def glorot_init(shape: tuple[int, ...], seed: int, dtype: np.dtype | type = np.float32) -> np.ndarray:
    """Uniform samples in [-bound, bound], deterministic per seed."""
    bound = glorot_bound(tuple(shape))
    values = make_generator(seed).uniform(-bound, bound, size=shape)
    return values.astype(dtype)
