# Numerical core initialization

from permubench.models.layers import Precision, ShapeError

from .checkpoint import CheckpointError, CheckpointManifest, load_checkpoint, save_checkpoint
from .init import glorot_bound, glorot_init
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
from .losses import softmax, softmax_cross_entropy
from .network import Network
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "CheckpointError",
    "CheckpointManifest",
    "Network",
    "Precision",
    "ShapeError",
    "adam_step",
    "conv2d_backward",
    "conv2d_forward",
    "dense_backward",
    "dense_forward",
    "flatten",
    "glorot_bound",
    "glorot_init",
    "load_checkpoint",
    "maxpool2x2_backward",
    "maxpool2x2_forward",
    "relu_backward",
    "relu_forward",
    "save_checkpoint",
    "softmax",
    "softmax_cross_entropy",
]
