"""
Adam optimizer with per-step learning-rate decay.

The decay is the time-based schedule lr_t = base_lr / (1 + decay * t), not
weight decay. Parameters are updated in place.
"""

from dataclasses import dataclass, field

import numpy as np

from permubench.models.layers import ShapeError

DEFAULT_LR = 1e-4
DEFAULT_DECAY = 1e-6


@dataclass
class AdamState:
    """First/second moment accumulators and step counter."""

    base_lr: float = DEFAULT_LR
    decay: float = DEFAULT_DECAY
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be > 0, got {self.base_lr}")
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")

    def learning_rate(self, t: int | None = None) -> float:
        """Decayed learning rate at step t (defaults to the current step)."""
        step = self.t if t is None else t
        return self.base_lr / (1.0 + self.decay * step)


def adam_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState
) -> tuple[dict[str, np.ndarray], AdamState]:
    """
    One Adam update of every parameter in place.

    t <- t + 1; m <- b1 m + (1 - b1) g; v <- b2 v + (1 - b2) g^2;
    p <- p - lr_t * m_hat / (sqrt(v_hat) + eps).

    Raises:
        ShapeError: If a gradient is missing or its shape differs from its parameter
    """
    for name, value in params.items():
        if name not in grads:
            raise ShapeError(f"no gradient for parameter {name}", (), value.shape)
        if grads[name].shape != value.shape:
            raise ShapeError(f"gradient of {name} mismatch", grads[name].shape, value.shape)

    state.t += 1
    lr_t = state.learning_rate()
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t

    for name, value in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        value -= (lr_t * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(value.dtype, copy=False)
    return params, state
