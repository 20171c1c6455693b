"""Softmax cross-entropy loss."""

import numpy as np

from permubench.models.layers import ShapeError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Mean cross-entropy over the batch and its gradient w.r.t. the logits.

    Returns:
        (loss, grad_logits) with grad_logits = (softmax - onehot) / N

    Raises:
        ShapeError: If logits are not (N, K) or labels are not (N,)
        ValueError: If a label is outside [0, K)
    """
    if logits.ndim != 2:
        raise ShapeError("logits must be (N, K)", logits.shape, "(N, K)")
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError("labels must be one per logit row", labels.shape, (n,))
    if n and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k}), got range [{labels.min()}, {labels.max()}]")

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(n)
    loss = float(-log_probs[rows, labels].mean())

    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, grad.astype(logits.dtype, copy=False)
