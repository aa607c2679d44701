"""Losses fused with their output nonlinearity.

Both losses take logits and return (mean loss, gradient w.r.t. logits,
output probabilities). Fusing keeps the backward pass at (p - target).
"""

import numpy as np

from ..errors import ValidationError
from .layers import _sigmoid, softmax


def softmax_cross_entropy(logits, target):
    """Mean cross-entropy of softmax(logits) against one-hot/distribution rows."""
    if target.shape != logits.shape:
        raise ValidationError(
            f"cross-entropy target shape {target.shape} != logits shape {logits.shape}"
        )
    if np.any(target < 0) or np.any(np.abs(target.sum(axis=-1) - 1.0) > 1e-6):
        raise ValidationError("cross-entropy target rows must be valid distributions")
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1))
    loss = float(np.mean(log_z - (target * shifted).sum(axis=-1)))
    probs = softmax(logits, axis=-1)
    grad = (probs - target) / batch
    return loss, grad, probs


def binary_cross_entropy(logits, target):
    """Mean BCE of sigmoid(logits) against {0,1} labels; numerically stable."""
    if target.shape != logits.shape:
        raise ValidationError(
            f"BCE target shape {target.shape} != logits shape {logits.shape}"
        )
    if np.any((target != 0) & (target != 1)):
        raise ValidationError("BCE targets must be 0 or 1")
    batch = logits.shape[0]
    loss = float(np.mean(np.maximum(logits, 0) - logits * target
                         + np.log1p(np.exp(-np.abs(logits)))))
    probs = _sigmoid(logits)
    grad = (probs - target) / batch
    return loss, grad, probs
