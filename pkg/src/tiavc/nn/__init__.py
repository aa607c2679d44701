"""Minimal neural-network kernel: layers with explicit backward passes,
fused losses, finite-difference gradient checking, and checkpoint IO."""

from .params import CHECK_DTYPE, TRAIN_DTYPE, Parameter, assert_finite, is_finite
from .layers import (
    AttentionPool,
    Concat,
    Conv1D,
    Dense,
    LayerSpec,
    LSTM,
    MaxPoolTime,
    ReLU,
    Sigmoid,
    Stack,
    Tanh,
    TimeDistributedDense,
    softmax,
    softmax_vjp,
)
from .losses import binary_cross_entropy, softmax_cross_entropy
from .gradcheck import grad_check, projection_loss_fn
from . import checkpoint

__all__ = [
    "AttentionPool", "Concat", "Conv1D", "Dense", "LayerSpec", "LSTM",
    "MaxPoolTime", "ReLU", "Sigmoid", "Stack", "Tanh", "TimeDistributedDense",
    "Parameter", "TRAIN_DTYPE", "CHECK_DTYPE", "assert_finite", "is_finite",
    "softmax", "softmax_vjp", "binary_cross_entropy", "softmax_cross_entropy",
    "grad_check", "projection_loss_fn", "checkpoint",
]
