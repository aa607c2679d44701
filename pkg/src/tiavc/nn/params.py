"""Parameter container and small tensor helpers.

All activations, parameters, and gradients are plain numpy arrays.
Training runs in float32; gradient verification casts everything to
float64 (see gradcheck).
"""

import numpy as np

from ..errors import NumericError

TRAIN_DTYPE = np.float32
CHECK_DTYPE = np.float64


def is_finite(a) -> bool:
    return bool(np.isfinite(a).all())


def assert_finite(a, what: str):
    """Raise NumericError naming `what` if the array holds NaN or Inf."""
    if not is_finite(a):
        raise NumericError(f"non-finite values in {what}")


class Parameter:
    """A named trainable tensor paired with a gradient buffer of the same shape."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def cast(self, dtype):
        self.value = self.value.astype(dtype)
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Parameter({self.name}, shape={tuple(self.value.shape)})"


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)
