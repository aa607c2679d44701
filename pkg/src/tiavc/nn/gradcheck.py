"""Finite-difference gradient verification.

Networks under check must run in float64; central differences with a
default epsilon of 1e-5. The relative error for one parameter entry is
|g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|, 1e-8).
"""

import math

import numpy as np

from ..errors import NumericError

DEFAULT_EPS = 1e-5
_FLOOR = 1e-8


def grad_check(loss_fn, parameters, epsilon=DEFAULT_EPS):
    """Max relative error between analytic and central-difference gradients.

    loss_fn(compute_grads) -> float loss; when compute_grads is True it must
    also accumulate gradients into the parameters (which are zeroed here
    first). Parameter values are perturbed in place for the numeric side.
    """
    for p in parameters:
        if p.value.dtype != np.float64:
            raise ValueError(f"grad_check requires float64 parameters ({p.name})")
        p.zero_grad()
    loss = loss_fn(True)
    if not math.isfinite(loss):
        raise NumericError("non-finite loss in grad_check")
    analytic = {p.name: p.grad.copy() for p in parameters}

    worst = 0.0
    for p in parameters:
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_fn(False)
            flat[i] = orig - epsilon
            down = loss_fn(False)
            flat[i] = orig
            if not (math.isfinite(up) and math.isfinite(down)):
                raise NumericError(f"non-finite loss while perturbing {p.name}")
            numeric = (up - down) / (2.0 * epsilon)
            g = analytic[p.name].reshape(-1)[i]
            err = abs(g - numeric) / max(abs(g), abs(numeric), _FLOOR)
            worst = max(worst, err)
    return worst


def projection_loss_fn(forward, backward, parameters, x, seed=0):
    """Scalar harness for layers without a task loss: L = sum(out * R).

    R is a fixed random projection so every output coordinate gets a
    gradient; backward(R) then propagates it.
    """
    rng = np.random.default_rng(seed)
    proj = {}

    def loss_fn(compute_grads):
        out = forward(x)
        if "r" not in proj:
            proj["r"] = rng.standard_normal(out.shape)
        loss = float(np.sum(out * proj["r"]))
        if compute_grads:
            backward(proj["r"].astype(out.dtype))
        return loss

    return loss_fn
