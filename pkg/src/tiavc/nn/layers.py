"""Layers with explicit forward/backward passes.

Conventions:
  * batch axis first; sequence/frame axis second where present
  * forward() caches whatever backward() needs on the instance
  * backward(grad_out) accumulates parameter gradients (+=) and returns
    the gradient w.r.t. the layer input
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError
from .params import TRAIN_DTYPE, Parameter, glorot_uniform


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    """Max-subtracted softmax; rows sum to 1."""
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_vjp(probs, grad_probs, axis=-1):
    """Gradient through softmax given gradient on its output."""
    dot = np.sum(probs * grad_probs, axis=axis, keepdims=True)
    return probs * (grad_probs - dot)


class Layer:
    """Base layer: subclasses implement forward/backward and list parameters."""

    name = "layer"

    def params(self):
        return []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def __call__(self, x):
        return self.forward(x)

    def _check_last_dim(self, x, expected):
        if x.shape[-1] != expected:
            raise DimensionError(
                f"layer '{self.name}': expected last dim {expected}, got {x.shape[-1]}"
            )


class Dense(Layer):
    """y = x @ W + b on (batch, in) inputs."""

    def __init__(self, in_dim, out_dim, rng, name="dense", dtype=TRAIN_DTYPE):
        if in_dim <= 0 or out_dim <= 0:
            raise DimensionError(f"layer '{name}': dims must be positive")
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(
            f"{name}.weight", glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim, dtype)
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim, dtype=dtype))

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        self._check_last_dim(x, self.in_dim)
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, grad_out):
        self.weight.grad += self._x.T @ grad_out
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value.T


class TimeDistributedDense(Layer):
    """The same dense map applied independently at every step of (batch, T, in)."""

    def __init__(self, in_dim, out_dim, rng, name="tdd", dtype=TRAIN_DTYPE):
        if in_dim <= 0 or out_dim <= 0:
            raise DimensionError(f"layer '{name}': dims must be positive")
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(
            f"{name}.weight", glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim, dtype)
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim, dtype=dtype))

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        self._check_last_dim(x, self.in_dim)
        self._x = x
        b, t, _ = x.shape
        flat = x.reshape(b * t, self.in_dim)
        return (flat @ self.weight.value + self.bias.value).reshape(b, t, self.out_dim)

    def backward(self, grad_out):
        b, t, _ = grad_out.shape
        flat_x = self._x.reshape(b * t, self.in_dim)
        flat_g = grad_out.reshape(b * t, self.out_dim)
        self.weight.grad += flat_x.T @ flat_g
        self.bias.grad += flat_g.sum(axis=0)
        return (flat_g @ self.weight.value.T).reshape(self._x.shape)


_GATES = ("in_gate", "forget_gate", "out_gate", "cell_cand")


class LSTM(Layer):
    """Single-layer LSTM over (batch, T, in); returns the full hidden sequence.

    Zero initial hidden/cell state. Eight weight matrices (input and
    recurrent per gate) plus four biases; backward is full BPTT.
    """

    def __init__(self, in_dim, hidden_dim, rng, name="lstm", dtype=TRAIN_DTYPE):
        if in_dim <= 0 or hidden_dim <= 0:
            raise DimensionError(f"layer '{name}': dims must be positive")
        self.name = name
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.w_x = {}
        self.w_h = {}
        self.b = {}
        for gate in _GATES:
            self.w_x[gate] = Parameter(
                f"{name}.{gate}.w_x",
                glorot_uniform(rng, (in_dim, hidden_dim), in_dim, hidden_dim, dtype),
            )
            self.w_h[gate] = Parameter(
                f"{name}.{gate}.w_h",
                glorot_uniform(rng, (hidden_dim, hidden_dim), hidden_dim, hidden_dim, dtype),
            )
            self.b[gate] = Parameter(f"{name}.{gate}.b", np.zeros(hidden_dim, dtype=dtype))

    def params(self):
        out = []
        for gate in _GATES:
            out += [self.w_x[gate], self.w_h[gate], self.b[gate]]
        return out

    def _stacked_weights(self):
        # the four gate matmuls fuse into one GEMM on concatenated columns;
        # each output element is still the same independent dot product
        wx = np.concatenate([self.w_x[g].value for g in _GATES], axis=1)
        wh = np.concatenate([self.w_h[g].value for g in _GATES], axis=1)
        bias = np.concatenate([self.b[g].value for g in _GATES])
        return wx, wh, bias

    def forward(self, x):
        self._check_last_dim(x, self.in_dim)
        if x.shape[1] == 0:
            raise DimensionError(f"layer '{self.name}': empty sequence (T == 0)")
        b, t, _ = x.shape
        hd = self.hidden_dim
        wx, wh, bias = self._stacked_weights()
        x_proj = (x.reshape(b * t, self.in_dim) @ wx).reshape(b, t, 4 * hd) + bias
        h = np.zeros((b, hd), dtype=x.dtype)
        c = np.zeros((b, hd), dtype=x.dtype)
        self._x = x
        self._steps = []
        hs = np.empty((b, t, hd), dtype=x.dtype)
        for step in range(t):
            a = x_proj[:, step, :] + h @ wh
            gi = _sigmoid(a[:, :hd])
            gf = _sigmoid(a[:, hd:2 * hd])
            go = _sigmoid(a[:, 2 * hd:3 * hd])
            gc = np.tanh(a[:, 3 * hd:])
            c_new = gf * c + gi * gc
            tc = np.tanh(c_new)
            h_new = go * tc
            self._steps.append((h, c, gi, gf, go, gc, tc))
            h, c = h_new, c_new
            hs[:, step, :] = h
        return hs

    def backward(self, grad_out):
        b, t, _ = grad_out.shape
        hd = self.hidden_dim
        wx, wh, _ = self._stacked_weights()
        da_all = np.empty((b, t, 4 * hd), dtype=grad_out.dtype)
        dh_next = np.zeros((b, hd), dtype=grad_out.dtype)
        dc_next = np.zeros((b, hd), dtype=grad_out.dtype)
        for step in reversed(range(t)):
            h_prev, c_prev, gi, gf, go, gc, tc = self._steps[step]
            dh = grad_out[:, step, :] + dh_next
            da_o = dh * tc * go * (1.0 - go)
            dc = dc_next + dh * go * (1.0 - tc * tc)
            da_f = dc * c_prev * gf * (1.0 - gf)
            da_i = dc * gc * gi * (1.0 - gi)
            da_g = dc * gi * (1.0 - gc * gc)
            da = np.concatenate([da_i, da_f, da_o, da_g], axis=1)  # _GATES order
            da_all[:, step, :] = da
            dh_next = da @ wh.T
            dc_next = dc * gf
        flat_x = self._x.reshape(b * t, self.in_dim)
        flat_da = da_all.reshape(b * t, 4 * hd)
        prev_h = np.stack([s[0] for s in self._steps], axis=1).reshape(b * t, hd)
        dwx = flat_x.T @ flat_da
        dwh = prev_h.T @ flat_da
        db = flat_da.sum(axis=0)
        for j, gate in enumerate(_GATES):
            sl = slice(j * hd, (j + 1) * hd)
            self.w_x[gate].grad += dwx[:, sl]
            self.w_h[gate].grad += dwh[:, sl]
            self.b[gate].grad += db[sl]
        return (flat_da @ wx.T).reshape(b, t, self.in_dim)


class AttentionPool(Layer):
    """Additive self-attention pooling of (batch, T, d) into (batch, d).

    score_t = v . tanh(W h_t + b); weights = softmax over T;
    pooled = sum_t weights_t * h_t. forward returns (pooled, weights).
    """

    def __init__(self, dim, rng, name="attn", dtype=TRAIN_DTYPE):
        if dim <= 0:
            raise DimensionError(f"layer '{name}': dims must be positive")
        self.name = name
        self.dim = dim
        self.weight = Parameter(
            f"{name}.weight", glorot_uniform(rng, (dim, dim), dim, dim, dtype)
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(dim, dtype=dtype))
        self.score_vec = Parameter(
            f"{name}.score_vec", glorot_uniform(rng, (dim,), dim, 1, dtype)
        )

    def params(self):
        return [self.weight, self.bias, self.score_vec]

    def forward(self, h):
        self._check_last_dim(h, self.dim)
        if h.shape[1] == 0:
            raise DimensionError(f"layer '{self.name}': empty sequence (T == 0)")
        self._h = h
        self._u = np.tanh(h @ self.weight.value + self.bias.value)   # (B,T,d)
        scores = self._u @ self.score_vec.value                       # (B,T)
        self._alpha = softmax(scores, axis=1)
        pooled = np.einsum("bt,btd->bd", self._alpha, h)
        return pooled, self._alpha

    def backward(self, grad_pooled):
        h, u, alpha = self._h, self._u, self._alpha
        d_alpha = np.einsum("bd,btd->bt", grad_pooled, h)
        dh = alpha[:, :, None] * grad_pooled[:, None, :]
        d_scores = softmax_vjp(alpha, d_alpha, axis=1)
        du = d_scores[:, :, None] * self.score_vec.value
        self.score_vec.grad += np.einsum("bt,btd->d", d_scores, u)
        d_pre = du * (1.0 - u * u)
        b, t, d = h.shape
        self.weight.grad += h.reshape(b * t, d).T @ d_pre.reshape(b * t, d)
        self.bias.grad += d_pre.reshape(b * t, d).sum(axis=0)
        dh += d_pre @ self.weight.value.T
        return dh


class Conv1D(Layer):
    """1-D cross-correlation over the time axis of (batch, T, in_ch).

    "Same" zero padding keeps the output length at T; the kernel width
    must be odd. Weight shape (k, in_ch, out_ch).
    """

    def __init__(self, in_ch, out_ch, kernel, rng, name="conv1d", dtype=TRAIN_DTYPE):
        if in_ch <= 0 or out_ch <= 0:
            raise DimensionError(f"layer '{name}': dims must be positive")
        if kernel < 1 or kernel % 2 == 0:
            raise DimensionError(f"layer '{name}': kernel width must be odd and >= 1")
        self.name = name
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel = kernel
        self.weight = Parameter(
            f"{name}.weight",
            glorot_uniform(rng, (kernel, in_ch, out_ch), kernel * in_ch, kernel * out_ch, dtype),
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(out_ch, dtype=dtype))

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        self._check_last_dim(x, self.in_ch)
        b, t, _ = x.shape
        pad = (self.kernel - 1) // 2
        if pad:
            xp = np.zeros((b, t + 2 * pad, self.in_ch), dtype=x.dtype)
            xp[:, pad:pad + t, :] = x
        else:
            xp = x
        self._xp = xp
        self._t = t
        y = np.broadcast_to(self.bias.value, (b, t, self.out_ch)).copy()
        for tap in range(self.kernel):
            y += xp[:, tap:tap + t, :] @ self.weight.value[tap]
        return y

    def backward(self, grad_out):
        b, t, _ = grad_out.shape
        pad = (self.kernel - 1) // 2
        flat_g = grad_out.reshape(b * t, self.out_ch)
        self.bias.grad += flat_g.sum(axis=0)
        dxp = np.zeros_like(self._xp)
        for tap in range(self.kernel):
            window = self._xp[:, tap:tap + t, :].reshape(b * t, self.in_ch)
            self.weight.grad[tap] += window.T @ flat_g
            dxp[:, tap:tap + t, :] += grad_out @ self.weight.value[tap].T
        return dxp[:, pad:pad + t, :] if pad else dxp


class MaxPoolTime(Layer):
    """Per-channel max over the time axis: (batch, T, ch) -> (batch, ch).

    Backward routes each channel's gradient to the first argmax position.
    """

    name = "maxpool_time"

    def forward(self, x):
        if x.shape[1] == 0:
            raise DimensionError(f"layer '{self.name}': empty sequence (T == 0)")
        self._shape = x.shape
        self._idx = np.argmax(x, axis=1)   # first occurrence on ties
        return np.take_along_axis(x, self._idx[:, None, :], axis=1)[:, 0, :]

    def backward(self, grad_out):
        dx = np.zeros(self._shape, dtype=grad_out.dtype)
        np.put_along_axis(dx, self._idx[:, None, :], grad_out[:, None, :], axis=1)
        return dx


class ReLU(Layer):
    name = "relu"

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad_out):
        return grad_out * self._mask


class Tanh(Layer):
    name = "tanh"

    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad_out):
        return grad_out * (1.0 - self._y * self._y)


class Sigmoid(Layer):
    name = "sigmoid"

    def forward(self, x):
        self._y = _sigmoid(x)
        return self._y

    def backward(self, grad_out):
        return grad_out * self._y * (1.0 - self._y)


class Concat(Layer):
    """Concatenate a list of arrays along the last axis; backward splits."""

    name = "concat"

    def forward(self, xs):
        self._sizes = [x.shape[-1] for x in xs]
        return np.concatenate(xs, axis=-1)

    def backward(self, grad_out):
        out = []
        start = 0
        for size in self._sizes:
            out.append(grad_out[..., start:start + size])
            start += size
        return out


class Stack(Layer):
    """A straight pipeline of single-input/single-output layers."""

    def __init__(self, layers, name="stack"):
        self.name = name
        self.layers = list(layers)

    def params(self):
        out = []
        for layer in self.layers:
            out += layer.params()
        return out

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out


_ACTIVATIONS = {"relu": ReLU, "tanh": Tanh, "sigmoid": Sigmoid}


@dataclass
class LayerSpec:
    """Declarative layer description used by the model builders.

    kind is one of: dense, time_distributed_dense, lstm, attention_pool,
    conv1d, maxpool_time, activation, concat.
    """

    kind: str
    options: dict = field(default_factory=dict)

    def build(self, rng, name=None, dtype=TRAIN_DTYPE):
        opts = dict(self.options)
        name = name or self.kind
        if self.kind == "dense":
            return Dense(opts["in_dim"], opts["out_dim"], rng, name=name, dtype=dtype)
        if self.kind == "time_distributed_dense":
            return TimeDistributedDense(opts["in_dim"], opts["out_dim"], rng, name=name, dtype=dtype)
        if self.kind == "lstm":
            return LSTM(opts["in_dim"], opts["hidden_dim"], rng, name=name, dtype=dtype)
        if self.kind == "attention_pool":
            return AttentionPool(opts["dim"], rng, name=name, dtype=dtype)
        if self.kind == "conv1d":
            return Conv1D(opts["in_ch"], opts["out_ch"], opts.get("kernel", 1), rng,
                          name=name, dtype=dtype)
        if self.kind == "maxpool_time":
            return MaxPoolTime()
        if self.kind == "activation":
            return _ACTIVATIONS[opts["name"]]()
        if self.kind == "concat":
            return Concat()
        raise ValueError(f"unknown layer kind: {self.kind!r}")
