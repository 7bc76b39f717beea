"""Building blocks: dense, conv, batchnorm, attention pooling, MLP encoders."""
import numpy as np

from ..autograd import (
    Module,
    Tensor,
    batchnorm,
    conv1d,
    dropout,
    maxpool1d,
    parameter,
    relu,
    softmax,
    tanh,
)
from ..autograd import tsum
from ..errors import ShapeError
from ..ltc import make_rng, xavier_uniform


class Linear(Module):
    def __init__(self, d_in, d_out, rng, gain=1.0, bias=True):
        super().__init__()
        self.d_in, self.d_out = d_in, d_out
        self.weight = parameter(xavier_uniform(rng, d_out, d_in, gain))
        self.bias = parameter(np.zeros(d_out)) if bias else None

    def __call__(self, x):
        if x.shape[-1] != self.d_in:
            raise ShapeError(f"linear: input {x.shape} does not match width {self.d_in}")
        y = x @ self.weight.T
        return y + self.bias if self.bias is not None else y


class BatchNorm(Module):
    def __init__(self, n, momentum=0.1, eps=1e-5):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.weight = parameter(np.ones(n))
        self.bias = parameter(np.zeros(n))
        self.register_buffer("running_mean", np.zeros(n))
        self.register_buffer("running_var", np.ones(n))

    def __call__(self, x):
        return batchnorm(x, self.weight, self.bias, self._buffers["running_mean"],
                         self._buffers["running_var"], self.training, self.momentum, self.eps)


class ConvBlock(Module):
    """conv -> batchnorm -> relu -> maxpool(2) -> dropout; halves the length."""

    def __init__(self, c_in, c_out, kernel, padding, pool, p, rng):
        super().__init__()
        self.padding, self.pool, self.p = padding, pool, p
        fan_in, fan_out = c_in * kernel, c_out * kernel
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        self.weight = parameter(rng.uniform(-limit, limit, size=(c_out, c_in, kernel)))
        self.bias = parameter(np.zeros(c_out))
        self.bn = BatchNorm(c_out)

    def __call__(self, x, rng):
        y = conv1d(x, self.weight, self.bias, stride=1, padding=self.padding)
        y = maxpool1d(relu(self.bn(y)), self.pool, self.pool)
        return dropout(y, self.p, self.training, rng)


class TemporalAttention(Module):
    """Additive scoring ``e_t = v . tanh(W_a h_t + b_a)`` with softmax over time."""

    def __init__(self, d_h, d_a, p, rng):
        super().__init__()
        self.p = p
        self.W_a = parameter(xavier_uniform(rng, d_a, d_h))
        self.b_a = parameter(np.zeros(d_a))
        self.v = parameter(xavier_uniform(rng, 1, d_a)[0])

    def __call__(self, hidden, rng):
        """hidden (B, T, d_h) -> pooled (B, d_h), weights (B, T)."""
        u = tanh(hidden @ self.W_a.T + self.b_a)
        u = dropout(u, self.p, self.training, rng)
        scores = tsum(u * self.v, axis=2)
        alpha = softmax(scores, axis=1)
        b, t = alpha.shape
        pooled = tsum(hidden * alpha.reshape(b, t, 1), axis=1)
        return pooled, alpha


def attention_pool(hidden, attn, rng=None):
    hidden = hidden if isinstance(hidden, Tensor) else Tensor(hidden)
    return attn(hidden, rng)


class MLPEncoder(Module):
    """Linear -> ReLU (-> Dropout) stack for one tabular modality.

    ``final_dropout`` controls whether the last layer is followed by dropout.
    """

    def __init__(self, name, dims, p, rng, final_dropout=True):
        super().__init__()
        self.name, self.dims, self.p, self.final_dropout = name, tuple(dims), p, final_dropout
        self.layers = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]

    def __call__(self, x, rng):
        if x.ndim != 2 or x.shape[1] != self.dims[0]:
            raise ShapeError(f"encoder {self.name}: expected width {self.dims[0]}, got shape {x.shape}")
        for i, layer in enumerate(self.layers):
            x = relu(layer(x))
            if i < len(self.layers) - 1 or self.final_dropout:
                x = dropout(x, self.p, self.training, rng)
        return x


__all__ = ["BatchNorm", "ConvBlock", "Linear", "MLPEncoder", "TemporalAttention", "attention_pool",
           "make_rng"]
