"""Layer-level differentiable ops built on :mod:`tensor`."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor, as_tensor


def conv1d(x, weight, bias=None, stride=1, padding=0):
    """Cross-correlation of (B, C_in, L) with (C_out, C_in, K) kernels."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"conv1d: input {x.shape} incompatible with weight {weight.shape}")
    b_, c_in, _ = x.shape
    c_out, _, k = weight.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    lp = xp.shape[2]
    if lp < k:
        raise ShapeError(f"conv1d: padded length {lp} shorter than kernel {k}")
    l_out = (lp - k) // stride + 1
    cols = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    cols = cols.transpose(0, 2, 1, 3).reshape(b_ * l_out, c_in * k)
    w2 = weight.data.reshape(c_out, c_in * k)
    out = (cols @ w2.T).reshape(b_, l_out, c_out).transpose(0, 2, 1)
    parents = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise ShapeError(f"conv1d: bias {bias.shape} does not match {c_out} channels")
        out = out + bias.data[None, :, None]
        parents = parents + (bias,)

    def backward(g):
        g2 = g.transpose(0, 2, 1).reshape(b_ * l_out, c_out)
        gx = None
        if x.requires_grad:
            dcols = (g2 @ w2).reshape(b_, l_out, c_in, k).transpose(0, 2, 1, 3)
            dxp = np.zeros_like(xp)
            span = stride * (l_out - 1) + 1
            for j in range(k):
                dxp[:, :, j:j + span:stride] += dcols[..., j]
            gx = dxp[:, :, padding:lp - padding]
        gw = (g2.T @ cols).reshape(c_out, c_in, k) if weight.requires_grad else None
        grads = (gx, gw)
        if bias is not None:
            grads = grads + (g.sum(axis=(0, 2)),)
        return grads

    return Tensor._make(np.ascontiguousarray(out), parents, backward, "conv1d")


def maxpool1d(x, size=2, stride=None):
    """Max over non-padded windows along the last axis of (B, C, L)."""
    stride = stride or size
    if x.ndim != 3 or x.shape[2] < size:
        raise ShapeError(f"maxpool1d: input {x.shape} too short for window {size}")
    windows = sliding_window_view(x.data, size, axis=2)[:, :, ::stride, :]
    arg = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    l_out = out.shape[2]

    def backward(g):
        dx = np.zeros_like(x.data)
        span = stride * (l_out - 1) + 1
        for j in range(size):
            dx[:, :, j:j + span:stride] += g * (arg == j)
        return (dx,)

    return Tensor._make(out, (x,), backward, "maxpool1d")


def softmax(x, axis=-1):
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return Tensor._make(s, (x,), backward, "softmax")


def log_softmax(x, axis=-1):
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    s = np.exp(out)

    def backward(g):
        return (g - s * g.sum(axis=axis, keepdims=True),)

    return Tensor._make(out, (x,), backward, "log_softmax")


def dropout(x, p, training, rng):
    """Inverted dropout; identity when not training or ``p == 0``."""
    if not training or p <= 0.0:
        return x
    if p >= 1.0:
        raise ValueError("dropout probability must be < 1")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return Tensor._make(x.data * mask, (x,), lambda g: (g * mask,), "dropout")


def batchnorm(x, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
    """Batch normalisation over every axis but 1.

    ``running_mean`` / ``running_var`` are updated in place during training
    (unbiased variance, as the running estimate).
    """
    if x.ndim not in (2, 3) or x.shape[1] != gamma.shape[0]:
        raise ShapeError(f"batchnorm: input {x.shape} incompatible with {gamma.shape[0]} features")
    axes = (0,) if x.ndim == 2 else (0, 2)
    shape = (1, -1) if x.ndim == 2 else (1, -1, 1)
    n = x.data.size // x.shape[1]
    if training:
        if n < 2:
            raise ShapeError(f"batchnorm: training needs more than one value per channel, got {x.shape}")
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * n / (n - 1)
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu.reshape(shape)) * inv.reshape(shape)
    out = xhat * gamma.data.reshape(shape) + beta.data.reshape(shape)

    def backward(g):
        ggamma = (g * xhat).sum(axis=axes)
        gbeta = g.sum(axis=axes)
        dxhat = g * gamma.data.reshape(shape)
        if training:
            gx = (inv.reshape(shape) / n) * (
                n * dxhat
                - dxhat.sum(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
            )
        else:
            gx = dxhat * inv.reshape(shape)
        return gx, ggamma, gbeta

    return Tensor._make(out, (x, gamma, beta), backward, "batchnorm")
