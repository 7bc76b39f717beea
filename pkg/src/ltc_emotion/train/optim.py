"""AdamW, learning-rate schedule and global-norm clipping."""
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(params, grads, state, lr, weight_decay=0.01, betas=(0.9, 0.999), eps=1e-8):
    """In-place update of ``params`` (name -> ndarray) given ``grads``.

    Decay shrinks the weights directly by ``(1 - lr * wd)`` before the Adam
    update, never through the gradient. With ``weight_decay == 0`` the decay
    line is skipped so the trajectory is exactly Adam's.
    """
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        if weight_decay:
            p *= 1.0 - lr * weight_decay
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), eps=1e-8):
    return adamw_step(params, grads, state, lr, 0.0, betas, eps)


def lr_at(epoch, cfg):
    """Linear warmup reaching ``cfg.lr`` in epoch ``warmup - 1``, then cosine decay."""
    warm, total = cfg.warmup_epochs, cfg.epochs
    if epoch < warm:
        return cfg.lr * (epoch + 1) / warm
    if total <= warm:
        return cfg.lr
    return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * (epoch - warm) / (total - warm)))


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


def clip_gradients(grads, max_norm=1.0):
    """Scale every gradient by one factor so the joint L2 norm is at most ``max_norm``.

    Returns ``(grads, norm_before)``; arrays are scaled in place.
    """
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return grads, norm
