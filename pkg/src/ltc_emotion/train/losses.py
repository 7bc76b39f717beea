"""Classification and reconstruction objectives."""
import numpy as np

from ..autograd import Tensor, log_softmax, mean, tsum
from ..errors import DataError, ShapeError


def smoothed_targets(labels, n_classes, eps):
    onehot = np.eye(n_classes)[labels]
    return (1.0 - eps) * onehot + eps / n_classes


def smoothed_weighted_ce(logits, labels, weights=None, eps=0.1):
    """Mean over the batch of ``w[y] * CE(smoothed target, softmax(logits))``.

    The smoothed target puts ``1 - eps + eps/K`` on the true class and
    ``eps/K`` elsewhere.
    """
    labels = np.asarray(labels, dtype=np.int64)
    b, k = logits.shape
    if labels.shape != (b,):
        raise ShapeError(f"cross-entropy: {b} logits rows but labels shape {labels.shape}")
    if np.any((labels < 0) | (labels >= k)):
        raise DataError(f"labels must lie in [0, {k}), got {labels.min()}..{labels.max()}")
    w = np.ones(k) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (k,):
        raise ShapeError(f"cross-entropy: {k} classes but {w.shape} weights")
    coef = smoothed_targets(labels, k, eps) * w[labels][:, None]
    return -tsum(log_softmax(logits, axis=1) * coef) * (1.0 / b)


def reconstruction_mse(fused, recon):
    diff = recon - fused
    return mean(diff * diff)


def recon_weight(epoch, cfg):
    """Linearly annealed ``lambda0 * (1 - e / E)``."""
    return cfg.lambda0 * (1.0 - epoch / cfg.epochs)


def composite_loss(ce, recon_mse, epoch, cfg):
    return ce + recon_mse * recon_weight(epoch, cfg)


def as_scalar(x):
    return x.item() if isinstance(x, Tensor) else float(x)
