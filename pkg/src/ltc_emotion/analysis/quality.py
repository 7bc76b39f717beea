"""Calibration, latent-space separability and attention profiles."""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..errors import DataError


@dataclass
class CalibrationReport:
    ece: float
    mce: float
    brier: float
    mean_confidence: float
    accuracy: float
    bins: list = field(default_factory=list)  # dicts: lo, hi, confidence, accuracy, count


def calibration(probs, labels, n_bins=10):
    """Equal-width bins over max-probability; a bin holds confidences in (lo, hi].

    Brier score sums squared errors over classes, so it lies in [0, 2].
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != labels.size or labels.size == 0:
        raise DataError(f"calibration: probs {probs.shape} vs {labels.size} labels")
    conf = probs.max(axis=1)
    correct = (probs.argmax(axis=1) == labels).astype(float)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    which = np.clip(np.digitize(conf, edges[1:-1], right=True), 0, n_bins - 1)
    n = labels.size
    bins, ece, mce = [], 0.0, 0.0
    for b in range(n_bins):
        sel = which == b
        count = int(sel.sum())
        row = {"lo": float(edges[b]), "hi": float(edges[b + 1]), "count": count,
               "confidence": float("nan"), "accuracy": float("nan")}
        if count:
            row["confidence"] = float(conf[sel].mean())
            row["accuracy"] = float(correct[sel].mean())
            gap = abs(row["accuracy"] - row["confidence"])
            ece += count / n * gap
            mce = max(mce, gap)
        bins.append(row)
    onehot = np.eye(probs.shape[1])[labels]
    brier = float(np.mean(np.sum((probs - onehot) ** 2, axis=1)))
    return CalibrationReport(float(ece), float(mce), brier, float(conf.mean()),
                             float(correct.mean()), bins)


@dataclass
class SeparabilityReport:
    calinski_harabasz: float
    davies_bouldin: float
    inter_centroid_euclidean: float
    inter_centroid_mahalanobis: float
    within_ss: float
    between_ss: float
    ridge: float
    n_classes: int


def separability(points, labels):
    """Cluster-quality indices of labelled points (rows of ``points``)."""
    x = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2 or np.any(counts < 2):
        raise DataError("separability needs >= 2 classes with >= 2 points each")
    n, d = x.shape
    k = classes.size
    grand = x.mean(axis=0)
    centroids = np.array([x[labels == c].mean(axis=0) for c in classes])
    resid = x - centroids[np.searchsorted(classes, labels)]
    within = float(np.sum(resid**2))
    between = float(np.sum(counts[:, None] * (centroids - grand) ** 2))
    ch = float("inf") if within == 0 else (between / (k - 1)) / (within / (n - k))

    spread = np.array([np.linalg.norm(x[labels == c] - centroids[i], axis=1).mean()
                       for i, c in enumerate(classes)])
    dist = np.linalg.norm(centroids[:, None] - centroids[None], axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (spread[:, None] + spread[None]) / dist
    np.fill_diagonal(ratio, -np.inf)
    db = float(np.mean(np.max(ratio, axis=1)))

    pooled = resid.T @ resid / (n - k)
    trace = float(np.trace(pooled))
    ridge = 1e-6 * trace / d if trace > 0 else 1e-6
    factor = cho_factor(pooled + ridge * np.eye(d))
    pairs = list(combinations(range(k), 2))
    eu = [dist[i, j] for i, j in pairs]
    maha = []
    for i, j in pairs:
        diff = centroids[i] - centroids[j]
        maha.append(np.sqrt(diff @ cho_solve(factor, diff)))
    return SeparabilityReport(ch, db, float(np.mean(eu)), float(np.mean(maha)), within, between,
                              ridge, int(k))


@dataclass
class AttentionProfile:
    mean: np.ndarray  # (K, T') mean weights per class
    heatmap: np.ndarray  # rows min-max scaled to [0, 1]
    counts: np.ndarray
    class_names: tuple


def attention_profiles(weights, labels, class_names):
    """Mean attention curve per class plus a row-normalised heatmap."""
    weights = np.asarray(weights, dtype=float)
    labels = np.asarray(labels)
    k = len(class_names)
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        empty = [class_names[c] for c in np.flatnonzero(counts == 0)]
        raise DataError(f"no samples for classes {empty}")
    mean = np.array([weights[labels == c].mean(axis=0) for c in range(k)])
    lo, hi = mean.min(axis=1, keepdims=True), mean.max(axis=1, keepdims=True)
    span = hi - lo
    heat = np.divide(mean - lo, span, out=np.zeros_like(mean), where=span > 0)
    return AttentionProfile(mean, heat, counts, tuple(class_names))


def profile_distance(profile):
    """Largest pairwise L1 distance between class mean curves."""
    m = profile.mean
    return float(max(np.abs(m[i] - m[j]).sum() for i, j in combinations(range(len(m)), 2)))


def attention_long_csv(profile):
    lines = ["emotion,timestep,weight,normalized"]
    for c, name in enumerate(profile.class_names):
        for t in range(profile.mean.shape[1]):
            lines.append(f"{name},{t},{profile.mean[c, t]!r},{profile.heatmap[c, t]!r}")
    return "\n".join(lines) + "\n"
