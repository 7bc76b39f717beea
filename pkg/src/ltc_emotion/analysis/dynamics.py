"""Time constants, memory dominance and neuron-role clustering."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..ltc import make_rng
from .stats import shapiro_wilk, spearman

ROLE_NAMES = ("fast", "intermediate", "slow")


def memory_dominance(w_rec, w_in=None):
    """Per-neuron ``|row(W_h)| / (|row(W_h)| + |row(W_x)|)``.

    Accepts an LTC cell or the two matrices. Neurons whose rows are both zero
    get NaN.
    """
    if w_in is None:
        cell = w_rec
        w_rec, w_in = cell.Wh.data, cell.Wx.data
    rec = np.linalg.norm(np.asarray(w_rec, dtype=float), axis=1)
    inp = np.linalg.norm(np.asarray(w_in, dtype=float), axis=1)
    total = rec + inp
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, rec / total, np.nan)


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    sse: float
    sse_history: list
    n_iter: int
    empty_clusters: list = field(default_factory=list)


def _plus_plus(x, k, rng):
    centers = [x[rng.integers(x.shape[0])]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        i = rng.choice(x.shape[0], p=d2 / total) if total > 0 else rng.integers(x.shape[0])
        centers.append(x[i])
        d2 = np.minimum(d2, np.sum((x - x[i]) ** 2, axis=1))
    return np.array(centers)


def _lloyd(x, centers, max_iter):
    history = []
    labels = None
    for it in range(1, max_iter + 1):
        d2 = ((x[:, None, :] - centers[None]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        history.append(float(d2[np.arange(x.shape[0]), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(centers.shape[0]):
            members = x[labels == c]
            if len(members):  # empty clusters keep their previous centre
                centers[c] = members.mean(axis=0)
    d2 = ((x[:, None, :] - centers[None]) ** 2).sum(axis=2)
    sse = float(d2[np.arange(x.shape[0]), labels].sum())
    return labels, centers, sse, history, it


def kmeans(points, k, seed=0, max_iter=300, n_init=10):
    """Lloyd iterations from k-means++ starts; the restart with lowest SSE wins."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if k < 1 or x.shape[0] < k:
        raise DataError(f"k-means needs at least k={k} points, got {x.shape[0]}")
    rng = make_rng(seed)
    best = None
    for _ in range(n_init):
        labels, centers, sse, hist, it = _lloyd(x, _plus_plus(x, k, rng), max_iter)
        if best is None or sse < best.sse:
            empty = [c for c in range(k) if not np.any(labels == c)]
            best = KMeansResult(labels, centers, sse, hist, it, empty)
    return best


@dataclass
class RoleTable:
    assignment: np.ndarray  # role index per neuron, ordered by mean tau
    rows: list  # dicts: role, count, mean_tau, mean_md
    empty_roles: list
    degenerate: bool


def neuron_roles(tau, md, k=3, seed=0):
    """Cluster neurons on standardised (tau, MD) and name clusters by ascending mean tau."""
    tau, md = np.asarray(tau, dtype=float), np.asarray(md, dtype=float)
    feats = np.column_stack([tau, md])
    std = feats.std(axis=0)
    feats = (feats - feats.mean(axis=0)) / np.where(std > 0, std, 1.0)
    res = kmeans(feats, k, seed)
    means = [tau[res.labels == c].mean() if np.any(res.labels == c) else np.inf for c in range(k)]
    order = np.argsort(means, kind="stable")
    rank = np.empty(k, dtype=int)
    rank[order] = np.arange(k)
    names = ROLE_NAMES if k == 3 else tuple(f"role{i}" for i in range(k))
    assignment = rank[res.labels]
    rows = []
    for r in range(k):
        sel = assignment == r
        rows.append({"role": names[r], "count": int(sel.sum()),
                     "mean_tau": float(tau[sel].mean()) if sel.any() else float("nan"),
                     "mean_md": float(np.nanmean(md[sel])) if sel.any() else float("nan")})
    empty = [row["role"] for row in rows if row["count"] == 0]
    return RoleTable(assignment, rows, empty, bool(empty))


@dataclass
class NeuronDynamics:
    tau: np.ndarray
    memory_dominance: np.ndarray
    roles: RoleTable
    shapiro_log_tau: tuple | None
    spearman_tau_md: tuple | None


def neuron_dynamics(cell, k=3, seed=0):
    """Time constants, memory dominance, roles and their summary tests for one cell."""
    tau = np.exp(cell.theta_tau.data)
    md = memory_dominance(cell)
    roles = neuron_roles(tau, md, k, seed)
    try:
        sw = shapiro_wilk(np.log(tau))
    except DataError:
        sw = None
    try:
        sp = spearman(tau, md)
    except DataError:
        sp = None
    return NeuronDynamics(tau, md, roles, sw, sp)
