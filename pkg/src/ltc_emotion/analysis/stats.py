"""Normality test, rank correlation and bootstrap intervals."""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata
from scipy.stats import t as student_t

from ..errors import DataError
from ..ltc import make_rng

# Royston's polynomial corrections for the two extreme coefficients (in u = 1/sqrt(n))
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _poly(coefs, x):
    return sum(c * x**i for i, c in enumerate(coefs))


def shapiro_coefficients(n):
    """Royston's approximation to the Shapiro-Wilk weights, ascending order."""
    if n == 3:
        return np.array([-np.sqrt(0.5), 0.0, np.sqrt(0.5)])
    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    mm = m @ m
    u = 1.0 / np.sqrt(n)
    a = np.empty(n)
    a_n = m[-1] / np.sqrt(mm) + _poly(_C1, u)
    if n > 5:
        a_n1 = m[-2] / np.sqrt(mm) + _poly(_C2, u)
        phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
        a[2:-2] = m[2:-2] / np.sqrt(phi)
        a[1], a[-2] = -a_n1, a_n1
    else:
        phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
        a[1:-1] = m[1:-1] / np.sqrt(phi)
    a[0], a[-1] = -a_n, a_n
    return a


def _w_pvalue(w, n):
    if n == 3:
        p = 6.0 / np.pi * (np.arcsin(np.sqrt(w)) - np.arcsin(np.sqrt(0.75)))
        return float(np.clip(p, 0.0, 1.0))
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = np.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        y = -np.log(gamma - np.log1p(-w))
    else:
        ln = np.log(n)
        mu = -1.5861 - 0.31082 * ln - 0.083751 * ln**2 + 0.0038915 * ln**3
        sigma = np.exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln**2)
        y = np.log1p(-w)
    return float(ndtr(-(y - mu) / sigma))


def shapiro_wilk(values):
    """Shapiro-Wilk W and its p-value by Royston's normalising transform.

    Raises ``DataError`` for n outside [3, 5000] or a constant sample.
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if not 3 <= n <= 5000:
        raise DataError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    ss = np.sum((x - x.mean()) ** 2)
    if ss <= 1e-300 * max(1.0, np.abs(x).max()):
        raise DataError("Shapiro-Wilk is undefined for a constant sample")
    a = shapiro_coefficients(n)
    w = float(min((a @ x) ** 2 / ss, 1.0))
    return w, _w_pvalue(w, n)


def spearman(x, y):
    """Rank correlation with average ranks for ties and a t-approximation p-value."""
    x, y = np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()
    if x.size != y.size or x.size < 3:
        raise DataError(f"spearman needs equal lengths >= 3, got {x.size} and {y.size}")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0:
        raise DataError("spearman is undefined when one argument has no rank variance")
    rho = float(np.clip((rx @ ry) / denom, -1.0, 1.0))
    dof = x.size - 2
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * np.sqrt(dof / (1.0 - rho**2))
    return rho, float(2.0 * student_t.sf(abs(t), dof))


@dataclass
class BootstrapResult:
    point: float
    lo: float
    hi: float
    level: float
    distribution: np.ndarray


def bootstrap_ci(correct, n_boot=1000, level=0.95, seed=0):
    """Percentile interval for accuracy from resampled correctness flags."""
    flags = np.asarray(correct, dtype=float).ravel()
    if flags.size == 0:
        raise DataError("bootstrap needs at least one flag")
    rng = make_rng(seed)
    idx = rng.integers(0, flags.size, size=(n_boot, flags.size))
    dist = flags[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(dist, [alpha, 1.0 - alpha])
    return BootstrapResult(float(flags.mean()), float(lo), float(hi), level, dist)
