"""Central-difference verification of backward rules."""
from dataclasses import dataclass, field

import numpy as np

from .tensor import no_grad


@dataclass
class GradcheckReport:
    errors: dict = field(default_factory=dict)  # name -> max relative error
    tol: float = 1e-3

    @property
    def passed(self):
        return all(e < self.tol for e in self.errors.values())

    @property
    def worst(self):
        return max(self.errors.values(), default=0.0)

    def __str__(self):
        rows = [f"{name}: {err:.3e}" for name, err in self.errors.items()]
        status = "pass" if self.passed else "FAIL"
        return f"gradcheck {status} (tol {self.tol:g})\n" + "\n".join(rows)


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    near-zero entries from turning round-off into huge ratios."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def gradcheck(f, params, h=1e-4, tol=1e-3, floor=1e-6, max_entries=None, rng=None):
    """Compare backward gradients of scalar ``f()`` with central differences.

    Parameters
    ----------
    f : callable
        Zero-argument function returning a scalar ``Tensor``. It must be
        deterministic (re-seed any dropout inside it).
    params : dict or list of Tensor
        Leaves to check, perturbed in place.
    max_entries : int, optional
        Check a random subset of this many entries per tensor.
    """
    if not isinstance(params, dict):
        params = {f"p{i}": p for i, p in enumerate(params)}
    for p in params.values():
        p.grad = None
    loss = f()
    loss.backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}
    rng = rng or np.random.default_rng(0)
    report = GradcheckReport(tol=tol)
    for name, p in params.items():
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, max_entries, replace=False)
        numeric = np.empty(idx.size)
        with no_grad():  # perturbed passes need values only
            for j, i in enumerate(idx):
                orig = flat[i]
                flat[i] = orig + h
                up = f().item()
                flat[i] = orig - h
                down = f().item()
                flat[i] = orig
                numeric[j] = (up - down) / (2 * h)
        err = relative_error(analytic[name].reshape(-1)[idx], numeric, floor)
        report.errors[name] = float(err.max()) if err.size else 0.0
    return report
