"""Liquid time-constant recurrent cells.

Each neuron integrates toward a tanh drive with its own learnable time
constant ``tau = exp(theta_tau)``; one explicit step of size ``dt`` gives

    h_t = d * h_{t-1} + (1 - d) * tanh(W_x x_t + W_h h_{t-1} + b),
    d   = exp(-dt / tau).
"""
import numpy as np

from .autograd import Module, Tensor, dropout, exp, getitem, parameter, stack, tanh
from .errors import ShapeError

TAU_MIN, TAU_MAX = 0.1, 10.0


def make_rng(seed):
    """Counter-based generator used for every stochastic draw in the model."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def xavier_uniform(rng, fan_out, fan_in, gain=1.0):
    limit = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class LTCCell(Module):
    def __init__(self, d_in, d_h, seed=0, dt=1.0):
        super().__init__()
        if d_in <= 0 or d_h <= 0:
            raise ShapeError(f"LTCCell: dimensions must be positive, got d_in={d_in}, d_h={d_h}")
        rng = make_rng(seed)
        self.d_in, self.d_h, self.dt = d_in, d_h, float(dt)
        self.Wx = parameter(xavier_uniform(rng, d_h, d_in))
        self.Wh = parameter(xavier_uniform(rng, d_h, d_h))
        self.b = parameter(np.zeros(d_h))
        self.theta_tau = parameter(rng.uniform(np.log(TAU_MIN), np.log(TAU_MAX), size=d_h))


def init_cell(d_in, d_h, seed=0):
    return LTCCell(d_in, d_h, seed)


def decay_factors(cell):
    """``d = exp(-dt / exp(theta_tau))`` as a differentiable tensor."""
    return exp(exp(-cell.theta_tau) * (-cell.dt))


def time_constants(cell_or_stack):
    """tau per neuron; a list with one array per layer for a stack."""
    if isinstance(cell_or_stack, LNNStack):
        return [np.exp(c.theta_tau.data) for c in cell_or_stack.cells()]
    return np.exp(cell_or_stack.theta_tau.data)


def _step(d, drive, h_prev, cell):
    pre = drive if h_prev is None else drive + h_prev @ cell.Wh.T
    target = tanh(pre)
    if h_prev is None:
        return (1.0 - d) * target
    return d * h_prev + (1.0 - d) * target


def ltc_step(cell, x_t, h_prev):
    x_t, h_prev = _as_tensor(x_t), _as_tensor(h_prev)
    if x_t.shape[-1] != cell.d_in or h_prev.shape[-1] != cell.d_h:
        raise ShapeError(
            f"ltc_step: x {x_t.shape} / h {h_prev.shape} do not match cell ({cell.d_in}->{cell.d_h})"
        )
    d = decay_factors(cell)
    return _step(d, x_t @ cell.Wx.T + cell.b, h_prev, cell)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.atleast_2d(x))


def run_cell(cell, seq):
    """All hidden states (B, T, d_h) of one cell from a zero initial state."""
    if seq.ndim != 3 or seq.shape[2] != cell.d_in:
        raise ShapeError(f"ltc_forward: sequence {seq.shape} does not match input width {cell.d_in}")
    if seq.shape[1] < 1:
        raise ShapeError("ltc_forward: empty sequence")
    d = decay_factors(cell)
    drive = seq @ cell.Wx.T + cell.b  # input contribution for every step at once
    h, states = None, []
    for t in range(seq.shape[1]):
        h = _step(d, getitem(drive, (slice(None), t)), h, cell)
        states.append(h)
    return stack(states, axis=1)


class LNNStack(Module):
    """Stacked LTC layers with dropout between layers; cells are ``layer0..``."""

    def __init__(self, d_in, d_h, n_layers=1, dropout=0.3, seed=0):
        super().__init__()
        if n_layers < 1:
            raise ShapeError("LNNStack needs at least one layer")
        rng = make_rng(seed)
        self.n_layers, self.p = n_layers, dropout
        for layer in range(n_layers):
            setattr(self, f"layer{layer}", LTCCell(d_in if layer == 0 else d_h, d_h, rng))

    def cells(self):
        return [getattr(self, f"layer{i}") for i in range(self.n_layers)]

    def forward(self, seq, rng=None):
        h = seq
        for i, cell in enumerate(self.cells()):
            if i > 0:
                h = dropout(h, self.p, self.training, rng)
            h = run_cell(cell, h)
        return h


def ltc_forward(stack_, seq, training=False, rng=None):
    stack_.train(training)
    seq = seq if isinstance(seq, Tensor) else Tensor(seq)
    return stack_.forward(seq, rng)
