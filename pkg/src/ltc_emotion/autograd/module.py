"""Parameter containers with train/eval mode and named state."""
import numpy as np

from ..errors import ShapeError
from .tensor import Tensor


class Module:
    """Base container.

    Attributes holding a trainable ``Tensor``, a ``Module``, or a list of
    modules are discovered in assignment order. Non-trainable state (batchnorm
    running statistics) lives in ``self._buffers``.
    """

    def __init__(self):
        self.training = True
        self._buffers = {}

    def register_buffer(self, name, value):
        self._buffers[name] = np.asarray(value, dtype=np.float64)

    def _children(self):
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)) and value and all(
                isinstance(v, Module) for v in value
            ):
                for i, v in enumerate(value):
                    yield f"{name}.{i}", v
            elif isinstance(value, dict) and value and all(
                isinstance(v, Module) for v in value.values()
            ):
                for k, v in value.items():
                    yield f"{name}.{k}", v

    def named_parameters(self, prefix=""):
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
        for name, child in self._children():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix=""):
        for name, value in self._buffers.items():
            yield prefix + name, value
        for name, child in self._children():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def n_parameters(self):
        return int(sum(p.size for p in self.parameters()))

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def train(self, mode=True):
        self.training = mode
        for _, child in self._children():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def state_dict(self):
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state, strict=True):
        targets = {name: p.data for name, p in self.named_parameters()}
        targets.update(dict(self.named_buffers()))
        missing = sorted(set(targets) - set(state))
        unexpected = sorted(set(state) - set(targets))
        if strict and (missing or unexpected):
            raise ShapeError(f"state mismatch: missing {missing}, unexpected {unexpected}")
        for name, dst in targets.items():
            if name not in state:
                continue
            src = np.asarray(state[name])
            if src.shape != dst.shape:
                raise ShapeError(f"{name}: checkpoint shape {src.shape} != model shape {dst.shape}")
            dst[...] = src


def parameter(array):
    return Tensor(np.array(array, dtype=np.float64), requires_grad=True)
