from .checkpoint import load_archive, save_archive
from .gradcheck import GradcheckReport, gradcheck, relative_error
from .module import Module, parameter
from .ops import batchnorm, conv1d, dropout, log_softmax, maxpool1d, softmax
from .tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    exp,
    getitem,
    is_grad_enabled,
    log,
    matmul,
    mean,
    mul,
    no_grad,
    relu,
    reshape,
    sigmoid,
    stack,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "GradcheckReport", "Module", "Tensor", "add", "as_tensor", "batchnorm", "concat", "conv1d",
    "dropout", "exp", "getitem", "gradcheck", "is_grad_enabled", "load_archive", "log",
    "log_softmax", "matmul", "maxpool1d", "mean", "mul", "no_grad", "parameter",
    "relative_error", "relu", "reshape", "save_archive", "sigmoid", "softmax", "stack", "tanh",
    "transpose", "tsum",
]
