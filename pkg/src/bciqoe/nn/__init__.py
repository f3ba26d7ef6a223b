"""Minimal float64 reverse-mode autodiff: tensors, layers, optimizers."""

from . import checkpoint, layers, optim, tensor
from .layers import EegConvNet, GaussianPolicy, Linear, Module, Sequential, mlp
from .optim import Adam, sgd_step
from .tensor import NonFiniteError, Tape, TapeConsumedError, Tensor, backward

__all__ = [
    "tensor",
    "layers",
    "optim",
    "checkpoint",
    "Tensor",
    "Tape",
    "backward",
    "TapeConsumedError",
    "NonFiniteError",
    "Module",
    "Linear",
    "Sequential",
    "mlp",
    "EegConvNet",
    "GaussianPolicy",
    "Adam",
    "sgd_step",
]
