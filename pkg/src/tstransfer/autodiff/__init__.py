"""Minimal reverse-mode differentiation over numpy arrays."""
from . import init, ops
from .gradcheck import check_gradients
from .optim import Adam, adam_step
from .rng import RngStream, derive_seed
from .tensor import Parameter, Tensor, default_dtype, precision

__all__ = [
    "Adam", "Parameter", "RngStream", "Tensor", "adam_step", "check_gradients",
    "default_dtype", "derive_seed", "init", "ops", "precision",
]
