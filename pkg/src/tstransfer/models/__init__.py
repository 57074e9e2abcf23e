"""Architecture construction and the model-level operations."""
import numpy as np

from ..autodiff import RngStream
from ..errors import ParameterError
from .architectures import CONVNETQUAKE_VARIANTS, FAMILY_CLASSES
from .layers import Context
from .model import Model
from .spec import FAMILIES, ArchitectureSpec, TCNParams

__all__ = [
    "ArchitectureSpec", "CONVNETQUAKE_VARIANTS", "Context", "FAMILIES", "Model", "TCNParams",
    "build", "forward", "l2_penalty", "predict",
]


def build(spec, rng=None, input_replication=1):
    """Construct a freshly initialised model for ``spec``.

    ``rng`` defaults to a stream seeded with ``spec.seed``.
    ``input_replication`` > 1 makes the conv stack consume that many copies
    of every input channel (used after a 3 -> 1 channel transfer).
    """
    cls = FAMILY_CLASSES.get(spec.family)
    if cls is None:
        raise ParameterError(f"unsupported family {spec.family!r}")
    return cls(spec, rng if rng is not None else RngStream(spec.seed), input_replication)


def forward(model, x, stream_max=None, mode="eval", rng=None):
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    return model.forward(x, stream_max=stream_max, train=(mode == "train"), rng=rng)


def l2_penalty(model):
    return model.l2_penalty()


def predict(model, X, stream_max=None, batch_size=256):
    """Eval-mode outputs for a whole array of instances, as numpy."""
    outs = []
    for start in range(0, len(X), batch_size):
        sm = None if stream_max is None else stream_max[start:start + batch_size]
        outs.append(model.forward(X[start:start + batch_size], stream_max=sm).data)
    return np.concatenate(outs, axis=0)
