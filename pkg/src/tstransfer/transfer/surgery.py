import numpy as np

from ..errors import ParameterError, SurgeryError
from .bundle import WeightBundle

DEFAULT_OMEGA_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)

_SUPPORTED = {(1, 1), (3, 3), (1, 3), (3, 1)}


def _transferable_state(model):
    """(name, array) for parameters and buffers of the transferable layers, in layer order."""
    out = []
    for layer in model.transferable_layers():
        for key, p in layer.params.items():
            out.append((f"{layer.name}.{key}", p.data))
        for key, buf in layer.buffers.items():
            out.append((f"{layer.name}.{key}", buf))
    return out


def extract(model, provenance=None):
    """Deep copy of the transferable layers' state."""
    input_entries = []
    gains = {}
    for layer in model.transferable_layers():
        if not layer.consumes_input:
            continue
        if getattr(layer, "weight_norm", False):
            input_entries.append(f"{layer.name}.v")
            gains[f"{layer.name}.v"] = f"{layer.name}.g"
        else:
            input_entries.append(f"{layer.name}.kernel")
    entries = tuple((name, np.array(a, copy=True)) for name, a in _transferable_state(model))
    return WeightBundle(entries, model.spec.input_channels, model.spec.family,
                        dict(provenance or {}), model.input_replication, tuple(input_entries), gains)


def adapt_channels(bundle, target_channels):
    """Make ``bundle`` usable by a model with ``target_channels`` input channels.

    1 -> 3 replicates every input-consuming kernel along its input-channel
    axis without rescaling. For weight-normed kernels the direction ``v`` is
    replicated and the gain scaled by sqrt(3), so the effective kernel is the
    literal copy as well. 3 -> 1 leaves the weights alone and asks the target
    to feed its single channel three times.
    """
    pair = (bundle.source_channels, target_channels)
    if pair not in _SUPPORTED:
        raise ParameterError(f"unsupported channel adaptation {pair[0]} -> {pair[1]}")
    if bundle.input_replication != 1 or pair[0] == pair[1]:
        if bundle.input_replication != 1 and target_channels * bundle.input_replication != 3:
            raise ParameterError("bundle already adapted to a different channel count")
        return bundle
    if pair == (3, 1):
        return WeightBundle(bundle.entries, bundle.source_channels, bundle.source_family,
                            bundle.provenance, 3, bundle.input_entries, bundle.gain_entries)
    gain_names = {g: v for v, g in bundle.gain_entries.items()}
    entries = []
    for name, a in bundle.entries:
        if name in bundle.input_entries:
            a = np.repeat(a, 3, axis=1)
        elif name in gain_names:
            a = (a * np.sqrt(3.0)).astype(a.dtype)
        entries.append((name, a))
    return WeightBundle(tuple(entries), target_channels, bundle.source_family, bundle.provenance,
                        1, bundle.input_entries, bundle.gain_entries)


def implant(bundle, target):
    """Overwrite the target's transferable state from ``bundle``; the head is untouched."""
    if target.spec.family != bundle.source_family:
        raise SurgeryError(f"bundle from {bundle.source_family!r} cannot go into "
                           f"{target.spec.family!r}")
    if target.input_replication != bundle.input_replication:
        raise SurgeryError(f"bundle requires input replication {bundle.input_replication}, "
                           f"target uses {target.input_replication}")
    if target.conv_channels != bundle.source_channels:
        raise SurgeryError(f"bundle kernels read {bundle.source_channels} channels, target "
                           f"conv stack reads {target.conv_channels}; adapt the bundle first")
    wanted = _transferable_state(target)
    src = bundle.as_dict()
    if [n for n, _ in wanted] != bundle.names():
        missing = sorted(set(n for n, _ in wanted) ^ set(src))
        raise SurgeryError(f"entry sets differ: {missing[:5]}")
    for name, dst in wanted:
        if dst.shape != src[name].shape:
            raise SurgeryError(f"shape mismatch at {name}: bundle {src[name].shape}, "
                               f"target {dst.shape}")
    for layer in target.transferable_layers():
        for key, p in layer.params.items():
            p.data = src[f"{layer.name}.{key}"].astype(p.data.dtype, copy=True)
        for key, buf in layer.buffers.items():
            buf[...] = src[f"{layer.name}.{key}"]
    return target


def assign_multipliers(model, omega):
    """Transferable parameters learn at omega * base lr; head parameters at base lr."""
    if not omega > 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    for p in model.transferable_parameters():
        p.lr_multiplier = float(omega)
    for p in model.head_parameters():
        p.lr_multiplier = 1.0
    return model
