import numpy as np

from ..autodiff import RngStream, Tensor, ops
from ..errors import ContractError, DimensionError
from .layers import Context, Dense


class Model:
    """A built architecture.

    Subclasses create their feature-extracting layers in ``_build_body`` and
    map an input batch to a flat feature matrix in ``_body``. The base class
    appends the task head, handles stream_max injection and input-channel
    replication, and exposes the transferable / head parameter partition.
    """

    family = None
    head_hidden = ()

    def __init__(self, spec, rng=None, input_replication=1):
        self.spec = spec
        self.input_replication = int(input_replication)
        rng = rng if rng is not None else RngStream(spec.seed)
        self.layers = []
        self._build_body(rng)
        self.feature_width = self._probe_feature_width()
        self.head_input_width = self.feature_width + (1 if spec.stream_max else 0)
        width = self.head_input_width
        self.head = []
        for i, hidden in enumerate(self.head_hidden):
            self.head.append(Dense(f"head.dense{i}", width, hidden, rng, activation="relu"))
            width = hidden
        final_act = "softmax" if spec.task == "classification" else "linear"
        self.head.append(Dense(f"head.dense{len(self.head_hidden)}", width, spec.outputs, rng,
                               activation=final_act))
        self.layers.extend(self.head)
        names = [p.name for p in self.parameters()]
        assert len(names) == len(set(names)), "duplicate parameter names"

    # -- construction helpers ---------------------------------------------
    @property
    def conv_channels(self):
        return self.spec.input_channels * self.input_replication

    def _add(self, layer):
        self.layers.append(layer)
        return layer

    def _probe_feature_width(self):
        x = Tensor(np.zeros((1, self.conv_channels, self.spec.input_length)))
        return self._body(x, Context(train=False)).shape[-1]

    # -- parameter views --------------------------------------------------
    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def transferable_layers(self):
        return [layer for layer in self.layers if layer.transferable]

    def head_layers(self):
        return [layer for layer in self.layers if not layer.transferable]

    def transferable_parameters(self):
        return [p for layer in self.transferable_layers() for p in layer.parameters()]

    def head_parameters(self):
        return [p for layer in self.head_layers() for p in layer.parameters()]

    def named_state(self):
        """name -> array for every parameter and buffer, in layer order."""
        state = {}
        for layer in self.layers:
            for key, p in layer.params.items():
                state[f"{layer.name}.{key}"] = p.data
            for key, buf in layer.buffers.items():
                state[f"{layer.name}.{key}"] = buf
        return state

    def state_dict(self):
        return {k: v.copy() for k, v in self.named_state().items()}

    def load_state_dict(self, state):
        for layer in self.layers:
            for key, p in layer.params.items():
                p.data = state[f"{layer.name}.{key}"].astype(p.data.dtype, copy=True)
            for key, buf in layer.buffers.items():
                buf[...] = state[f"{layer.name}.{key}"]

    # -- forward ----------------------------------------------------------
    def _prepare_input(self, x):
        x = np.asarray(x.data if isinstance(x, Tensor) else x)
        single = x.ndim == 2
        if single:
            x = x[None]
        if x.ndim != 3:
            raise DimensionError(f"expected (C, N) or (B, C, N) input, got {x.shape}")
        if x.shape[1] != self.spec.input_channels:
            raise DimensionError(f"expected {self.spec.input_channels} channels, got {x.shape[1]}")
        if x.shape[2] != self.spec.input_length:
            raise DimensionError(f"expected length {self.spec.input_length}, got {x.shape[2]}")
        if self.input_replication > 1:
            x = np.repeat(x, self.input_replication, axis=1)
        return Tensor(x), single

    def features(self, x, train=False, rng=None):
        xt, _ = self._prepare_input(x)
        return self._body(xt, Context(train, rng))

    def forward(self, x, stream_max=None, train=False, rng=None):
        """Head output: (B,) for regression, (B, K) probabilities otherwise.

        A single (C, N) instance gives a scalar / a (K,) vector.
        """
        xt, single = self._prepare_input(x)
        ctx = Context(train, rng)
        h = self._body(xt, ctx)
        if self.spec.stream_max:
            if stream_max is None:
                raise ContractError("model was built with stream_max; value missing")
            sm = np.asarray(stream_max, dtype=h.data.dtype).reshape(-1, 1)
            if sm.shape[0] != h.shape[0]:
                raise DimensionError("one stream_max value per instance is required")
            h = ops.concat([h, Tensor(sm, dtype=h.data.dtype)], axis=1)
        elif stream_max is not None:
            raise ContractError("model was built without stream_max; value supplied")
        for layer in self.head:
            h = layer(h, ctx)
        if self.spec.task == "regression":
            h = ops.reshape(h, (h.shape[0],))
        if single:
            h = ops.reshape(h, h.shape[1:])
        return h

    __call__ = forward

    def l2_penalty(self):
        terms = [ops.scale(ops.square_sum(layer.params["kernel"]), layer.l2)
                 for layer in self.layers if getattr(layer, "l2", 0.0) > 0.0]
        if not terms:
            return Tensor(0.0)
        total = terms[0]
        for t in terms[1:]:
            total = ops.add(total, t)
        return total
