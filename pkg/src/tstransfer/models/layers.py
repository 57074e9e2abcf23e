"""Layers: named parameter holders with a forward method.

Every layer carries a ``transferable`` flag; the model's transferable set is
the union of parameters (and buffers) of flagged layers.
"""
import numpy as np

from ..autodiff import Parameter, init, ops
from ..autodiff.tensor import default_dtype


class Context:
    """Per-forward settings: train/eval mode and the dropout stream."""

    def __init__(self, train=False, rng=None):
        self.train = train
        self.rng = rng


class Layer:
    transferable = False
    consumes_input = False

    def __init__(self, name):
        self.name = name
        self.params = {}
        self.buffers = {}

    def _param(self, key, value):
        p = Parameter(value, f"{self.name}.{key}")
        self.params[key] = p
        return p

    def parameters(self):
        return list(self.params.values())


class Conv(Layer):
    transferable = True

    def __init__(self, name, c_in, c_out, k, rng, init_name="glorot_uniform", stride=1,
                 dilation=1, padding="same", weight_norm=False, l2=0.0, consumes_input=False):
        super().__init__(name)
        self.stride, self.dilation, self.padding = stride, dilation, padding
        self.weight_norm = weight_norm
        self.l2 = l2
        self.consumes_input = consumes_input
        w = init.get(init_name)(rng, (c_out, c_in, k))
        if weight_norm:
            self._param("v", w)
            # start with g = ||v|| so the effective kernel equals v
            self._param("g", np.sqrt(np.sum(w.reshape(c_out, -1) ** 2, axis=1)))
        else:
            self._param("kernel", w)
        self._param("bias", np.zeros(c_out))

    def kernel(self):
        if self.weight_norm:
            return ops.weight_norm(self.params["v"], self.params["g"])
        return self.params["kernel"]

    def __call__(self, x, ctx):
        return ops.conv1d(x, self.kernel(), self.params["bias"], stride=self.stride,
                          dilation=self.dilation, padding=self.padding)


class BatchNorm(Layer):
    transferable = True

    def __init__(self, name, channels, momentum=0.99):
        super().__init__(name)
        self._param("gamma", np.ones(channels))
        self._param("beta", np.zeros(channels))
        self.momentum = momentum
        self.running = ops.RunningStats(channels, default_dtype())
        self.buffers = {"running_mean": self.running.mean, "running_var": self.running.var}

    def __call__(self, x, ctx):
        return ops.batch_norm(x, self.params["gamma"], self.params["beta"], self.running,
                              ctx.train, self.momentum)


class SqueezeExcite(Layer):
    transferable = True

    def __init__(self, name, channels, reduction, rng):
        super().__init__(name)
        hidden = max(1, channels // reduction)
        self._param("w1", init.he_normal(rng, (hidden, channels)))
        self._param("b1", np.zeros(hidden))
        self._param("w2", init.he_normal(rng, (channels, hidden)))
        self._param("b2", np.zeros(channels))

    def __call__(self, x, ctx):
        p = self.params
        return ops.squeeze_excite(x, p["w1"], p["b1"], p["w2"], p["b2"])


class Dense(Layer):
    def __init__(self, name, d_in, d_out, rng, init_name="glorot_uniform", activation="linear"):
        super().__init__(name)
        self.activation = activation
        self._param("weight", init.get(init_name)(rng, (d_out, d_in)))
        self._param("bias", np.zeros(d_out))

    def __call__(self, x, ctx):
        y = ops.dense(x, self.params["weight"], self.params["bias"])
        return ops.activation(y, self.activation)


class LSTM(Layer):
    """Returns the final hidden state; bidirectional concatenates both directions."""

    def __init__(self, name, d_in, units, rng, bidirectional=False):
        super().__init__(name)
        self.units = units
        self.bidirectional = bidirectional
        for direction in ("fw", "bw") if bidirectional else ("fw",):
            self._param(f"{direction}.kernel", init.glorot_uniform(rng, (4 * units, d_in)).T.copy())
            self._param(f"{direction}.recurrent", init.orthogonal(rng, (units, 4 * units)))
            bias = np.zeros(4 * units)
            bias[units:2 * units] = 1.0  # forget gate
            self._param(f"{direction}.bias", bias)

    @property
    def output_width(self):
        return self.units * (2 if self.bidirectional else 1)

    def __call__(self, seq, ctx):
        p = self.params
        h = ops.lstm(seq, p["fw.kernel"], p["fw.recurrent"], p["fw.bias"])
        if not self.bidirectional:
            return h
        hb = ops.lstm(seq, p["bw.kernel"], p["bw.recurrent"], p["bw.bias"], reverse=True)
        return ops.concat([h, hb], axis=-1)
