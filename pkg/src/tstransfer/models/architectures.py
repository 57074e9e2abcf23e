"""The four architecture families.

Layer sizes at scale 1.0 follow the original publications; see
docs/architectures.md for the exact numbers and their sources.
"""
from ..autodiff import ops
from .layers import LSTM, BatchNorm, Conv, SqueezeExcite
from .model import Model

# L2 coefficient and conv initializer of each ConvNetQuake_INGV variant.
CONVNETQUAKE_VARIANTS = {
    "base": (0.001, "glorot_uniform"),
    "speech": (0.001, "he_normal"),
    "emg": (0.0, "glorot_normal"),
    "sp500": (0.7, "he_normal"),
}


class ConvNetQuakeINGV(Model):
    family = "convnetquake_ingv"
    head_hidden = (128,)
    n_conv = 9
    filters = 32
    kernel_size = 3

    def _build_body(self, rng):
        l2, init_name = CONVNETQUAKE_VARIANTS[self.spec.variant]
        c_in = self.conv_channels
        width = self.spec.width(self.filters)
        for i in range(self.n_conv):
            self._add(Conv(f"conv{i}", c_in, width, self.kernel_size, rng, init_name=init_name,
                           stride=2, padding="same", l2=l2, consumes_input=(i == 0)))
            c_in = width

    def _body(self, x, ctx):
        for layer in self.layers[:self.n_conv]:
            x = ops.relu(layer(x, ctx))
        return ops.flatten(x)


class MagNet(Model):
    family = "magnet"
    filters = (64, 32)
    kernel_size = 3
    dropout = 0.2
    pool = 4
    units = 100

    def _build_body(self, rng):
        c_in = self.conv_channels
        for i, f in enumerate(self.filters):
            width = self.spec.width(f)
            self._add(Conv(f"conv{i}", c_in, width, self.kernel_size, rng, padding="same",
                           consumes_input=(i == 0)))
            c_in = width
        self.lstm = self._add(LSTM("bilstm", c_in, self.spec.width(self.units), rng,
                                   bidirectional=True))

    def _body(self, x, ctx):
        for layer in self.layers[:len(self.filters)]:
            x = layer(x, ctx)  # no activation
            x = ops.dropout(x, self.dropout, ctx.train, ctx.rng)
            x = ops.max_pool(x, self.pool)
        return self.lstm(ops.swap_last(x), ctx)


class MLSTMFCN(Model):
    family = "mlstm_fcn"
    blocks = ((128, 8), (256, 5), (128, 3))
    se_reduction = 16
    units = 8
    lstm_dropout = 0.8

    def _build_body(self, rng):
        c_in = self.conv_channels
        self.fcn = []
        for i, (f, k) in enumerate(self.blocks):
            width = self.spec.width(f)
            conv = self._add(Conv(f"conv{i}", c_in, width, k, rng, init_name="he_uniform",
                                  padding="same", consumes_input=(i == 0)))
            bn = self._add(BatchNorm(f"bn{i}", width))
            se = self._add(SqueezeExcite(f"se{i}", width, self.se_reduction, rng)) if i < 2 else None
            self.fcn.append((conv, bn, se))
            c_in = width
        # The LSTM branch reads the (C, N) input as C steps of N-wide vectors.
        self.lstm = self._add(LSTM("lstm", self.spec.input_length, self.spec.width(self.units), rng))

    def _body(self, x, ctx):
        h = x
        for conv, bn, se in self.fcn:
            h = ops.relu(bn(conv(h, ctx), ctx))
            if se is not None:
                h = se(h, ctx)
        h = ops.global_average_pool(h)
        r = self.lstm(x, ctx)
        r = ops.dropout(r, self.lstm_dropout, ctx.train, ctx.rng)
        return ops.concat([h, r], axis=1)


class TCN(Model):
    family = "tcn"

    def _build_body(self, rng):
        p = self.spec.tcn
        filters = self.spec.width(p.filters)
        c_in = self.conv_channels
        self.blocks = []
        for b, d in enumerate(p.dilations):
            convs = []
            for j in range(2):
                convs.append(self._add(Conv(
                    f"block{b}.conv{j}", c_in if j == 0 else filters, filters, p.kernel_size, rng,
                    init_name="he_normal", dilation=d, padding="causal", weight_norm=True,
                    consumes_input=(b == 0 and j == 0))))
            skip = None
            if c_in != filters:
                skip = self._add(Conv(f"block{b}.skip", c_in, filters, 1, rng, init_name="he_normal",
                                      padding="valid", consumes_input=(b == 0)))
            self.blocks.append((convs, skip))
            c_in = filters

    def sequence(self, x, ctx):
        p = self.spec.tcn
        for convs, skip in self.blocks:
            h = x
            for conv in convs:
                h = ops.dropout(ops.relu(conv(h, ctx)), p.dropout, ctx.train, ctx.rng)
            res = skip(x, ctx) if skip is not None else x
            x = ops.relu(ops.add(res, h))
        return x

    def _body(self, x, ctx):
        return ops.last_step(self.sequence(x, ctx))

    def features(self, x, train=False, rng=None):
        """Full (B, F, N) output sequence of the residual stack."""
        from .layers import Context
        xt, _ = self._prepare_input(x)
        return self.sequence(xt, Context(train, rng))


FAMILY_CLASSES = {cls.family: cls for cls in (ConvNetQuakeINGV, MagNet, MLSTMFCN, TCN)}
