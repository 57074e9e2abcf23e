import numpy as np

from ..errors import StateError


class Adam:
    """Adam with bias correction and per-parameter learning-rate multipliers.

    The effective step size of parameter ``p`` is ``lr * p.lr_multiplier``.
    Moments advance even when that product is zero.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        for p in self.params:
            if p.grad is None:
                raise StateError(f"parameter {p.name} has no gradient")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            rate = self.lr * p.lr_multiplier
            if rate == 0.0:
                continue
            update = rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data = (p.data - update).astype(p.data.dtype, copy=False)


def adam_step(params, state, base_lr):
    """Functional form: ``state`` is an :class:`Adam` (created if None)."""
    if state is None:
        state = Adam(params, lr=base_lr)
    state.lr = base_lr
    state.step()
    return state
