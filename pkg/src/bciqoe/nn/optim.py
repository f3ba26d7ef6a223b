"""Adam and plain SGD over the tape's gradient dicts."""

import numpy as np

from .tensor import NonFiniteError, Tensor


def _check_grad(param, grad):
    if grad.shape != param.data.shape:
        raise ValueError(f"gradient shape {grad.shape} != parameter shape {param.data.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("non-finite gradient passed to optimizer")


def sgd_step(params, grads, lr):
    """One in-place SGD step; parameters without a gradient are untouched."""
    if lr < 0:
        raise ValueError("learning rate must be >= 0")
    for p in params:
        g = grads.get(p)
        if g is None:
            continue
        _check_grad(p, g)
        p.data = p.data - lr * g


class Adam:
    """Bias-corrected Adam; moments are kept per parameter tensor."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be > 0")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads):
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for i, p in enumerate(self.params):
            g = grads.get(p)
            if g is None:
                continue
            _check_grad(p, g)
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self._m[i] / c1
            v_hat = self._v[i] / c2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_dict(self):
        return {
            "step_count": self.step_count,
            "m": [m.copy() for m in self._m],
            "v": [v.copy() for v in self._v],
        }

    def load_state_dict(self, state):
        self.step_count = int(state["step_count"])
        self._m = [np.array(m, dtype=np.float64) for m in state["m"]]
        self._v = [np.array(v, dtype=np.float64) for v in state["v"]]
        for p, m, v in zip(self.params, self._m, self._v):
            if m.shape != p.data.shape or v.shape != p.data.shape:
                raise ValueError("optimizer state does not match parameter shapes")
