"""Layers and the three small networks trained in this package.

Only the closure actually needed is provided: linear, ReLU, tanh, valid
1-D convolution, max-pool, (log-)softmax heads, an MLP builder, the EEG
convnet, and a diagonal-Gaussian policy head over an MLP trunk.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


class Module:
    """Minimal container: parameters are discovered via named_params()."""

    def params(self):
        return [p for _, p in self.named_params()]

    def named_params(self, prefix=""):
        out = []
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                out.append((prefix + name, value))
            elif isinstance(value, Module):
                out.extend(value.named_params(prefix + name + "."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.extend(item.named_params(f"{prefix}{name}.{i}."))
        return out

    def param_vector(self):
        """Flat copy of all parameters, used by replay/identity tests."""
        parts = [p.data.ravel() for p in self.params()]
        return np.concatenate(parts) if parts else np.empty(0)

    def load_param_vector(self, vec):
        offset = 0
        for p in self.params():
            n = p.data.size
            p.data = vec[offset : offset + n].reshape(p.data.shape).copy()
            offset += n
        if offset != vec.size:
            raise ValueError(f"vector length {vec.size} != parameter count {offset}")

    def __call__(self, x):
        return self.forward(x)


class Linear(Module):
    def __init__(self, n_in, n_out, rng):
        bound = 1.0 / np.sqrt(n_in)
        self.weight = Tensor(rng.uniform(-bound, bound, (n_in, n_out)), requires_grad=True)
        self.bias = Tensor(rng.uniform(-bound, bound, n_out), requires_grad=True)

    def forward(self, x):
        return T.add(T.matmul(x, self.weight), self.bias)


class Relu(Module):
    def forward(self, x):
        return T.relu(x)


class Tanh(Module):
    def forward(self, x):
        return T.tanh(x)


class Conv1d(Module):
    def __init__(self, c_in, c_out, kernel, rng):
        bound = 1.0 / np.sqrt(c_in * kernel)
        self.weight = Tensor(
            rng.uniform(-bound, bound, (c_out, c_in, kernel)), requires_grad=True
        )
        self.bias = Tensor(rng.uniform(-bound, bound, c_out), requires_grad=True)

    def forward(self, x):
        return T.conv1d(x, self.weight, self.bias)


class MaxPool1d(Module):
    def __init__(self, size):
        self.size = size

    def forward(self, x):
        return T.maxpool1d(x, self.size)


class Flatten(Module):
    def forward(self, x):
        b = x.data.shape[0]
        return T.reshape(x, (b, -1))


class Sequential(Module):
    def __init__(self, *layers):
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x


def mlp(sizes, rng, activation="tanh"):
    """MLP with the given layer widths; activation after every hidden layer."""
    act = {"tanh": Tanh, "relu": Relu}[activation]
    layers = []
    for i in range(len(sizes) - 1):
        layers.append(Linear(sizes[i], sizes[i + 1], rng))
        if i < len(sizes) - 2:
            layers.append(act())
    return Sequential(*layers)


class EegConvNet(Module):
    """1-D convnet over windowed EEG: electrodes are channels, time is length.

    conv(J->c1,k) - relu - conv(c1->c2,k) - relu - pool - linear -> class logits.
    """

    def __init__(self, n_channels, window, n_classes, rng, conv_channels=(32, 32), kernel=3, pool=2):
        c1, c2 = conv_channels
        self.conv1 = Conv1d(n_channels, c1, kernel, rng)
        self.conv2 = Conv1d(c1, c2, kernel, rng)
        self.pool = MaxPool1d(pool)
        length = window - 2 * (kernel - 1)
        if length < pool or length % pool != 0:
            raise ValueError(
                f"window {window} with kernel {kernel} leaves conv length {length}, "
                f"not poolable by {pool}"
            )
        self.head = Linear(c2 * (length // pool), n_classes, rng)
        self.n_classes = n_classes

    def forward(self, x):
        """x: (batch, channels, window) -> logits (batch, classes)."""
        h = T.relu(self.conv1(x))
        h = T.relu(self.conv2(h))
        h = self.pool(h)
        b = h.data.shape[0]
        return self.head(T.reshape(h, (b, -1)))

    def predict_proba(self, windows):
        """Forward-only class probabilities for an (n, J, W) array."""
        logits = self.forward(Tensor(np.asarray(windows, dtype=np.float64)))
        return T.softmax(logits).data

    def predict(self, windows):
        return np.argmax(self.predict_proba(windows), axis=1)


LOG_2PI = float(np.log(2.0 * np.pi))


class GaussianPolicy(Module):
    """Diagonal Gaussian over an unconstrained action vector.

    The mean comes from an MLP over the observation; the per-dimension
    log-std is a learned, state-independent parameter.
    """

    def __init__(self, obs_dim, act_dim, rng, hidden=(64, 64), log_std_init=-0.5):
        self.trunk = mlp([obs_dim, *hidden, act_dim], rng, activation="tanh")
        self.log_std = Tensor(np.full(act_dim, log_std_init), requires_grad=True)
        self.act_dim = act_dim

    def forward(self, obs):
        return self.trunk(obs)

    def sample(self, obs_vec, rng):
        """Draw one action for a single observation vector (forward-only).

        Returns (action, log_density) as plain numpy values.
        """
        mean = self.trunk(Tensor(obs_vec[None, :])).data[0]
        std = np.exp(self.log_std.data)
        action = mean + std * rng.standard_normal(self.act_dim)
        return action, self._log_density(action[None, :], mean[None, :])[0]

    def _log_density(self, actions, means):
        std = np.exp(self.log_std.data)
        z = (actions - means) / std
        return -0.5 * (z * z).sum(axis=1) - self.log_std.data.sum() - 0.5 * self.act_dim * LOG_2PI

    def log_prob_np(self, obs, actions):
        """Forward-only log densities for recorded (obs, action) pairs."""
        means = self.trunk(Tensor(np.asarray(obs))).data
        return self._log_density(np.asarray(actions), means)

    def log_prob(self, obs, actions):
        """Differentiable log densities; obs (B,D_o), actions (B,D_a)."""
        means = self.trunk(Tensor(np.asarray(obs)))
        acts = Tensor(np.asarray(actions))
        inv_std = T.exp(T.neg(self.log_std))
        z = T.mul(T.sub(acts, means), inv_std)
        quad = T.tsum(T.mul(z, z), axis=1)
        log_norm = T.add(
            T.tsum(self.log_std), 0.5 * self.act_dim * LOG_2PI
        )
        return T.sub(T.mul(quad, -0.5), log_norm)
