"""Small feed-forward networks with explicit backpropagation, and Adam."""
from __future__ import annotations

from typing import Sequence

import numpy as np


class Mlp:
    """Fully connected net, ReLU on hidden layers and a linear output layer.

    Weights are stored input-major (``W[l]`` has shape ``(fan_in, fan_out)``)
    so a batch ``x`` of shape ``(n, fan_in)`` maps as ``x @ W + b``.
    """

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator | None = None):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            if rng is None:
                self.weights.append(np.zeros((fan_in, fan_out)))
                self.biases.append(np.zeros(fan_out))
            else:
                self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
                self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def activations(self) -> tuple[str, ...]:
        return ("relu",) * (len(self.weights) - 1) + ("linear",)

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        for i, p in enumerate(params):
            target = self.weights[i // 2] if i % 2 == 0 else self.biases[i // 2]
            if target.shape != np.shape(p):
                raise ValueError(f"shape mismatch for parameter {i}: {np.shape(p)} vs {target.shape}")
            target[...] = p

    def copy(self) -> "Mlp":
        other = Mlp(self.sizes)
        other.set_params(self.params)
        return other

    def forward(self, x: np.ndarray, keep: bool = False):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"expected input width {self.sizes[0]}, got {x.shape[-1]}")
        inputs = []
        h = x
        last = len(self.weights) - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            h = h @ w + b
            if l < last:
                h = np.maximum(h, 0.0)
        return (h, inputs) if keep else h

    def backward(self, inputs: list[np.ndarray], grad_out: np.ndarray, want_params: bool = True):
        """Return ``(param_grads, grad_input)`` given dL/d(output)."""
        g = grad_out
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        for l in range(len(self.weights) - 1, -1, -1):
            x = inputs[l]
            if want_params:
                grads[2 * l] = x.T @ g if x.ndim > 1 else np.outer(x, g)
                grads[2 * l + 1] = g.sum(axis=0) if g.ndim > 1 else g.copy()
            g = g @ self.weights[l].T
            if l > 0:
                # inputs[l] is the ReLU output of layer l-1
                g = g * (x > 0)
        return (grads if want_params else None), g


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def mlp_gradients(net: Mlp, x: np.ndarray, grad_out: np.ndarray) -> list[np.ndarray]:
    """Parameter gradients of a scalar loss whose output sensitivity is ``grad_out``."""
    _, inputs = net.forward(x, keep=True)
    grads, _ = net.backward(inputs, grad_out)
    return grads


def soft_update(target: Mlp, source: Mlp, tau: float) -> None:
    for t, s in zip(target.params, source.params):
        t *= 1.0 - tau
        t += tau * s


class Adam:
    def __init__(self, params: Sequence[np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        out = {f"{prefix}/t": np.array(self.t)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"{prefix}/m{i}"] = m
            out[f"{prefix}/v{i}"] = v
        return out

    def load_arrays(self, arrays: dict, prefix: str) -> None:
        self.t = int(arrays[f"{prefix}/t"])
        for i in range(len(self.m)):
            self.m[i][...] = arrays[f"{prefix}/m{i}"]
            self.v[i][...] = arrays[f"{prefix}/v{i}"]
