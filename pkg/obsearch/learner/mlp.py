"""Tiny fully connected networks with explicit backprop, and an Adam optimizer."""
from __future__ import annotations

import numpy as np


class MLP:
    """``tanh`` hidden layers, linear output.

    Parameters are kept as a flat list ``[W0, b0, W1, b1, ...]`` so optimizers and
    checkpoints can treat every network the same way.
    """

    def __init__(self, layer_sizes, rng: np.random.Generator | None = None):
        self.layer_sizes = [int(n) for n in layer_sizes]
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.params.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def weight(self, i: int) -> np.ndarray:
        return self.params[2 * i]

    def bias(self, i: int) -> np.ndarray:
        return self.params[2 * i + 1]

    def forward(self, x: np.ndarray):
        """Return ``(output, cache)``; ``cache`` holds every layer's activation."""
        acts = [np.atleast_2d(np.asarray(x, dtype=np.float64))]
        for i in range(self.n_layers):
            z = acts[-1] @ self.weight(i) + self.bias(i)
            acts.append(np.tanh(z) if i < self.n_layers - 1 else z)
        return acts[-1], acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of ``sum(grad_out * output)`` w.r.t. parameters and input."""
        grads: list[np.ndarray] = [None] * len(self.params)
        g = np.asarray(grad_out, dtype=np.float64)
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                g = g * (1.0 - cache[i + 1] ** 2)
            grads[2 * i] = cache[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weight(i).T
        return grads, g

    def copy(self) -> MLP:
        clone = MLP.__new__(MLP)
        clone.layer_sizes = list(self.layer_sizes)
        clone.params = [p.copy() for p in self.params]
        return clone

    def load(self, arrays) -> None:
        for target, source in zip(self.params, arrays, strict=True):
            if target.shape != source.shape:
                raise ValueError(f"parameter shape {source.shape} does not match {target.shape}")
            target[...] = source


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
