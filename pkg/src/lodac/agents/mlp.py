"""A small fully connected network with hand-written backpropagation."""
from __future__ import annotations

import numpy as np


class MLP:
    """ReLU hidden layers, identity output.

    Parameters
    ----------
    sizes : sequence of int
        Layer widths including input and output, e.g. ``(1, 50, 50, k)``.
    rng : numpy.random.Generator, optional
        Used for He-uniform weight initialization; biases start at zero.
    dtype : numpy dtype
        Parameter and activation precision.
    """

    def __init__(self, sizes, rng=None, dtype=np.float64):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2:
            raise ValueError("an MLP needs at least an input and an output layer")
        self.dtype = np.dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng()
        self.flat = np.zeros(sum(a * b + b for a, b in zip(self.sizes, self.sizes[1:])), dtype=self.dtype)
        self._bind()
        for w, fan_in in zip(self.weights, self.sizes):
            bound = np.sqrt(6.0 / fan_in)
            w[...] = rng.uniform(-bound, bound, size=w.shape)

    def _bind(self) -> None:
        # weights and biases are views into one contiguous parameter vector
        self.weights, self.biases = [], []
        pos = 0
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            self.weights.append(self.flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out))
            pos += fan_in * fan_out
            self.biases.append(self.flat[pos:pos + fan_out])
            pos += fan_out

    @property
    def params(self) -> list[np.ndarray]:
        """Weights and biases interleaved per layer: W0, b0, W1, b1, ...  (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def set_params(self, params) -> None:
        for dst, src in zip(self.params, params):
            if dst.shape != np.shape(src):
                raise ValueError(f"parameter shape {np.shape(src)} does not match {dst.shape}")
            dst[...] = src

    def copy(self) -> "MLP":
        twin = MLP.__new__(MLP)
        twin.sizes = self.sizes
        twin.dtype = self.dtype
        twin.flat = self.flat.copy()
        twin._bind()
        return twin

    @staticmethod
    def flatten(grads) -> np.ndarray:
        """Concatenate per-parameter arrays in :attr:`params` order, matching :attr:`flat`."""
        return np.concatenate([np.ravel(g) for g in grads])

    def forward(self, x, keep=False):
        """Outputs for a batch ``x`` of shape ``(batch, sizes[0])``.

        With ``keep=True`` also return the per-layer inputs needed by :meth:`backward`.
        """
        h = np.asarray(x, dtype=self.dtype)
        if h.ndim == 1:
            h = h[:, None]
        acts = [h]
        last = len(self.weights) - 1
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if idx < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return (h, acts) if keep else h

    __call__ = forward

    def backward(self, acts, grad_out) -> list[np.ndarray]:
        """Gradients of a scalar loss given ``d loss / d output``, ordered like :attr:`params`."""
        grads = [None] * (2 * len(self.weights))
        g = np.asarray(grad_out, dtype=self.dtype)
        for idx in range(len(self.weights) - 1, -1, -1):
            inp = acts[idx]
            grads[2 * idx] = inp.T @ g
            grads[2 * idx + 1] = g.sum(axis=0)
            if idx:
                g = (g @ self.weights[idx].T) * (acts[idx] > 0)
        return grads


class Adam:
    """Adaptive-moment gradient descent over a list of arrays, updated in place."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * np.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= scale * m / (np.sqrt(v) + self.eps)

    def state(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t}
