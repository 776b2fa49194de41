"""Named parameter storage and gradient-based update rules."""

from __future__ import annotations

import numpy as np

from ..errors import MissingGradient, ShapeMismatch
from .tensor import Tensor


class ParameterStore:
    """Flat dict of named parameter tensors plus Adam moment buffers."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name, value):
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(value)
        self.params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def names(self):
        return sorted(self.params)

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def gradients(self):
        """Per-parameter gradient, zeros where nothing reached the parameter."""
        return {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in self.params.items()
        }

    def load_values(self, values):
        for name, arr in values.items():
            if name not in self.params:
                raise KeyError(f"unknown parameter {name!r}")
            if self.params[name].data.shape != arr.shape:
                raise ShapeMismatch(self.params[name].data.shape, arr.shape, name)
            self.params[name].data = np.asarray(arr, dtype=np.float64)


def adam_step(store, lr, beta1=0.9, beta2=0.999, eps=1e-8, grads=None):
    """One bias-corrected Adam update over every parameter in the store."""
    if grads is None:
        grads = store.gradients()
    for name in store.params:
        if name not in grads:
            raise MissingGradient(name)
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in store.params.items():
        g = grads[name]
        store.m[name] = beta1 * store.m[name] + (1.0 - beta1) * g
        store.v[name] = beta2 * store.v[name] + (1.0 - beta2) * g * g
        m_hat = store.m[name] / c1
        v_hat = store.v[name] / c2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
    return store


def sgd_step(store, lr, grads=None):
    """Plain gradient descent update."""
    if grads is None:
        grads = store.gradients()
    store.step_count += 1
    for name, p in store.params.items():
        p.data = p.data - lr * grads[name]
    return store
