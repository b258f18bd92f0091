"""Gradient-based optimizers with global-norm clipping."""
from __future__ import annotations

import numpy as np

from .tape import TrainingFault


def global_norm(params):
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))


class Optimizer:
    def __init__(self, params, lr, clip_norm=5.0):
        if lr < 0:
            raise ValueError("learning rate must be nonnegative")
        self.params = list(params)
        self.lr = float(lr)
        self.clip_norm = clip_norm
        self.iteration = 0

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        """Check, clip and apply the accumulated gradients, then zero them."""
        self.iteration += 1
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise TrainingFault(f"non-finite gradient in {p.name}", self.iteration)
        if self.clip_norm:
            norm = global_norm(self.params)
            if norm > self.clip_norm:
                scale = self.clip_norm / norm
                for p in self.params:
                    p.grad *= scale
        self._apply()
        self.zero_grad()

    def _apply(self):
        raise NotImplementedError

    def state_dict(self):
        return {"iteration": self.iteration}


class SGD(Optimizer):
    def _apply(self):
        if self.lr == 0.0:
            return
        for p in self.params:
            p.value -= self.lr * p.grad


class Adam(Optimizer):
    def __init__(self, params, lr, clip_norm=5.0, betas=(0.9, 0.999), eps=1e-8):
        super().__init__(params, lr, clip_norm)
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def _apply(self):
        t = self.iteration
        c1 = 1.0 - self.b1 ** t
        c2 = 1.0 - self.b2 ** t
        for p, m, v in zip(self.params, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * p.grad
            v *= self.b2
            v += (1.0 - self.b2) * p.grad * p.grad
            p.value -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(kind, params, lr, clip_norm=5.0):
    if kind == "sgd":
        return SGD(params, lr, clip_norm)
    if kind == "adam":
        return Adam(params, lr, clip_norm)
    raise ValueError(f"unknown optimizer {kind!r}")


def apply_update(optimizer):
    optimizer.step()
