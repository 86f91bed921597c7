"""Parameter-update rules: SGD, RMSprop, and Adam.

Parameters and gradients travel as dicts keyed by tensor name. All three
rules update the parameter arrays in place and are deterministic given
(state, grads). Slot tensors are allocated lazily per name, so an optimizer
binds to whatever parameter set it first sees.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ShapeError

LR_PRESETS = (1e-4, 1e-3, 3e-4)


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm.
    """
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total > max_norm > 0.0:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


class Optimizer:
    def __init__(self, lr: float):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        self.lr = lr
        self.t = 0

    @staticmethod
    def _check(params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        if params.keys() != grads.keys():
            missing = sorted(params.keys() - grads.keys())
            extra = sorted(grads.keys() - params.keys())
            raise ShapeError(f"param/grad name mismatch: missing={missing} extra={extra}")
        for name, p in params.items():
            if p.shape != grads[name].shape:
                raise ShapeError(
                    f"{name}: param {p.shape} vs grad {grads[name].shape}")

    def apply_update(self, params: dict[str, np.ndarray],
                     grads: dict[str, np.ndarray]) -> None:
        self._check(params, grads)
        self.t += 1
        self._step(params, grads)

    def _step(self, params, grads):
        raise NotImplementedError

    def _slot(self, store: dict, name: str, like: np.ndarray) -> np.ndarray:
        if name not in store:
            store[name] = np.zeros_like(like)
        return store[name]


class SGD(Optimizer):
    kind = "sgd"

    def _step(self, params, grads):
        for name, p in params.items():
            p -= self.lr * grads[name]


class RMSprop(Optimizer):
    """Gradient scaled by a decaying RMS of its own history."""

    kind = "rmsprop"

    def __init__(self, lr: float, rho: float = 0.9, eps: float = 1e-8):
        super().__init__(lr)
        self.rho = rho
        self.eps = eps
        self.v: dict[str, np.ndarray] = {}

    def _step(self, params, grads):
        for name, p in params.items():
            g = grads[name]
            v = self._slot(self.v, name, p)
            v *= self.rho
            v += (1.0 - self.rho) * g * g
            p -= self.lr * g / (np.sqrt(v) + self.eps)


class Adam(Optimizer):
    """Bias-corrected first/second moment estimates; eps sits outside the
    square root."""

    kind = "adam"

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        super().__init__(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def _step(self, params, grads):
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self._slot(self.m, name, p)
            v = self._slot(self.v, name, p)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


OPTIMIZERS = {"sgd": SGD, "rmsprop": RMSprop, "adam": Adam}


def make_optimizer(kind: str, lr: float) -> Optimizer:
    try:
        cls = OPTIMIZERS[kind.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown optimizer {kind!r}; expected one of {sorted(OPTIMIZERS)}"
        ) from None
    return cls(lr)
