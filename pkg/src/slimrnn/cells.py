"""The standard LSTM cell (LSTM0) and its six slim gate variants.

Every variant shares the recurrence

    c_t = f_t * c_{t-1} + i_t * tanh(U_c h_{t-1} + W_c x_t + b_c)
    h_t = o_t * tanh(c_t)

and differs only in how the three gates i, f, o are computed:

    LSTM0   g = sigmoid(U_g h + W_g x + b_g)        full gate
    LSTM1   g = sigmoid(U_g h + b_g)                no input signal
    LSTM2   g = sigmoid(U_g h)                      no input, no bias
    LSTM3   g = sigmoid(b_g)                        bias only
    LSTM4   g = sigmoid(u_g * h)                    pointwise recurrent weight
    LSTM5   g = sigmoid(u_g * h + b_g)              pointwise weight plus bias
    LSTM6   i = 1, f = alpha, o = 1                 fixed constants

The candidate path keeps its full parameterization in every variant; slim
reductions apply to the gates only. LSTM6's alpha is a fixed hyperparameter
in (-1, 1), not a trainable weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, ShapeError
from .numeric import sigmoid, sigmoid_grad, tanh_act, tanh_grad
from .rng import Rng

GATES = ("i", "f", "o")

DEFAULT_ALPHA = 0.59
DEFAULT_FORGET_BIAS = 1.0


class Variant(Enum):
    LSTM0 = "LSTM0"
    LSTM1 = "LSTM1"
    LSTM2 = "LSTM2"
    LSTM3 = "LSTM3"
    LSTM4 = "LSTM4"
    LSTM5 = "LSTM5"
    LSTM6 = "LSTM6"

    @classmethod
    def parse(cls, name: str) -> "Variant":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ConfigError(
                f"unknown variant {name!r}; expected one of {[v.value for v in cls]}"
            ) from None


# Per-gate parameter kinds each variant uses. "W" is an input weight [n, d],
# "U" a recurrent matrix [n, n], "u" a pointwise recurrent vector [n],
# "b" a bias vector [n].
GATE_TERMS: dict[Variant, tuple[str, ...]] = {
    Variant.LSTM0: ("U", "W", "b"),
    Variant.LSTM1: ("U", "b"),
    Variant.LSTM2: ("U",),
    Variant.LSTM3: ("b",),
    Variant.LSTM4: ("u",),
    Variant.LSTM5: ("u", "b"),
    Variant.LSTM6: (),
}


def param_names(variant: Variant) -> list[str]:
    """Tensor names a variant requires, gates first, then the candidate path."""
    names = [f"{kind}_{g}" for g in GATES for kind in GATE_TERMS[variant]]
    return names + ["W_c", "U_c", "b_c"]


def _expected_shape(name: str, d: int, n: int) -> tuple[int, ...]:
    kind = name.split("_")[0]
    if kind == "W":
        return (n, d)
    if kind == "U":
        return (n, n)
    return (n,)  # "u" and "b"


@dataclass
class CellParams:
    """Weights for one cell. ``tensors`` holds exactly the variant's names."""

    variant: Variant
    input_dim: int
    hidden_dim: int
    tensors: dict[str, np.ndarray]
    alpha: float = DEFAULT_ALPHA  # used by LSTM6 only

    def __post_init__(self):
        expected = param_names(self.variant)
        got = list(self.tensors)
        if sorted(got) != sorted(expected):
            raise ConfigError(
                f"{self.variant.value} expects tensors {sorted(expected)}, got {sorted(got)}"
            )
        for name, arr in self.tensors.items():
            shape = _expected_shape(name, self.input_dim, self.hidden_dim)
            if arr.shape != shape:
                raise ConfigError(
                    f"{self.variant.value} tensor {name} has shape {arr.shape}, expected {shape}"
                )
        if self.variant is Variant.LSTM6 and not -1.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (-1, 1), got {self.alpha}")


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "CellState":
        return cls(np.zeros(n), np.zeros(n))


@dataclass
class StepCache:
    """Everything the backward pass needs from one forward step."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    c_hat: np.ndarray  # tanh of the candidate pre-activation
    c: np.ndarray
    tanh_c: np.ndarray


# CellGrads: a dict mirroring CellParams.tensors, same names and shapes.
CellGrads = dict


def _gate_preact(variant: Variant, params: CellParams, g: str,
                 x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    t = params.tensors
    if variant is Variant.LSTM0:
        return t[f"U_{g}"] @ h_prev + t[f"W_{g}"] @ x + t[f"b_{g}"]
    if variant is Variant.LSTM1:
        return t[f"U_{g}"] @ h_prev + t[f"b_{g}"]
    if variant is Variant.LSTM2:
        return t[f"U_{g}"] @ h_prev
    if variant is Variant.LSTM3:
        return t[f"b_{g}"].copy()
    if variant is Variant.LSTM4:
        return t[f"u_{g}"] * h_prev
    if variant is Variant.LSTM5:
        return t[f"u_{g}"] * h_prev + t[f"b_{g}"]
    raise ConfigError(f"no gate pre-activation for {variant.value}")


def gate_forward(params: CellParams, x: np.ndarray, h_prev: np.ndarray):
    """Compute the three gate activations (i, f, o) for one step."""
    n, d = params.hidden_dim, params.input_dim
    if x.shape != (d,):
        raise ShapeError(f"gate_forward: input {x.shape}, expected ({d},)")
    if h_prev.shape != (n,):
        raise ShapeError(f"gate_forward: hidden {h_prev.shape}, expected ({n},)")
    if params.variant is Variant.LSTM6:
        ones = np.ones(n)
        return ones, params.alpha * np.ones(n), ones.copy()
    return tuple(
        sigmoid(_gate_preact(params.variant, params, g, x, h_prev)) for g in GATES
    )


def cell_step(params: CellParams, x: np.ndarray, state: CellState):
    """One forward step; returns the new state and the cache for backward."""
    i, f, o = gate_forward(params, x, state.h)
    t = params.tensors
    c_hat = tanh_act(t["U_c"] @ state.h + t["W_c"] @ x + t["b_c"])
    c = f * state.c + i * c_hat
    tanh_c = tanh_act(c)
    h = o * tanh_c
    cache = StepCache(x, state.h, state.c, i, f, o, c_hat, c, tanh_c)
    return CellState(h, c), cache


def sequence_forward(params: CellParams, xs: np.ndarray, init: CellState):
    """Fold cell_step over the rows of xs [T, d]; returns hs [T, n] and caches."""
    if xs.ndim != 2 or xs.shape[0] < 1:
        raise ShapeError(f"sequence_forward: need xs of shape [T>=1, d], got {xs.shape}")
    state = init
    hs = np.empty((xs.shape[0], params.hidden_dim))
    caches = []
    for step, x in enumerate(xs):
        state, cache = cell_step(params, x, state)
        hs[step] = state.h
        caches.append(cache)
    return hs, caches


def zero_grads(params: CellParams) -> CellGrads:
    return {name: np.zeros_like(arr) for name, arr in params.tensors.items()}


def _gate_backward(variant: Variant, params: CellParams, g: str, da: np.ndarray,
                   cache: StepCache, grads: CellGrads, dh_prev: np.ndarray,
                   dx: np.ndarray) -> None:
    """Route d(pre-activation) of gate g into parameter grads and dh/dx."""
    t = params.tensors
    if variant in (Variant.LSTM0, Variant.LSTM1, Variant.LSTM2):
        grads[f"U_{g}"] += np.outer(da, cache.h_prev)
        dh_prev += t[f"U_{g}"].T @ da
    if variant is Variant.LSTM0:
        grads[f"W_{g}"] += np.outer(da, cache.x)
        dx += t[f"W_{g}"].T @ da
    if variant in (Variant.LSTM4, Variant.LSTM5):
        grads[f"u_{g}"] += da * cache.h_prev
        dh_prev += da * t[f"u_{g}"]
    if variant in (Variant.LSTM0, Variant.LSTM1, Variant.LSTM3, Variant.LSTM5):
        grads[f"b_{g}"] += da


def sequence_backward(params: CellParams, caches: list[StepCache],
                      d_hs: np.ndarray):
    """Reverse-mode gradients of sum_t <d_hs[t], h_t>.

    Returns (grads, d_xs, d_init) where grads mirrors params.tensors, d_xs is
    [T, d] and d_init is a CellState holding dL/dh_0 and dL/dc_0. For LSTM6
    the gates are constants, so only the candidate path receives gradient.
    """
    T = len(caches)
    if T == 0 or d_hs.shape != (T, params.hidden_dim):
        raise ShapeError(
            f"sequence_backward: d_hs {d_hs.shape} does not match "
            f"{T} cached steps of width {params.hidden_dim}"
        )
    variant = params.variant
    t = params.tensors
    grads = zero_grads(params)
    d_xs = np.zeros((T, params.input_dim))
    dc_next = np.zeros(params.hidden_dim)
    dh = d_hs[T - 1].copy()

    for step in range(T - 1, -1, -1):
        cache = caches[step]
        dh_prev = np.zeros(params.hidden_dim)
        dx = d_xs[step]

        # h = o * tanh(c)
        do = dh * cache.tanh_c
        dc = dh * cache.o * tanh_grad(cache.tanh_c) + dc_next

        # c = f * c_prev + i * c_hat
        df = dc * cache.c_prev
        di = dc * cache.c_hat
        d_chat = dc * cache.i
        dc_next = dc * cache.f

        # candidate path: c_hat = tanh(U_c h_prev + W_c x + b_c)
        da_c = d_chat * tanh_grad(cache.c_hat)
        grads["U_c"] += np.outer(da_c, cache.h_prev)
        grads["W_c"] += np.outer(da_c, cache.x)
        grads["b_c"] += da_c
        dh_prev += t["U_c"].T @ da_c
        dx += t["W_c"].T @ da_c

        if variant is not Variant.LSTM6:
            for g, dg in (("i", di), ("f", df), ("o", do)):
                gate = getattr(cache, g)
                da = dg * sigmoid_grad(gate)
                _gate_backward(variant, params, g, da, cache, grads, dh_prev, dx)

        dh = dh_prev + (d_hs[step - 1] if step > 0 else 0.0)

    # after the step-0 iteration dh is dL/dh_0 and dc_next is dL/dc_0
    d_init = CellState(h=dh, c=dc_next)
    return grads, d_xs, d_init


def count_params(variant: Variant, d: int, n: int) -> int:
    """Trainable parameter count: candidate path plus three gates."""
    if d < 1 or n < 1:
        raise ConfigError(f"dimensions must be positive, got d={d}, n={n}")
    per_kind = {"W": n * d, "U": n * n, "u": n, "b": n}
    per_gate = sum(per_kind[kind] for kind in GATE_TERMS[variant])
    candidate = n * d + n * n + n
    return candidate + 3 * per_gate


def init_params(variant: Variant, d: int, n: int, rng: Rng,
                alpha: float = DEFAULT_ALPHA,
                forget_bias: float = DEFAULT_FORGET_BIAS) -> CellParams:
    """Uniform init in [-s, s]: s = 1/sqrt(d) for input weights, 1/sqrt(n) for
    recurrent and pointwise weights. Biases start at zero except the forget
    gate's, which starts at ``forget_bias`` where the variant has one."""
    if d < 1 or n < 1:
        raise ConfigError(f"dimensions must be positive, got d={d}, n={n}")
    s_in, s_rec = 1.0 / np.sqrt(d), 1.0 / np.sqrt(n)
    tensors = {}
    for name in param_names(variant):
        kind = name.split("_")[0]
        shape = _expected_shape(name, d, n)
        if kind == "W":
            tensors[name] = rng.uniform(shape, -s_in, s_in)
        elif kind in ("U", "u"):
            tensors[name] = rng.uniform(shape, -s_rec, s_rec)
        else:
            tensors[name] = np.zeros(shape)
    if "b_f" in tensors:
        tensors["b_f"] += forget_bias
    return CellParams(variant, d, n, tensors, alpha=alpha)
