"""Minimal differentiable-function stack for the actor-critic learner.

Tiny feed-forward networks with hand-derived reverse-mode gradients (the
architecture zoo is fixed: at most a few dense layers), tanh-squashed
Gaussian heads with reparameterized sampling, first-order optimizers, and a
central-finite-difference gradient checker. Heavy lifting (the batched
forward/backward passes) is delegated to the kernel backend.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backend

PARAM_LAYOUT_VERSION = 1

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
SQUASH_JACOBIAN_EPS = 1e-6
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

_ACT_IDS = {"tanh": 0, "relu": 1}


class ShapeError(ValueError):
    """Input width does not match the network."""


@dataclass
class MLP:
    """Dense network with a deterministic flat parameter layout."""

    widths: tuple[int, ...]
    activation: str = "tanh"
    params: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValueError(f"invalid layer widths {self.widths}")
        if self.activation not in _ACT_IDS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.params is None:
            self.params = np.zeros(param_count(self.widths), dtype=np.float64)
        else:
            self.params = np.asarray(self.params, dtype=np.float64)
            if self.params.shape != (param_count(self.widths),):
                raise ValueError("parameter vector does not match layout")
        self._widths_arr = np.asarray(self.widths, dtype=np.int64)
        self._act_id = _ACT_IDS[self.activation]

    @property
    def n_params(self) -> int:
        return self.params.size

    def copy(self) -> "MLP":
        return MLP(self.widths, self.activation, self.params.copy())


def param_count(widths) -> int:
    return backend.kernels().param_count(widths)


def init_mlp(widths, rng: np.random.Generator, activation: str = "tanh",
             out_scale: float = 1.0) -> MLP:
    """Glorot-uniform weights, zero biases; final layer scaled by out_scale."""
    widths = tuple(int(w) for w in widths)
    params = np.zeros(param_count(widths), dtype=np.float64)
    p = 0
    n_layers = len(widths) - 1
    for l in range(n_layers):
        n_in, n_out = widths[l], widths[l + 1]
        limit = math.sqrt(6.0 / (n_in + n_out))
        if l == n_layers - 1:
            limit *= out_scale
        params[p : p + n_out * n_in] = rng.uniform(-limit, limit, size=n_out * n_in)
        p += n_out * (n_in + 1)
    return MLP(widths, activation, params)


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def forward(net: MLP, x) -> np.ndarray:
    """Deterministic evaluation; accepts a single input vector or a batch."""
    out, _ = forward_cached(net, x)
    return out


def forward_cached(net: MLP, x) -> tuple[np.ndarray, np.ndarray]:
    x, squeeze = _as_batch(x)
    if x.shape[1] != net.widths[0]:
        raise ShapeError(f"input width {x.shape[1]} != layer 0 width {net.widths[0]}")
    out, cache = backend.kernels().mlp_forward(net.params, net._widths_arr, net._act_id, x)
    return (out[0] if squeeze else out), cache


def backward(net: MLP, cache: np.ndarray, upstream) -> tuple[np.ndarray, np.ndarray]:
    """Exact reverse-mode gradients for the cached forward pass.

    Returns ``(dparams, dx)``; ``dparams`` is summed over the batch.
    """
    upstream, squeeze = _as_batch(upstream)
    if upstream.shape[1] != net.widths[-1]:
        raise ShapeError(f"upstream width {upstream.shape[1]} != output width {net.widths[-1]}")
    dparams, dx = backend.kernels().mlp_backward(
        net.params, net._widths_arr, net._act_id, cache, np.ascontiguousarray(upstream)
    )
    return dparams, (dx[0] if squeeze else dx)


def net_to_dict(net: MLP) -> dict:
    """Bit-exact serializable form (params as base64 little-endian float64)."""
    return {
        "layout_version": PARAM_LAYOUT_VERSION,
        "widths": list(net.widths),
        "activation": net.activation,
        "params": base64.b64encode(net.params.astype("<f8").tobytes()).decode("ascii"),
    }


def net_from_dict(d: dict) -> MLP:
    if d.get("layout_version") != PARAM_LAYOUT_VERSION:
        raise ValueError(f"unsupported parameter layout version {d.get('layout_version')!r}")
    params = np.frombuffer(base64.b64decode(d["params"]), dtype="<f8").astype(np.float64)
    return MLP(tuple(d["widths"]), d["activation"], params)


# ---------------------------------------------------------------------------
# tanh-squashed Gaussian head
# ---------------------------------------------------------------------------

def clamp_log_std(log_std):
    """Clamp to [LOG_STD_MIN, LOG_STD_MAX]; also returns the gradient mask."""
    log_std = np.asarray(log_std, dtype=np.float64)
    clamped = np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    mask = ((log_std > LOG_STD_MIN) & (log_std < LOG_STD_MAX)).astype(np.float64)
    return clamped, mask


def squash(raw, low: float, high: float):
    # tanh saturates to exactly +-1.0 in float64 beyond |raw| ~ 19; clip so
    # actions stay strictly inside the box
    t = np.clip(np.tanh(raw), -1.0 + 1e-12, 1.0 - 1e-12)
    return low + (high - low) * (t + 1.0) / 2.0


def unsquash(action, low: float, high: float):
    """Inverse of ``squash``; clipped away from the bounds for finiteness."""
    u = 2.0 * (np.asarray(action, dtype=np.float64) - low) / (high - low) - 1.0
    return np.arctanh(np.clip(u, -1.0 + 1e-12, 1.0 - 1e-12))


def squash_jacobian(raw, low: float, high: float):
    t = np.tanh(raw)
    return (high - low) / 2.0 * (1.0 - t * t) + SQUASH_JACOBIAN_EPS


def sample_squashed(mean, log_std, low: float, high: float, epsilon):
    """Reparameterized sample and its log-density.

    ``epsilon`` is standard-normal noise supplied by the caller, so the same
    noise can be replayed when differentiating through the sample.
    """
    log_std, _ = clamp_log_std(log_std)
    raw = np.asarray(mean, dtype=np.float64) + np.exp(log_std) * np.asarray(epsilon)
    action = squash(raw, low, high)
    log_prob = log_prob_from_raw(mean, log_std, low, high, raw)
    return action, log_prob


def log_prob_from_raw(mean, log_std, low: float, high: float, raw):
    """Log-density of ``squash(raw)`` when ``raw`` is already known."""
    log_std, _ = clamp_log_std(log_std)
    z = (np.asarray(raw) - np.asarray(mean)) * np.exp(-log_std)
    normal = -0.5 * z * z - log_std - HALF_LOG_2PI
    return normal - np.log(squash_jacobian(raw, low, high))


def log_prob_squashed(mean, log_std, low: float, high: float, action):
    """Log-density of a given squashed action (inverts the squash)."""
    return log_prob_from_raw(mean, log_std, low, high, unsquash(action, low, high))


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

@dataclass
class SGD:
    lr: float

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("step size must be positive")


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _m: np.ndarray = field(default=None, repr=False)
    _v: np.ndarray = field(default=None, repr=False)
    _t: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("step size must be positive")


def optimizer_step(opt, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """In-place descent step; rejects non-finite gradients."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape:
        raise ShapeError("gradient shape does not match parameters")
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient; step rejected")
    if isinstance(opt, SGD):
        params -= opt.lr * grad
    elif isinstance(opt, Adam):
        if opt._m is None:
            opt._m = np.zeros_like(params)
            opt._v = np.zeros_like(params)
        opt._t += 1
        opt._m = opt.beta1 * opt._m + (1.0 - opt.beta1) * grad
        opt._v = opt.beta2 * opt._v + (1.0 - opt.beta2) * grad * grad
        m_hat = opt._m / (1.0 - opt.beta1 ** opt._t)
        v_hat = opt._v / (1.0 - opt.beta2 ** opt._t)
        params -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    else:
        raise TypeError(f"unknown optimizer {type(opt).__name__}")
    return params


# ---------------------------------------------------------------------------
# finite-difference verifier
# ---------------------------------------------------------------------------

def finite_difference(f: Callable[[np.ndarray], float], x: np.ndarray,
                      h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, coordinate by coordinate."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    xf = x.copy().ravel()
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        fp = f(xf.reshape(x.shape))
        xf[i] = orig - h
        fm = f(xf.reshape(x.shape))
        xf[i] = orig
        flat[i] = (fp - fm) / (2.0 * h)
    return grad


def max_relative_error(a, b, floor: float = 1.0) -> float:
    """max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
