"""Dense relu policy network with a softmax head, hand-written backprop and Adam.

All parameters live in one flat float64 vector ``theta``. Layout, layer by
layer: the weight matrix of shape ``(fan_out, fan_in)`` in row-major order,
then the bias vector. ``weights``/``biases`` are views into ``theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def n_params(layer_sizes) -> int:
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


@dataclass
class PolicyParams:
    layer_sizes: tuple[int, ...]
    theta: np.ndarray
    adam_m: np.ndarray = None
    adam_v: np.ndarray = None
    adam_t: int = 0
    weights: list = field(init=False, repr=False)
    biases: list = field(init=False, repr=False)

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) != 4 or any(s <= 0 for s in self.layer_sizes):
            raise ValueError(f"need four positive layer sizes (in, hidden, hidden, out), got {self.layer_sizes}")
        size = n_params(self.layer_sizes)
        self.theta = np.ascontiguousarray(self.theta, dtype=float)
        if self.theta.shape != (size,):
            raise ValueError(f"theta has shape {self.theta.shape}, expected ({size},)")
        self.adam_m = np.zeros(size) if self.adam_m is None else np.asarray(self.adam_m, dtype=float)
        self.adam_v = np.zeros(size) if self.adam_v is None else np.asarray(self.adam_v, dtype=float)
        if self.adam_m.shape != (size,) or self.adam_v.shape != (size,):
            raise ValueError("Adam moment shapes do not match theta")
        if self.adam_t < 0:
            raise ValueError("adam_t must be non-negative")
        self.weights, self.biases = _views(self.theta, self.layer_sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_actions(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.layer_sizes, self.theta.copy(), self.adam_m.copy(),
                            self.adam_v.copy(), self.adam_t)


def _views(flat, layer_sizes):
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(flat[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in))
        pos += fan_in * fan_out
        biases.append(flat[pos:pos + fan_out])
        pos += fan_out
    return weights, biases


def init_params(layer_sizes=(2, 60, 60, 11), rng=None, zero: bool = False) -> PolicyParams:
    """Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if len(layer_sizes) != 4 or any(s <= 0 for s in layer_sizes):
        raise ValueError(f"need four positive layer sizes (in, hidden, hidden, out), got {layer_sizes}")
    theta = np.zeros(n_params(layer_sizes))
    if not zero:
        rng = np.random.default_rng() if rng is None else rng
        weights, _ = _views(theta, layer_sizes)
        for w in weights:
            bound = 1.0 / np.sqrt(w.shape[1])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
    return PolicyParams(layer_sizes, theta)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cache(params: PolicyParams, x: np.ndarray):
    (w1, w2, w3), (b1, b2, b3) = params.weights, params.biases
    z1 = x @ w1.T + b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ w2.T + b2
    h2 = np.maximum(z2, 0.0)
    logits = h2 @ w3.T + b3
    return z1, h1, z2, h2, logits


def _check_obs(params: PolicyParams, obs) -> np.ndarray:
    x = np.asarray(obs, dtype=float)
    if x.shape[-1] != params.n_inputs:
        raise ValueError(f"observation has {x.shape[-1]} entries, network expects {params.n_inputs}")
    return x


def logits(params: PolicyParams, obs) -> np.ndarray:
    return _forward_cache(params, _check_obs(params, obs))[-1]


def forward(params: PolicyParams, obs) -> np.ndarray:
    """Action probabilities for one observation ``(n_in,)`` or a batch ``(B, n_in)``."""
    return softmax(logits(params, obs))


def sample_action(probs: np.ndarray, rng, uniforms=None):
    """Inverse-CDF categorical draw; works row-wise on a ``(B, M)`` batch."""
    probs = np.asarray(probs)
    u = rng.random(probs.shape[:-1]) if uniforms is None else np.asarray(uniforms)
    cdf = np.cumsum(probs, axis=-1)
    # guard against the last cdf entry landing a rounding error below 1
    idx = (cdf <= u[..., None]).sum(axis=-1)
    idx = np.minimum(idx, probs.shape[-1] - 1)
    return int(idx) if idx.ndim == 0 else idx


def argmax_action(probs: np.ndarray):
    idx = np.argmax(np.asarray(probs), axis=-1)
    return int(idx) if np.ndim(idx) == 0 else idx


def weighted_logprob_grad(params: PolicyParams, obs, actions, weights, chunk: int = 16384) -> np.ndarray:
    """Sum_k weights[k] * d/dtheta ln pi(actions[k] | obs[k]) as a flat vector."""
    x_all = _check_obs(params, obs).reshape(-1, params.n_inputs)
    a_all = np.asarray(actions).reshape(-1)
    w_all = np.asarray(weights, dtype=float).reshape(-1)
    (w1, w2, w3) = params.weights
    grad = np.zeros_like(params.theta)
    (gw1, gw2, gw3), (gb1, gb2, gb3) = _views(grad, params.layer_sizes)
    for start in range(0, x_all.shape[0], chunk):
        x = x_all[start:start + chunk]
        a = a_all[start:start + chunk]
        wt = w_all[start:start + chunk]
        z1, h1, z2, h2, lg = _forward_cache(params, x)
        delta = -softmax(lg)
        delta[np.arange(len(a)), a] += 1.0
        delta *= wt[:, None]
        gw3 += delta.T @ h2
        gb3 += delta.sum(axis=0)
        d2 = (delta @ w3) * (z2 > 0)
        gw2 += d2.T @ h1
        gb2 += d2.sum(axis=0)
        d1 = (d2 @ w2) * (z1 > 0)
        gw1 += d1.T @ x
        gb1 += d1.sum(axis=0)
    return grad


def logprob_grad(params: PolicyParams, obs, action: int) -> np.ndarray:
    """Gradient of ln pi(action | obs) with respect to the flat parameter vector."""
    x = _check_obs(params, obs)
    if x.ndim != 1:
        raise ValueError("logprob_grad takes a single observation")
    if not 0 <= action < params.n_actions:
        raise IndexError(f"action {action} outside [0, {params.n_actions})")
    return weighted_logprob_grad(params, x[None, :], [action], [1.0])


def adam_update(params: PolicyParams, grad: np.ndarray, eta: float) -> PolicyParams:
    """One Adam step in the ascent direction of ``grad``; returns new params."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params.theta.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameters {params.theta.shape}")
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient entries")
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    t = params.adam_t + 1
    m = ADAM_BETA1 * params.adam_m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * params.adam_v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = m / (1.0 - ADAM_BETA1 ** t)
    v_hat = v / (1.0 - ADAM_BETA2 ** t)
    theta = params.theta + eta * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return PolicyParams(params.layer_sizes, theta, m, v, t)
