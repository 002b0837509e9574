"""Minimal from-scratch CNN kernel: layers, forward/backward, BCE, grad check.

The default architecture for a 1x64x128 segment is

    conv(F) -> relu -> maxpool2 -> conv(2F) -> relu -> maxpool2
    -> flatten -> dense(64) -> relu -> dense(1) -> sigmoid

with F = 8 (small) or 16 (large). Everything runs in float64; persistence
quantizes to float32 (see bundle module).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as _kernels
from .errors import ShapeMismatch, StaleCache

BCE_EPS = 1e-7


# ------------------------------------------------------------------ layers


class Layer:
    kind = "?"

    def params(self) -> list[np.ndarray]:
        return []


@dataclass
class Conv2D(Layer):
    """3x3 kernels, stride 1, zero padding 1."""

    kernels: np.ndarray  # [out_ch, in_ch, 3, 3]
    bias: np.ndarray  # [out_ch]
    kind = "conv2d"

    def params(self):
        return [self.kernels, self.bias]


@dataclass
class Dense(Layer):
    weights: np.ndarray  # [out, in]
    bias: np.ndarray  # [out]
    kind = "dense"

    def params(self):
        return [self.weights, self.bias]


class ReLU(Layer):
    kind = "relu"


class MaxPool2(Layer):
    kind = "maxpool2"


class Flatten(Layer):
    kind = "flatten"


class Sigmoid(Layer):
    kind = "sigmoid"


@dataclass
class Network:
    layers: list[Layer]
    input_shape: tuple[int, int, int] = (1, 64, 128)

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]


# ------------------------------------------------------- elementary ops


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.ndim != 3 or kernels.ndim != 4 or kernels.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"conv2d: input {x.shape} vs kernels {kernels.shape}")
    if kernels.shape[2:] != (3, 3) or bias.shape != (kernels.shape[0],):
        raise ShapeMismatch(f"conv2d: kernels {kernels.shape}, bias {bias.shape}")
    return _conv(x, kernels, bias)


def _conv(x, k, b):
    return _kernels.conv2d_forward(
        np.ascontiguousarray(x), np.ascontiguousarray(k), np.ascontiguousarray(b)
    )


def maxpool2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if x.ndim != 3 or x.shape[1] % 2 or x.shape[2] % 2:
        raise ShapeMismatch(f"maxpool2 needs [C,H,W] with even H,W, got {x.shape}")
    return _kernels.maxpool2_forward(np.ascontiguousarray(x))


def dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.ndim != 1 or weights.shape[1] != x.shape[0] or bias.shape != (weights.shape[0],):
        raise ShapeMismatch(f"dense: input {x.shape}, W {weights.shape}, b {bias.shape}")
    return weights @ x + bias


def activation(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(0.0, x)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    raise ValueError(f"unknown activation {kind!r}")


def bce_loss(p: float, y: int) -> float:
    p = min(max(p, BCE_EPS), 1.0 - BCE_EPS)
    return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))


def _bce_grad(p: float, y: int) -> float:
    """dL/dp of the clamped loss; zero in the clamped region."""
    if p < BCE_EPS or p > 1.0 - BCE_EPS:
        return 0.0
    return -y / p + (1 - y) / (1.0 - p)


# ------------------------------------------------------- forward / backward


def forward(net: Network, x: np.ndarray) -> tuple[float, list]:
    """Run all layers; returns (probability, cache for backward).

    cache[i] holds whatever layer i needs to backpropagate; the final
    entry is the output probability.
    """
    if tuple(x.shape) != tuple(net.input_shape):
        raise ShapeMismatch(f"input {x.shape}, network expects {net.input_shape}")
    cache: list = []
    cur = np.asarray(x, dtype=np.float64)
    for layer in net.layers:
        if isinstance(layer, Conv2D):
            cache.append(("conv2d", cur))
            cur = _conv(cur, layer.kernels, layer.bias)
        elif isinstance(layer, ReLU):
            cache.append(("relu", cur))
            cur = np.maximum(0.0, cur)
        elif isinstance(layer, MaxPool2):
            cur, arg = maxpool2(cur)
            cache.append(("maxpool2", arg))
        elif isinstance(layer, Flatten):
            cache.append(("flatten", cur.shape))
            cur = cur.reshape(-1)
        elif isinstance(layer, Dense):
            cache.append(("dense", cur))
            cur = dense(cur, layer.weights, layer.bias)
        elif isinstance(layer, Sigmoid):
            cur = 1.0 / (1.0 + np.exp(-cur))
            cache.append(("sigmoid", cur))
        else:
            raise ShapeMismatch(f"unknown layer kind {layer.kind!r}")
    if cur.shape != (1,):
        raise ShapeMismatch(f"network must end in a single probability, got shape {cur.shape}")
    p = float(cur[0])
    cache.append(("output", p))
    return p, cache


def backward(net: Network, cache: list, y: int) -> list[list[np.ndarray]]:
    """Exact gradients of bce_loss(forward(net, x), y) per layer.

    Returns one list per layer, matching layer.params() shapes ([] for
    parameter-free layers).
    """
    if len(cache) != len(net.layers) + 1 or cache[-1][0] != "output":
        raise StaleCache("cache does not match this network")
    p = cache[-1][1]
    grad = np.array([_bce_grad(p, y)])  # dL/dp entering the top
    grads: list[list[np.ndarray]] = [[] for _ in net.layers]
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        tag, saved = cache[i]
        if tag != layer.kind:
            raise StaleCache(f"cache entry {tag!r} vs layer {layer.kind!r}")
        if isinstance(layer, Sigmoid):
            grad = grad * saved * (1.0 - saved)
        elif isinstance(layer, Dense):
            if grad.shape != (layer.weights.shape[0],):
                raise StaleCache("gradient shape disagrees with dense layer")
            grads[i] = [np.outer(grad, saved), grad.copy()]
            grad = layer.weights.T @ grad
        elif isinstance(layer, Flatten):
            grad = grad.reshape(saved)
        elif isinstance(layer, MaxPool2):
            grad = _kernels.maxpool2_backward(saved, np.ascontiguousarray(grad))
        elif isinstance(layer, ReLU):
            grad = grad * (saved > 0)
        elif isinstance(layer, Conv2D):
            gx, gk, gb = _kernels.conv2d_backward(
                np.ascontiguousarray(saved),
                np.ascontiguousarray(layer.kernels),
                np.ascontiguousarray(grad),
            )
            grads[i] = [gk, gb]
            grad = gx
    return grads


# --------------------------------------------------------------- building


def glorot_init(shape: tuple[int, ...], fan_in: int, fan_out: int, rng) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def build_network(width: int = 8, seed: int = 0, input_shape=(1, 64, 128)) -> Network:
    """Default two-conv-block architecture; biases zero, weights Glorot uniform."""
    rng = np.random.default_rng(seed)
    c, h, w = input_shape
    f1, f2 = width, 2 * width
    flat = f2 * (h // 4) * (w // 4)
    hidden = 64
    layers: list[Layer] = [
        Conv2D(glorot_init((f1, c, 3, 3), c * 9, f1 * 9, rng), np.zeros(f1)),
        ReLU(),
        MaxPool2(),
        Conv2D(glorot_init((f2, f1, 3, 3), f1 * 9, f2 * 9, rng), np.zeros(f2)),
        ReLU(),
        MaxPool2(),
        Flatten(),
        Dense(glorot_init((hidden, flat), flat, hidden, rng), np.zeros(hidden)),
        ReLU(),
        Dense(glorot_init((1, hidden), hidden, 1, rng), np.zeros(1)),
        Sigmoid(),
    ]
    return Network(layers=layers, input_shape=tuple(input_shape))


# ------------------------------------------------------------- grad check


def grad_check(
    net: Network,
    x: np.ndarray,
    y: int,
    n_samples: int = 200,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples >= n_samples parameters uniformly across all tensors; relative
    error is |a - n| / max(|a|, |n|, 1e-8).
    """
    _, cache = forward(net, x)
    analytic_by_layer = backward(net, cache, y)
    params = net.params()
    analytic = [g for layer in analytic_by_layer for g in layer]

    sizes = np.array([p.size for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=min(n_samples, total), replace=False)

    max_rel = 0.0
    for flat_idx in picks:
        t = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        i = int(flat_idx - offsets[t])
        p = params[t]
        orig = p.flat[i]
        p.flat[i] = orig + step
        lp = bce_loss(forward(net, x)[0], y)
        p.flat[i] = orig - step
        lm = bce_loss(forward(net, x)[0], y)
        p.flat[i] = orig
        numeric = (lp - lm) / (2.0 * step)
        a = analytic[t].flat[i]
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel
