"""Dense feed-forward core shared by the classifier and the autoencoder.

Plain numpy: forward/backward passes, softmax cross-entropy and MSE heads,
Adam updates, and a finite-difference gradient checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def relu(z):
    return np.maximum(z, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


_ACTIVATIONS = {"relu", "tanh", "linear"}


@dataclass
class Net:
    """Stack of dense layers; `activations` names one function per layer."""

    weights: list
    biases: list
    activations: list

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("layer lists must have equal lengths")
        for act in self.activations:
            if act not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for i in range(len(self.weights) - 1):
            if self.weights[i].shape[1] != self.weights[i + 1].shape[0]:
                raise ValueError("layer shapes do not chain")

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def copy(self) -> "Net":
        return Net(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activations": list(self.activations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Net":
        return cls(
            [np.asarray(w, dtype=np.float64) for w in d["weights"]],
            [np.asarray(b, dtype=np.float64) for b in d["biases"]],
            list(d["activations"]),
        )


def init_net(layer_sizes, activations, rng: np.random.Generator) -> Net:
    """Fan-in-scaled uniform init, uniform(-sqrt(6/fan_in), +sqrt(6/fan_in))."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Net(weights, biases, list(activations))


def forward(net: Net, x: np.ndarray, dropout: float = 0.0, rng=None):
    """Forward pass; returns (output, cache) for backprop.

    Inverted dropout is applied to every hidden layer's activation when
    `dropout` > 0 (training mode); the output layer is never dropped.
    """
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    pre_acts, acts, masks = [], [a], []
    last = len(net.weights) - 1
    for i, (w, b, act) in enumerate(zip(net.weights, net.biases, net.activations)):
        z = a @ w + b
        pre_acts.append(z)
        if act == "relu":
            a = relu(z)
        elif act == "tanh":
            a = np.tanh(z)
        else:
            a = z
        if dropout > 0.0 and i < last:
            mask = (rng.random(a.shape) >= dropout) / (1.0 - dropout)
            a = a * mask
            masks.append(mask)
        else:
            masks.append(None)
        acts.append(a)
    return a, (pre_acts, acts, masks)


def backward(net: Net, cache, d_out: np.ndarray):
    """Gradients of all weights/biases given d(loss)/d(output activation)."""
    pre_acts, acts, masks = cache
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    delta = d_out
    for i in range(len(net.weights) - 1, -1, -1):
        if masks[i] is not None:
            delta = delta * masks[i]
        act = net.activations[i]
        if act == "relu":
            delta = delta * (pre_acts[i] > 0.0)
        elif act == "tanh":
            delta = delta * (1.0 - np.tanh(pre_acts[i]) ** 2)
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ net.weights[i].T
    return grads_w, grads_b


def cross_entropy_loss(logits: np.ndarray, class_idx: np.ndarray):
    """Mean softmax cross-entropy; returns (loss, d_logits)."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_z - shifted[np.arange(n), class_idx]))
    probs = softmax(logits)
    d_logits = probs.copy()
    d_logits[np.arange(n), class_idx] -= 1.0
    return loss, d_logits / n


def mse_loss(outputs: np.ndarray, targets: np.ndarray):
    """Mean squared error over batch and dimensions; returns (loss, d_outputs)."""
    diff = outputs - targets
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


@dataclass
class AdamState:
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    t: int = 0

    @classmethod
    def for_net(cls, net: Net) -> "AdamState":
        return cls(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
            [np.zeros_like(b) for b in net.biases],
        )


def adam_step(
    net: Net,
    grads_w,
    grads_b,
    state: AdamState,
    learning_rate: float,
    beta1: float,
    beta2: float,
    epsilon: float,
) -> None:
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for i in range(len(net.weights)):
        for param, grad, m, v in (
            (net.weights[i], grads_w[i], state.m_w[i], state.v_w[i]),
            (net.biases[i], grads_b[i], state.m_b[i], state.v_b[i]),
        ):
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            param -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + epsilon)


def _loss_of(net: Net, x: np.ndarray, target, kind: str) -> float:
    out, _ = forward(net, x)
    if kind == "cross_entropy":
        return cross_entropy_loss(out, target)[0]
    return mse_loss(out, target)[0]


def analytic_gradients(net: Net, x: np.ndarray, target, kind: str):
    out, cache = forward(net, x)
    if kind == "cross_entropy":
        _, d_out = cross_entropy_loss(out, target)
    else:
        _, d_out = mse_loss(out, target)
    return backward(net, cache, d_out)


def gradient_check(net: Net, x, target, kind: str = "cross_entropy", h: float = 1e-5):
    """Max relative error between analytic and central-difference gradients.

    Dropout is disabled. The error metric |a - n| / max(1e-8, |a| + |n|) is
    symmetric in its two arguments.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    grads_w, grads_b = analytic_gradients(net, x, target, kind)
    worst = 0.0
    for params, grads in ((net.weights, grads_w), (net.biases, grads_b)):
        for p, g in zip(params, grads):
            flat = p.reshape(-1)
            g_flat = g.reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                hi = _loss_of(net, x, target, kind)
                flat[idx] = orig - h
                lo = _loss_of(net, x, target, kind)
                flat[idx] = orig
                numeric = (hi - lo) / (2.0 * h)
                err = abs(g_flat[idx] - numeric) / max(
                    1e-8, abs(g_flat[idx]) + abs(numeric)
                )
                worst = max(worst, err)
    return worst


def gradient_norm(net: Net, x, target, kind: str = "cross_entropy") -> float:
    grads_w, grads_b = analytic_gradients(
        net, np.atleast_2d(np.asarray(x, dtype=np.float64)), target, kind
    )
    total = 0.0
    for g in grads_w + grads_b:
        total += float((g * g).sum())
    return np.sqrt(total)
