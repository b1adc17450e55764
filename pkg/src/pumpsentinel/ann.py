"""Window-feature classifier: 20-64-64-6 relu network trained with Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import nnet
from .features import smote
from .frames import ALL_CLASSES

ANN_LAYER_SIZES = (20, 64, 64, 6)
ANN_ACTIVATIONS = ("relu", "relu", "linear")
VALIDATION_FRACTION = 0.1


@dataclass(frozen=True)
class AdamConfig:
    """Adam optimizer and training-loop settings."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 16
    dropout: float = 0.4
    max_epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")


@dataclass
class TrainReport:
    train_losses: list
    val_losses: list
    best_epoch: int


def _stratified_holdout(labels: np.ndarray, fraction: float, rng):
    """Indices for (train, validation); per class floor(fraction * n) go to val."""
    val_idx = []
    for cls_id in np.unique(labels):
        idx = np.flatnonzero(labels == cls_id)
        n_val = math.floor(len(idx) * fraction)
        order = rng.permutation(len(idx))
        val_idx.extend(idx[order[:n_val]])
    val_mask = np.zeros(labels.shape[0], dtype=bool)
    val_mask[val_idx] = True
    return np.flatnonzero(~val_mask), np.flatnonzero(val_mask)


def train_ann(features: np.ndarray, labels: np.ndarray, cfg: AdamConfig, smote_k=None):
    """Train the classifier; returns (net, TrainReport).

    Cross-entropy with inverted dropout on the hidden layers, per-epoch seeded
    shuffles, a 10% stratified validation holdout used to keep the
    best-validation-epoch weights, and a hard stop at `cfg.max_epochs`. When
    `smote_k` is set, the training portion (never the holdout) is oversampled
    to class balance first. Deterministic given (data, cfg.seed).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if features.ndim != 2 or features.shape[1] != ANN_LAYER_SIZES[0]:
        raise ValueError(f"expected (n, {ANN_LAYER_SIZES[0]}) features")
    if features.shape[0] == 0:
        raise ValueError("training set is empty")
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels length mismatch")
    for lab in np.unique(labels):
        if lab not in ALL_CLASSES:
            raise ValueError(f"class label must be in 1..6, got {lab}")

    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = _stratified_holdout(labels, VALIDATION_FRACTION, rng)
    x_train, y_train = features[train_idx], labels[train_idx]
    if val_idx.size > 0:
        x_val, y_val = features[val_idx], labels[val_idx]
    else:
        # data too small for a holdout: checkpoint on training loss instead
        x_val, y_val = x_train, y_train

    if smote_k is not None:
        x_train, y_train = smote(
            x_train, y_train, k=smote_k, seed=int(rng.integers(2**63))
        )

    net = nnet.init_net(ANN_LAYER_SIZES, ANN_ACTIVATIONS, rng)
    state = nnet.AdamState.for_net(net)
    y_train_idx = y_train - 1
    y_val_idx = y_val - 1

    n = x_train.shape[0]
    train_losses, val_losses = [], []
    best_loss, best_epoch, best_net = np.inf, -1, net.copy()
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            out, cache = nnet.forward(net, x_train[batch], cfg.dropout, rng)
            loss, d_out = nnet.cross_entropy_loss(out, y_train_idx[batch])
            if not np.isfinite(loss):
                raise ValueError(
                    f"non-finite loss at epoch {epoch} batch {start // cfg.batch_size}"
                )
            grads_w, grads_b = nnet.backward(net, cache, d_out)
            nnet.adam_step(
                net, grads_w, grads_b, state,
                cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
            )
            epoch_loss += loss * len(batch)
        train_losses.append(epoch_loss / n)

        val_out, _ = nnet.forward(net, x_val)
        val_loss, _ = nnet.cross_entropy_loss(val_out, y_val_idx)
        val_losses.append(val_loss)
        if val_loss < best_loss:
            best_loss, best_epoch, best_net = val_loss, epoch, net.copy()

    return best_net, TrainReport(train_losses, val_losses, best_epoch)


def predict_proba(net: nnet.Net, features) -> np.ndarray:
    """Class probabilities for one 20-vector or an (n, 20) batch; dropout off."""
    x = np.asarray(features, dtype=np.float64)
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != net.layer_sizes[0]:
        raise ValueError(f"expected {net.layer_sizes[0]} inputs, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature values")
    logits, _ = nnet.forward(net, x)
    probs = nnet.softmax(logits)
    return probs[0] if squeeze else probs


def frame_proba(net: nnet.Net, window_features) -> np.ndarray:
    """Mean of the window probabilities, renormalized to sum 1."""
    window_features = np.atleast_2d(np.asarray(window_features, dtype=np.float64))
    if window_features.shape[0] == 0:
        raise ValueError("no window features given")
    probs = predict_proba(net, window_features).mean(axis=0)
    return probs / probs.sum()


def gradient_check(net: nnet.Net, features, labels) -> float:
    """Finite-difference check of the cross-entropy gradients (dropout off)."""
    labels = np.asarray(labels, dtype=int)
    return nnet.gradient_check(net, features, labels - 1, kind="cross_entropy")
