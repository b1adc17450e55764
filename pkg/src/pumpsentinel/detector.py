"""Asset-specific anomaly detector: autoencoder over the magnitude signal.

Trained on healthy frames only; the reconstruction error is the anomaly score
and the decision threshold is mean + standard deviation of the training
errors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import nnet
from .ann import AdamConfig
from .frames import HEALTHY_CLASSES, Frame

AE_LAYER_SIZES = (512, 256, 126, 256, 512)
AE_ACTIVATIONS = ("tanh", "tanh", "tanh", "linear")

FLAG_HEALTHY = "healthy"
FLAG_ANOMALY = "anomaly"

DEFAULT_AE_CONFIG = AdamConfig(dropout=0.0, max_epochs=100)


@dataclass(frozen=True)
class AnomalyThreshold:
    """Decision threshold tau = error_mean + error_std (population std)."""

    threshold: float
    error_mean: float
    error_std: float

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "error_mean": self.error_mean,
            "error_std": self.error_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyThreshold":
        return cls(d["threshold"], d["error_mean"], d["error_std"])


@dataclass
class AutoencoderModel:
    """Trained autoencoder plus the scalar input standardization."""

    net: nnet.Net
    input_mean: float
    input_std: float

    def to_dict(self) -> dict:
        return {
            "net": self.net.to_dict(),
            "input_mean": self.input_mean,
            "input_std": self.input_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AutoencoderModel":
        return cls(nnet.Net.from_dict(d["net"]), d["input_mean"], d["input_std"])


def fit_input_scaler(frames) -> tuple:
    """Scalar (mean, std) over all magnitude samples of the training frames."""
    mags = np.concatenate([f.magnitude() for f in frames])
    mean = float(mags.mean())
    std = float(mags.std())
    if std == 0.0:
        raise ValueError("zero standard deviation in training magnitudes")
    return mean, std


def ae_input(frame: Frame, input_mean: float, input_std: float) -> np.ndarray:
    """Standardized magnitude signal, shape (512,); rotation-invariant."""
    if input_std == 0.0:
        raise ValueError("zero training standard deviation")
    return (frame.magnitude() - input_mean) / input_std


def train_autoencoder(frames, cfg: AdamConfig = DEFAULT_AE_CONFIG) -> AutoencoderModel:
    """Train the 512-256-126-256-512 tanh autoencoder on healthy frames.

    MSE loss, Adam, no dropout, best-training-loss checkpoint, hard stop at
    cfg.max_epochs. Frames must all carry a healthy label; anomaly-labeled or
    unlabeled frames are rejected.
    """
    frames = list(frames)
    for f in frames:
        if f.label not in HEALTHY_CLASSES:
            raise ValueError(
                f"autoencoder training requires healthy-labeled frames; got label {f.label}"
            )
    if len(frames) < 10:
        raise ValueError(f"need at least 10 healthy frames, got {len(frames)}")
    if cfg.dropout != 0.0:
        cfg = replace(cfg, dropout=0.0)

    input_mean, input_std = fit_input_scaler(frames)
    x = np.stack([ae_input(f, input_mean, input_std) for f in frames])

    rng = np.random.default_rng(cfg.seed)
    net = nnet.init_net(AE_LAYER_SIZES, AE_ACTIVATIONS, rng)
    state = nnet.AdamState.for_net(net)

    n = x.shape[0]
    best_loss, best_net = np.inf, net.copy()
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = x[order[start : start + cfg.batch_size]]
            out, cache = nnet.forward(net, batch)
            loss, d_out = nnet.mse_loss(out, batch)
            if not np.isfinite(loss):
                raise ValueError(
                    f"non-finite loss at epoch {epoch} batch {start // cfg.batch_size}"
                )
            grads_w, grads_b = nnet.backward(net, cache, d_out)
            nnet.adam_step(
                net, grads_w, grads_b, state,
                cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
            )
            epoch_loss += loss * batch.shape[0]
        epoch_loss /= n
        if epoch_loss < best_loss:
            best_loss, best_net = epoch_loss, net.copy()

    return AutoencoderModel(best_net, input_mean, input_std)


def reconstruction_errors(model: AutoencoderModel, frames) -> np.ndarray:
    """Mean squared reconstruction error per frame."""
    x = np.stack([ae_input(f, model.input_mean, model.input_std) for f in frames])
    out, _ = nnet.forward(model.net, x)
    return np.mean((x - out) ** 2, axis=1)


def reconstruction_error(model: AutoencoderModel, frame: Frame) -> float:
    return float(reconstruction_errors(model, [frame])[0])


def fit_threshold(errors) -> AnomalyThreshold:
    """tau = mean + population standard deviation of the given errors."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size < 2:
        raise ValueError(f"need at least 2 errors, got {errors.size}")
    mean = float(errors.mean())
    std = float(errors.std())  # population std: deterministic for n >= 2
    return AnomalyThreshold(mean + std, mean, std)


def detect(model: AutoencoderModel, threshold: AnomalyThreshold, frame: Frame) -> str:
    """'anomaly' iff the reconstruction error strictly exceeds tau."""
    err = reconstruction_error(model, frame)
    return FLAG_ANOMALY if err > threshold.threshold else FLAG_HEALTHY


def detect_batch(model: AutoencoderModel, threshold: AnomalyThreshold, frames) -> list:
    errs = reconstruction_errors(model, frames)
    return [FLAG_ANOMALY if e > threshold.threshold else FLAG_HEALTHY for e in errs]
