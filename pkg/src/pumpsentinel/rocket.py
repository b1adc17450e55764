"""Random convolutional kernel transform with a cross-validated ridge classifier.

Kernels are drawn once from a fixed distribution and regenerated from their
seed when a model is reloaded; only the ridge weights are serialized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import apply_kernels
from .frames import ALL_CLASSES, FRAME_LENGTH, Frame
from .nnet import softmax

KERNEL_LENGTHS = (7, 9, 11)
DEFAULT_N_KERNELS = 1000
DEFAULT_LAMBDA_GRID = tuple(10.0**k for k in range(-3, 4))
STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Kernel:
    """One random convolution kernel."""

    length: int
    weights: np.ndarray
    bias: float
    dilation: int
    padding: bool

    def __post_init__(self):
        if self.length not in KERNEL_LENGTHS:
            raise ValueError(f"kernel length must be one of {KERNEL_LENGTHS}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.length,):
            raise ValueError("weights shape does not match length")
        if abs(w.sum()) > 1e-12:
            raise ValueError("kernel weights must sum to 0 within 1e-12")
        object.__setattr__(self, "weights", w)

    @property
    def pad_amount(self) -> int:
        return ((self.length - 1) * self.dilation) // 2 if self.padding else 0

    def receptive_field(self) -> int:
        return (self.length - 1) * self.dilation + 1


def generate_kernels(n: int, input_len: int = FRAME_LENGTH, seed: int = 0) -> list:
    """Draw n kernels: length uniform over {7, 9, 11}, N(0,1) mean-centered
    weights, bias ~ U(-1, 1), dilation 2^a with a uniform over the admissible
    integer exponents, and a fair-coin half-receptive-field zero padding."""
    if n < 1:
        raise ValueError("need at least one kernel")
    rng = np.random.default_rng(seed)
    kernels = []
    for _ in range(n):
        length = KERNEL_LENGTHS[rng.integers(len(KERNEL_LENGTHS))]
        w = rng.standard_normal(length)
        w -= w.mean()
        bias = rng.uniform(-1.0, 1.0)
        max_exp = int(math.floor(math.log2((input_len - 1) / (length - 1))))
        dilation = int(2 ** rng.integers(max_exp + 1))
        padding = bool(rng.integers(2))
        kernels.append(Kernel(length, w, float(bias), dilation, padding))
    return kernels


def pack_kernels(kernels) -> dict:
    """Flat arrays for the transform backends."""
    return {
        "weights": np.concatenate([k.weights for k in kernels]),
        "lengths": np.array([k.length for k in kernels], dtype=np.int64),
        "biases": np.array([k.bias for k in kernels], dtype=np.float64),
        "dilations": np.array([k.dilation for k in kernels], dtype=np.int64),
        "paddings": np.array([k.pad_amount for k in kernels], dtype=np.int64),
    }


def _check_kernels(kernels, input_len: int) -> None:
    for i, k in enumerate(kernels):
        if k.receptive_field() > input_len + 2 * k.pad_amount:
            raise ValueError(
                f"kernel {i}: receptive field {k.receptive_field()} exceeds "
                f"padded length {input_len + 2 * k.pad_amount}"
            )


def transform_frames(frames, kernels, packed=None) -> np.ndarray:
    """Pooled kernel features for a frame sequence.

    Per axis (x, y, z) and kernel, a dilated 1-d convolution over the 512
    samples pooled to PPV (fraction of outputs > 0) and max. Output is
    (n_frames, 6 * n_kernels) in axis-major, kernel-minor, ppv-then-max order.
    """
    frames = list(frames)
    _check_kernels(kernels, FRAME_LENGTH)
    p = packed if packed is not None else pack_kernels(kernels)
    blocks = []
    for axis in ("x", "y", "z"):
        x = np.stack([getattr(f, axis) for f in frames]) if frames else np.empty((0, FRAME_LENGTH))
        blocks.append(
            apply_kernels(
                np.ascontiguousarray(x),
                p["weights"], p["lengths"], p["biases"],
                p["dilations"], p["paddings"],
            )
        )
    return np.hstack(blocks)


def transform(frame: Frame, kernels) -> np.ndarray:
    """Feature vector for a single frame, shape (6 * n_kernels,)."""
    return transform_frames([frame], kernels)[0]


@dataclass
class RidgeModel:
    """One-vs-rest ridge classifier over standardized pooled features."""

    weights: np.ndarray  # (n_kept_features, 6)
    intercepts: np.ndarray  # (6,)
    mean: np.ndarray
    std: np.ndarray
    kept: np.ndarray  # bool mask over raw feature columns
    lmbda: float

    def decision_values(self, features: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != self.kept.shape[0]:
            raise ValueError(
                f"expected {self.kept.shape[0]} features, got {x.shape[1]}"
            )
        xs = (x[:, self.kept] - self.mean) / self.std
        return xs @ self.weights + self.intercepts

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercepts": self.intercepts.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "kept": self.kept.astype(int).tolist(),
            "lmbda": self.lmbda,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RidgeModel":
        return cls(
            np.asarray(d["weights"], dtype=np.float64),
            np.asarray(d["intercepts"], dtype=np.float64),
            np.asarray(d["mean"], dtype=np.float64),
            np.asarray(d["std"], dtype=np.float64),
            np.asarray(d["kept"], dtype=bool),
            float(d["lmbda"]),
        )


class _RidgeSolver:
    """Closed-form ridge (X^T X + lambda I) beta = X^T Y, reusing one
    eigendecomposition across the whole lambda grid.

    Uses the Gram-matrix (dual) form when there are fewer samples than
    features; both forms evaluate the same closed-form solution.
    """

    def __init__(self, xs: np.ndarray, y: np.ndarray):
        self.xs = xs
        self.y_mean = y.mean(axis=0)
        yc = y - self.y_mean
        n, d = xs.shape
        self.dual = d > n
        if self.dual:
            evals, evecs = np.linalg.eigh(xs @ xs.T)
            self.evals, self.evecs = evals, evecs
            self.uty = evecs.T @ yc
        else:
            evals, evecs = np.linalg.eigh(xs.T @ xs)
            self.evals, self.evecs = evals, evecs
            self.vtxty = evecs.T @ (xs.T @ yc)

    def solve(self, lmbda: float):
        if self.dual:
            alpha = self.evecs @ (self.uty / (self.evals + lmbda)[:, None])
            w = self.xs.T @ alpha
        else:
            w = self.evecs @ (self.vtxty / (self.evals + lmbda)[:, None])
        return w, self.y_mean


def _one_vs_rest_targets(labels: np.ndarray) -> np.ndarray:
    y = -np.ones((labels.shape[0], len(ALL_CLASSES)))
    for j, cls_id in enumerate(ALL_CLASSES):
        y[labels == cls_id, j] = 1.0
    return y


def _stratified_folds(labels: np.ndarray, folds: int, rng):
    assignment = np.empty(labels.shape[0], dtype=int)
    for cls_id in np.unique(labels):
        idx = np.flatnonzero(labels == cls_id)
        order = rng.permutation(len(idx))
        assignment[idx[order]] = np.arange(len(idx)) % folds
    return assignment


def ridge_cv_fit(
    features: np.ndarray,
    labels: np.ndarray,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    folds: int = 5,
    seed: int = 0,
) -> RidgeModel:
    """Fit the one-vs-rest ridge classifier with lambda chosen by CV accuracy.

    Features are standardized with training mean/std (std floored at 1e-8);
    all-constant columns are dropped with a warning. Accuracy ties on the
    lambda grid resolve toward the stronger regularizer; the winner is refit
    on all data.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < folds:
        lacking = classes[counts.argmin()]
        raise ValueError(
            f"class {lacking} has {counts.min()} samples; need >= {folds} per class"
        )

    std_raw = features.std(axis=0)
    kept = std_raw > 0.0
    if not np.all(kept):
        dropped = np.flatnonzero(~kept)
        warnings.warn(
            f"dropping {dropped.size} constant feature column(s): "
            f"{dropped[:10].tolist()}{'...' if dropped.size > 10 else ''}"
        )
    mean = features[:, kept].mean(axis=0)
    std = np.maximum(features[:, kept].std(axis=0), STD_FLOOR)
    xs = (features[:, kept] - mean) / std
    y = _one_vs_rest_targets(labels)

    rng = np.random.default_rng(seed)
    fold_of = _stratified_folds(labels, folds, rng)
    lambdas = sorted(lambda_grid)
    correct = np.zeros(len(lambdas))
    for fold in range(folds):
        train = fold_of != fold
        val = ~train
        solver = _RidgeSolver(xs[train], y[train])
        for li, lmbda in enumerate(lambdas):
            w, y_mean = solver.solve(lmbda)
            decisions = xs[val] @ w + y_mean
            pred = np.asarray(ALL_CLASSES)[decisions.argmax(axis=1)]
            correct[li] += (pred == labels[val]).sum()

    best = 0
    for li in range(len(lambdas)):
        if correct[li] >= correct[best]:
            best = li  # ties resolve toward the larger lambda
    lmbda = lambdas[best]

    w, y_mean = _RidgeSolver(xs, y).solve(lmbda)
    return RidgeModel(w, y_mean, mean, std, kept, float(lmbda))


def predict_proba_rocket(model: RidgeModel, features) -> np.ndarray:
    """Softmax over the six one-vs-rest decision values."""
    x = np.asarray(features, dtype=np.float64)
    squeeze = x.ndim == 1
    probs = softmax(model.decision_values(x))
    return probs[0] if squeeze else probs
