"""Feature pipeline for the window-based classifier path.

Sliding-window augmentation, cepstral coefficients on a linear/log filterbank,
rank-Gaussian normalization into [-1, 1], and minority oversampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .frames import FRAME_LENGTH, SAMPLE_RATE_HZ, Frame

WINDOW_LENGTH = 256
WINDOW_STRIDE = 16
WINDOW_COUNT = 16
N_FILTERS = 26
N_COEFFS = 20
LINEAR_LOG_SPLIT_HZ = 1000.0
LOG_ENERGY_FLOOR = 1e-10


def sliding_windows(axis_samples) -> np.ndarray:
    """Cut a 512-sample axis into 16 windows of 256 at stride 16.

    Returns a (16, 256) array of copies; offsets are 0, 16, ..., 240.
    """
    x = np.asarray(axis_samples, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != FRAME_LENGTH:
        n = x.shape[0] if x.ndim == 1 else x.shape
        raise ValueError(f"expected {FRAME_LENGTH} samples, got {n}")
    offsets = np.arange(WINDOW_COUNT) * WINDOW_STRIDE
    return np.stack([x[o : o + WINDOW_LENGTH].copy() for o in offsets])


def _warp_hz(f):
    """Frequency warp: identity below the split, logarithmic above it."""
    f = np.asarray(f, dtype=np.float64)
    s = LINEAR_LOG_SPLIT_HZ
    return np.where(f <= s, f, s * (1.0 + np.log(np.maximum(f, s) / s)))


def _unwarp_hz(u):
    u = np.asarray(u, dtype=np.float64)
    s = LINEAR_LOG_SPLIT_HZ
    return np.where(u <= s, u, s * np.exp(u / s - 1.0))


def filterbank(
    sample_rate: float = SAMPLE_RATE_HZ,
    n_fft: int = WINDOW_LENGTH,
    n_filters: int = N_FILTERS,
):
    """Triangular filterbank with centers uniform below 1 kHz, log-spaced above.

    Returns (weights, centers_hz): weights has shape (n_filters, n_fft//2 + 1)
    and unit peaks; centers_hz holds the n_filters peak frequencies.
    """
    nyquist = sample_rate / 2.0
    points = _unwarp_hz(np.linspace(0.0, float(_warp_hz(nyquist)), n_filters + 2))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)

    weights = np.zeros((n_filters, freqs.shape[0]))
    for j in range(n_filters):
        left, center, right = points[j], points[j + 1], points[j + 2]
        rising = (freqs - left) / (center - left)
        falling = (right - freqs) / (right - center)
        weights[j] = np.clip(np.minimum(rising, falling), 0.0, None)
    return weights, points[1:-1]


def _dct_ii_ortho_matrix(n_out: int, n_in: int) -> np.ndarray:
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.cos(np.pi * (2 * n + 1) * k / (2 * n_in))
    mat *= np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


_FILTER_WEIGHTS, FILTER_CENTERS_HZ = filterbank()
_DCT = _dct_ii_ortho_matrix(N_COEFFS, N_FILTERS)
_HANN = np.hanning(WINDOW_LENGTH)


def mfcc_batch(windows: np.ndarray) -> np.ndarray:
    """Cepstral coefficients for a (n, 256) batch of windows; returns (n, 20).

    Per window: mean removal, Hann taper, 256-point real FFT power spectrum,
    26 triangular filter energies floored at 1e-10, natural log, orthonormal
    DCT-II truncated to 20 coefficients.
    """
    w = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    if w.shape[1] != WINDOW_LENGTH:
        raise ValueError(f"expected {WINDOW_LENGTH}-sample windows, got {w.shape[1]}")
    if not np.all(np.isfinite(w)):
        raise ValueError("window contains non-finite samples")
    w = (w - w.mean(axis=1, keepdims=True)) * _HANN
    power = np.abs(np.fft.rfft(w, axis=1)) ** 2
    energies = np.maximum(power @ _FILTER_WEIGHTS.T, LOG_ENERGY_FLOOR)
    return np.log(energies) @ _DCT.T


def mfcc(window) -> np.ndarray:
    """20 cepstral coefficients for one 256-sample window."""
    return mfcc_batch(np.asarray(window)[None, :])[0]


def frame_features(frame: Frame) -> np.ndarray:
    """All window features of one frame: (48, 20), axis-major (x, y, z)."""
    windows = np.concatenate(
        [sliding_windows(frame.x), sliding_windows(frame.y), sliding_windows(frame.z)]
    )
    return mfcc_batch(windows)


def dataset_features(frames):
    """Stacked window features and labels for a frame sequence.

    Returns (features, labels, frame_slices): features is (48 * n, 20), labels
    repeats each frame label 48 times (-1 for unlabeled), frame_slices maps
    frame index -> slice into the feature rows.
    """
    feats = []
    labels = []
    slices = []
    row = 0
    for f in frames:
        x = frame_features(f)
        feats.append(x)
        labels.append(np.full(x.shape[0], -1 if f.label is None else f.label))
        slices.append(slice(row, row + x.shape[0]))
        row += x.shape[0]
    if not feats:
        return np.empty((0, N_COEFFS)), np.empty(0, dtype=int), []
    return np.concatenate(feats), np.concatenate(labels).astype(int), slices


@dataclass(frozen=True)
class GaussianNormalizer:
    """Per-coefficient rank-CDF -> probit map, clipped to +-3 sigma, scaled to [-1, 1].

    `reference` holds the sorted training values, one column per coefficient.
    The midrank CDF sends the training median to 0 and values outside the
    training range saturate at -1 or +1.
    """

    reference: np.ndarray

    def __post_init__(self):
        ref = np.asarray(self.reference, dtype=np.float64)
        if ref.ndim != 2 or ref.shape[0] < 2:
            raise ValueError("normalizer needs at least 2 training vectors")
        ref = np.sort(ref, axis=0)
        ref.flags.writeable = False
        object.__setattr__(self, "reference", ref)

    @classmethod
    def fit(cls, features: np.ndarray) -> "GaussianNormalizer":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 2:
            raise ValueError("normalizer needs at least 2 training vectors")
        return cls(features.copy())

    def apply(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        squeeze = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.reference.shape[1]:
            raise ValueError(
                f"expected {self.reference.shape[1]} coefficients, got {x.shape[1]}"
            )
        n = self.reference.shape[0]
        out = np.empty_like(x)
        with np.errstate(divide="ignore"):  # ndtri(0) / ndtri(1) are +-inf pre-clip
            for j in range(x.shape[1]):
                left = np.searchsorted(self.reference[:, j], x[:, j], side="left")
                right = np.searchsorted(self.reference[:, j], x[:, j], side="right")
                cdf = (left + 0.5 * (right - left)) / n
                out[:, j] = np.clip(ndtri(cdf), -3.0, 3.0) / 3.0
        return out[0] if squeeze else out

    def to_dict(self) -> dict:
        return {"reference": self.reference.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianNormalizer":
        return cls(np.asarray(d["reference"], dtype=np.float64))


def smote(features: np.ndarray, labels: np.ndarray, k: int = 5, seed: int = 0):
    """Oversample every class up to the majority count by neighbor interpolation.

    Each synthetic point is x + u * (nn - x) with u ~ Uniform(0, 1) and nn one
    of x's k nearest same-class neighbors (k capped at class size - 1).
    Originals are returned first, synthetics appended class by class; balanced
    input is returned unchanged.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels length mismatch")
    classes, counts = np.unique(labels, return_counts=True)
    target = counts.max()
    if np.all(counts == target):
        return features, labels

    rng = np.random.default_rng(seed)
    new_feats = [features]
    new_labels = [labels]
    for cls_id, count in zip(classes, counts):
        need = int(target - count)
        if need == 0:
            continue
        if count < 2:
            raise ValueError(
                f"class {cls_id} has {count} sample(s); oversampling needs at least 2"
            )
        pts = features[labels == cls_id]
        kk = min(k, count - 1)
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        neighbors = np.argsort(d2, axis=1, kind="stable")[:, :kk]

        synth = np.empty((need, features.shape[1]))
        for i in range(need):
            base = rng.integers(count)
            nn = pts[neighbors[base, rng.integers(kk)]]
            u = rng.random()
            synth[i] = pts[base] + u * (nn - pts[base])
        new_feats.append(synth)
        new_labels.append(np.full(need, cls_id, dtype=int))

    return np.concatenate(new_feats), np.concatenate(new_labels)
