"""End-to-end training and prediction paths built from the stage modules."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import ann as ann_mod
from . import detector as det_mod
from . import rocket as rocket_mod
from .alignment import Rotation, align_per_pump, apply_rotation, estimate_per_pump
from .ann import AdamConfig
from .bundle import ModelBundle, VariantFlags
from .features import GaussianNormalizer, dataset_features, frame_features
from .frames import Dataset, Frame
from .nnet import Net
from .postprocess import SmootherState, smooth_step, vote

DEFAULT_SMOTE_K = 5
# a short budget keeps the fold-threshold honest: at the detector module's
# 100-epoch default the network memorizes the ~90 training bursts and the
# mean+std threshold stops transferring to fresh bursts
DEFAULT_AE_CONFIG = replace(det_mod.DEFAULT_AE_CONFIG, max_epochs=4)

# a class run pausing longer than this restarts the smoothing buffer
STREAM_GAP_MS = 5 * 60 * 1000


@dataclass
class AnnModel:
    """Window-feature classifier: normalizer plus the trained network."""

    net: Net
    normalizer: GaussianNormalizer

    def frame_probabilities(self, frames) -> np.ndarray:
        frames = list(frames)
        feats, _, slices = dataset_features(frames)
        if not frames:
            return np.empty((0, 6))
        probs = ann_mod.predict_proba(self.net, self.normalizer.apply(feats))
        out = np.empty((len(frames), 6))
        for i, sl in enumerate(slices):
            mean = probs[sl].mean(axis=0)
            out[i] = mean / mean.sum()
        return out

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict(), "normalizer": self.normalizer.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "AnnModel":
        return cls(Net.from_dict(d["net"]), GaussianNormalizer.from_dict(d["normalizer"]))


@dataclass
class RocketModel:
    """Random-kernel transform plus ridge head; kernels regenerate from seed."""

    kernel_seed: int
    n_kernels: int
    input_len: int
    ridge: rocket_mod.RidgeModel

    def __post_init__(self):
        self._kernels = rocket_mod.generate_kernels(
            self.n_kernels, self.input_len, self.kernel_seed
        )
        self._packed = rocket_mod.pack_kernels(self._kernels)

    def frame_probabilities(self, frames) -> np.ndarray:
        frames = list(frames)
        if not frames:
            return np.empty((0, 6))
        feats = rocket_mod.transform_frames(frames, self._kernels, self._packed)
        return rocket_mod.predict_proba_rocket(self.ridge, feats)

    def to_dict(self) -> dict:
        return {
            "kernel_seed": self.kernel_seed,
            "n_kernels": self.n_kernels,
            "input_len": self.input_len,
            "ridge": self.ridge.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RocketModel":
        return cls(
            int(d["kernel_seed"]),
            int(d["n_kernels"]),
            int(d["input_len"]),
            rocket_mod.RidgeModel.from_dict(d["ridge"]),
        )


@dataclass
class DetectorModel:
    """Autoencoder, input scaling, and the fitted anomaly threshold."""

    autoencoder: det_mod.AutoencoderModel
    threshold: det_mod.AnomalyThreshold

    def flags(self, frames) -> list:
        return det_mod.detect_batch(self.autoencoder, self.threshold, frames)

    def flag(self, frame: Frame) -> str:
        return det_mod.detect(self.autoencoder, self.threshold, frame)

    def to_dict(self) -> dict:
        return {
            "autoencoder": self.autoencoder.to_dict(),
            "threshold": self.threshold.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorModel":
        return cls(
            det_mod.AutoencoderModel.from_dict(d["autoencoder"]),
            det_mod.AnomalyThreshold.from_dict(d["threshold"]),
        )


def fit_ann_model(frames, seed: int, config: Optional[AdamConfig] = None,
                  smote_k: int = DEFAULT_SMOTE_K) -> AnnModel:
    """Extract window features, fit the normalizer, train the network."""
    feats, labels, _ = dataset_features(frames)
    if np.any(labels < 0):
        raise ValueError("classifier training requires labeled frames")
    normalizer = GaussianNormalizer.fit(feats)
    cfg = config if config is not None else AdamConfig(seed=seed)
    net, _ = ann_mod.train_ann(normalizer.apply(feats), labels, cfg, smote_k=smote_k)
    return AnnModel(net, normalizer)


def fit_rocket_model(frames, seed: int, n_kernels: int = rocket_mod.DEFAULT_N_KERNELS) -> RocketModel:
    frames = list(frames)
    labels = np.array([f.label if f.label is not None else -1 for f in frames])
    if np.any(labels < 0):
        raise ValueError("classifier training requires labeled frames")
    kernels = rocket_mod.generate_kernels(n_kernels, seed=seed)
    feats = rocket_mod.transform_frames(frames, kernels)
    ridge = rocket_mod.ridge_cv_fit(feats, labels, seed=seed)
    model = RocketModel(seed, n_kernels, 512, ridge)
    return model

def fit_detector_model(healthy_frames, seed: int,
                       config: Optional[AdamConfig] = None) -> DetectorModel:
    """Train the autoencoder on healthy frames; threshold from held-out errors.

    The threshold errors come from two fold models, each scoring the half it
    never saw, so the mean + std threshold reflects out-of-sample behavior.
    The deployed autoencoder is then trained on all frames, which can only
    reconstruct better than the fold models.
    """
    healthy_frames = list(healthy_frames)
    cfg = config if config is not None else replace(DEFAULT_AE_CONFIG, seed=seed)
    fold_a = healthy_frames[0::2]
    fold_b = healthy_frames[1::2]
    if len(fold_a) >= 10 and len(fold_b) >= 10:
        # fold models get half the budget: the deployed model reconstructs
        # strictly better than the threshold reference, never worse
        fold_cfg = replace(cfg, max_epochs=max(1, cfg.max_epochs // 2))
        ae_a = det_mod.train_autoencoder(fold_a, fold_cfg)
        ae_b = det_mod.train_autoencoder(fold_b, fold_cfg)
        errors = np.concatenate(
            [
                det_mod.reconstruction_errors(ae_a, fold_b),
                det_mod.reconstruction_errors(ae_b, fold_a),
            ]
        )
    else:
        errors = None
    ae = det_mod.train_autoencoder(healthy_frames, cfg)
    if errors is None:  # too few frames for folds: fall back to training errors
        errors = det_mod.reconstruction_errors(ae, healthy_frames)
    return DetectorModel(ae, det_mod.fit_threshold(errors))


def train_bundle(
    training_sets,
    classifier: str,
    variant: VariantFlags,
    seed: int,
    n_kernels: int = rocket_mod.DEFAULT_N_KERNELS,
) -> ModelBundle:
    """Run the configured pipeline over one or more training datasets.

    With alignment on, a rotation is estimated per training pump from its own
    frames; the bundle stores the primary (first) pump's rotation for serving.
    The detector trains on the primary pump's healthy frames only, since it is
    an asset-specific model.
    """
    training_sets = list(training_sets)
    if not training_sets:
        raise ValueError("no training datasets given")
    frames = [f for ds in training_sets for f in ds]
    merged = Dataset(tuple(frames), "+".join(ds.provenance for ds in training_sets))
    primary_pump = merged[0].pump_id

    rotation = None
    if variant.alignment:
        rotations = estimate_per_pump(merged)
        merged = align_per_pump(merged, rotations)
        rotation = rotations[primary_pump].m

    ann_payload = None
    rocket_payload = None
    if classifier == "ann":
        ann_payload = fit_ann_model(merged, seed).to_dict()
    elif classifier == "rocket":
        rocket_payload = fit_rocket_model(merged, seed, n_kernels).to_dict()
    else:
        raise ValueError(f"unknown classifier kind {classifier!r}")

    ae_payload = None
    if variant.autoencoder:
        healthy = [f for f in frames if f.pump_id == primary_pump and f.label in {1, 2, 6}]
        if not healthy:
            raise ValueError(
                "variant with autoencoder requires healthy-labeled frames of the primary pump"
            )
        ae_payload = fit_detector_model(healthy, seed).to_dict()

    return ModelBundle(
        seed=seed,
        classifier=classifier,
        variant=variant,
        rotation=rotation,
        ann=ann_payload,
        rocket=rocket_payload,
        autoencoder=ae_payload,
    )


@dataclass
class PredictionResult:
    raw: np.ndarray
    smoothed: np.ndarray
    classifier_class: int
    ae_flag: Optional[str]
    final_class: int


class Pipeline:
    """Prediction-side pipeline reconstructed from a bundle."""

    def __init__(self, bundle: ModelBundle):
        self.bundle = bundle
        self.variant = bundle.variant
        self.rotation = (
            None if bundle.rotation is None else Rotation(np.asarray(bundle.rotation))
        )
        if bundle.classifier == "ann":
            self.model = AnnModel.from_dict(bundle.ann)
        else:
            self.model = RocketModel.from_dict(bundle.rocket)
        self.detector = (
            DetectorModel.from_dict(bundle.autoencoder) if bundle.autoencoder else None
        )

    def _prepare(self, frame: Frame, rotation: Optional[Rotation]) -> Frame:
        rot = rotation if rotation is not None else self.rotation
        if self.variant.alignment and rot is not None:
            return apply_rotation(frame, rot)
        return frame

    def probabilities(self, frames, rotation: Optional[Rotation] = None) -> np.ndarray:
        """Raw per-frame class probabilities, aligned first when configured."""
        prepared = [self._prepare(f, rotation) for f in frames]
        return self.model.frame_probabilities(prepared)

    def predict_step(
        self,
        frame: Frame,
        state: SmootherState,
        rotation: Optional[Rotation] = None,
    ):
        """One streaming prediction; returns (new_state, PredictionResult)."""
        raw = self.probabilities([frame], rotation)[0]
        if self.variant.smoothing:
            state, smoothed = smooth_step(state, raw)
        else:
            smoothed = raw
        classifier_class = int(np.argmax(smoothed)) + 1
        ae_flag = None
        final = classifier_class
        if self.detector is not None and self.variant.autoencoder:
            ae_flag = self.detector.flag(frame)
            final = vote(smoothed, ae_flag)
        return state, PredictionResult(raw, smoothed, classifier_class, ae_flag, final)
