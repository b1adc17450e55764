"""Robust, transferable anomaly classification for triaxial pump vibration.

Pipeline: virtual sensor alignment -> classifier (window-feature network or
random-kernel ridge) -> probability smoothing -> healthy-data autoencoder ->
detector/classifier voting.
"""

from ._backend import backend_name
from .alignment import Rotation, apply_rotation, estimate_world_frame, kabsch
from .bundle import BUNDLE_VERSION, ModelBundle, VariantFlags, load_bundle, save_bundle
from .frames import (
    ANOMALY_CLASSES,
    FRAME_LENGTH,
    HEALTHY_CLASSES,
    SAMPLE_RATE_HZ,
    Dataset,
    Frame,
    load_jsonl,
    save_jsonl,
    stratified_split,
)
from .pipeline import Pipeline, train_bundle
from .synth import SynthConfig, generate_series, simulate_frame

__version__ = "0.1.0"

__all__ = [
    "ANOMALY_CLASSES",
    "BUNDLE_VERSION",
    "Dataset",
    "Frame",
    "FRAME_LENGTH",
    "HEALTHY_CLASSES",
    "ModelBundle",
    "Pipeline",
    "Rotation",
    "SAMPLE_RATE_HZ",
    "SynthConfig",
    "VariantFlags",
    "apply_rotation",
    "backend_name",
    "estimate_world_frame",
    "generate_series",
    "kabsch",
    "load_bundle",
    "load_jsonl",
    "save_bundle",
    "save_jsonl",
    "simulate_frame",
    "stratified_split",
    "train_bundle",
]
