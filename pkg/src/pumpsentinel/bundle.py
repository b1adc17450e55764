"""Serialized model artifacts: one JSON document, bit-exact round trips."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

BUNDLE_VERSION = "pump-sentinel/1"

CLASSIFIER_KINDS = ("ann", "rocket")


@dataclass(frozen=True)
class VariantFlags:
    """Which optional pipeline stages a bundle was trained with."""

    alignment: bool
    smoothing: bool
    autoencoder: bool

    @classmethod
    def from_name(cls, name: str) -> "VariantFlags":
        table = {
            "m": cls(False, False, False),
            "vm": cls(True, False, False),
            "vms": cls(True, True, False),
            "vmsa": cls(True, True, True),
        }
        key = name.lower().replace("+", "")
        if key not in table:
            raise ValueError(f"unknown variant {name!r}; expected one of {list(table)}")
        return table[key]

    @property
    def name(self) -> str:
        if self.autoencoder:
            return "V+M+S+A"
        if self.smoothing and self.alignment:
            return "V+M+S"
        if self.smoothing:
            return "M+S"
        if self.alignment:
            return "V+M"
        return "M"

    def to_dict(self) -> dict:
        return {
            "alignment": self.alignment,
            "smoothing": self.smoothing,
            "autoencoder": self.autoencoder,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariantFlags":
        return cls(bool(d["alignment"]), bool(d["smoothing"]), bool(d["autoencoder"]))


@dataclass
class ModelBundle:
    """Everything needed to serve a trained pipeline.

    Weight matrices are stored as nested row-major lists; the random-kernel
    bank is stored as (seed, count, input_len) and regenerated on load.
    """

    seed: int
    classifier: str
    variant: VariantFlags
    rotation: Optional[np.ndarray]  # 3x3 row-major, None when alignment is off
    ann: Optional[dict]
    rocket: Optional[dict]
    autoencoder: Optional[dict]
    version: str = BUNDLE_VERSION

    def __post_init__(self):
        if self.classifier not in CLASSIFIER_KINDS:
            raise ValueError(f"unknown classifier kind {self.classifier!r}")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "classifier": self.classifier,
            "variant": self.variant.to_dict(),
            "rotation": None if self.rotation is None else np.asarray(self.rotation).tolist(),
            "ann": self.ann,
            "rocket": self.rocket,
            "autoencoder": self.autoencoder,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        version = d.get("version")
        if version != BUNDLE_VERSION:
            raise ValueError(
                f"unsupported bundle version {version!r}; expected {BUNDLE_VERSION!r}"
            )
        rotation = d.get("rotation")
        return cls(
            seed=int(d["seed"]),
            classifier=d["classifier"],
            variant=VariantFlags.from_dict(d["variant"]),
            rotation=None if rotation is None else np.asarray(rotation, dtype=np.float64),
            ann=d.get("ann"),
            rocket=d.get("rocket"),
            autoencoder=d.get("autoencoder"),
            version=version,
        )


def save_bundle(bundle: ModelBundle, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(bundle.to_dict(), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_bundle(path) -> ModelBundle:
    with Path(path).open("r", encoding="utf-8") as fh:
        return ModelBundle.from_dict(json.load(fh))
