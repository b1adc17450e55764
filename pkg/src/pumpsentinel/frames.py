"""Domain types and JSON-lines I/O for triaxial vibration bursts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

SAMPLE_RATE_HZ = 6644.0
FRAME_LENGTH = 512
AXIS_NAMES = ("x", "y", "z")

HEALTHY_CLASSES = frozenset({1, 2, 6})
ANOMALY_CLASSES = frozenset({3, 4, 5})
ALL_CLASSES = (1, 2, 3, 4, 5, 6)

CLASS_NAMES = {
    1: "normal load",
    2: "partial load",
    3: "dry running",
    4: "hydraulic blockage",
    5: "cavitation",
    6: "idle",
}


def validate_label(label: int) -> int:
    label = int(label)
    if not 1 <= label <= 6:
        raise ValueError(f"class label must be in 1..6, got {label}")
    return label


def is_healthy(label: int) -> bool:
    return validate_label(label) in HEALTHY_CLASSES


def _coerce_axis(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"axis {name}: expected a 1-d array, got shape {arr.shape}")
    if arr.shape[0] != FRAME_LENGTH:
        raise ValueError(f"axis {name}: expected {FRAME_LENGTH}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"axis {name}: non-finite sample")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Frame:
    """One 512-sample, 6644 Hz triaxial acceleration burst.

    Immutable after construction; the axis arrays are read-only views so a
    frame can be shared freely across threads.
    """

    pump_id: str
    timestamp: int  # milliseconds since epoch
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "pump_id", str(self.pump_id))
        object.__setattr__(self, "timestamp", int(self.timestamp))
        for name in AXIS_NAMES:
            object.__setattr__(self, name, _coerce_axis(name, getattr(self, name)))
        if self.label is not None:
            object.__setattr__(self, "label", validate_label(self.label))

    def as_matrix(self) -> np.ndarray:
        """Samples as a (3, 512) array with rows x, y, z."""
        return np.vstack((self.x, self.y, self.z))

    def magnitude(self) -> np.ndarray:
        """Per-sample Euclidean norm sqrt(x^2 + y^2 + z^2), shape (512,)."""
        return np.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def with_samples(self, xyz: np.ndarray) -> "Frame":
        """Copy of this frame with samples replaced by a (3, 512) matrix."""
        return replace(self, x=xyz[0], y=xyz[1], z=xyz[2])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.pump_id == other.pump_id
            and self.timestamp == other.timestamp
            and self.label == other.label
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.z, other.z)
        )

    def to_json_dict(self) -> dict:
        d = {
            "pump_id": self.pump_id,
            "timestamp": self.timestamp,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "z": self.z.tolist(),
        }
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "Frame":
        missing = [k for k in ("pump_id", "timestamp", "x", "y", "z") if k not in d]
        if missing:
            raise ValueError(f"frame object missing fields: {', '.join(missing)}")
        return cls(
            pump_id=d["pump_id"],
            timestamp=d["timestamp"],
            x=d["x"],
            y=d["y"],
            z=d["z"],
            label=d.get("label"),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered collection of frames with a provenance tag."""

    frames: tuple
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        last_ts: dict[str, int] = {}
        for i, f in enumerate(self.frames):
            if not isinstance(f, Frame):
                raise TypeError(f"frame {i}: expected Frame, got {type(f).__name__}")
            prev = last_ts.get(f.pump_id)
            if prev is not None and f.timestamp < prev:
                raise ValueError(
                    f"frame {i}: timestamp {f.timestamp} decreases for pump {f.pump_id}"
                )
            last_ts[f.pump_id] = f.timestamp

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)

    def __getitem__(self, i) -> Frame:
        return self.frames[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.provenance == other.provenance and self.frames == other.frames

    @property
    def labels(self) -> list:
        return [f.label for f in self.frames]

    @property
    def pump_ids(self) -> list:
        return sorted({f.pump_id for f in self.frames})

    def class_counts(self) -> dict:
        counts: dict = {}
        for f in self.frames:
            counts[f.label] = counts.get(f.label, 0) + 1
        return counts

    def filter(self, predicate) -> "Dataset":
        return Dataset(tuple(f for f in self.frames if predicate(f)), self.provenance)

    def healthy_only(self) -> "Dataset":
        return self.filter(lambda f: f.label in HEALTHY_CLASSES)


def save_jsonl(dataset: Dataset, path) -> None:
    """Write one JSON object per frame; floats keep full round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for frame in dataset:
            fh.write(json.dumps(frame.to_json_dict(), separators=(",", ":")))
            fh.write("\n")


def load_jsonl(path, provenance: Optional[str] = None) -> Dataset:
    """Read a JSON-lines dataset file, preserving frame order.

    Raises ValueError with the offending 1-based line number on parse errors
    and re-raises frame-invariant violations with the same prefix.
    """
    path = Path(path)
    frames = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON: {exc}") from exc
            try:
                frames.append(Frame.from_json_dict(obj))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
    return Dataset(tuple(frames), provenance if provenance is not None else path.stem)


def stratified_split(dataset: Dataset, test_fraction: float, seed: int):
    """Split into (train, test) keeping per-class proportions within one frame.

    Per class the test side receives floor(n_class * test_fraction) frames,
    chosen by a seeded shuffle; original frame order is preserved inside each
    side. Frames without a label form their own stratum.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_class: dict = {}
    for i, f in enumerate(dataset):
        by_class.setdefault(f.label, []).append(i)

    rng = np.random.default_rng(seed)
    test_idx: set = set()
    for label in sorted(by_class, key=lambda c: (c is None, c)):
        idx = by_class[label]
        if len(idx) < 2:
            name = "unlabeled" if label is None else f"class {label}"
            raise ValueError(f"{name} has a single frame; cannot split")
        n_test = math.floor(len(idx) * test_fraction)
        order = rng.permutation(len(idx))
        test_idx.update(idx[j] for j in order[:n_test])

    train_frames = tuple(f for i, f in enumerate(dataset) if i not in test_idx)
    test_frames = tuple(f for i, f in enumerate(dataset) if i in test_idx)
    prov = dataset.provenance
    return (
        Dataset(train_frames, f"{prov}/train" if prov else "train"),
        Dataset(test_frames, f"{prov}/test" if prov else "test"),
    )
