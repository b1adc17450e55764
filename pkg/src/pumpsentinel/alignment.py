"""Virtual sensor alignment: estimate and undo the sensor mounting rotation.

The world frame is anchored to two directions every accelerometer can observe
on its own: the gravity axis (mapped to world +z) and the dominant vibration
axis (mapped to world +x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import Dataset, Frame

ORTHONORMALITY_TOL = 1e-9
DEGENERACY_TOL = 1e-9
SKEWNESS_TIE_TOL = 1e-6


class DegenerateGeometryError(ValueError):
    """Raised when a rotation is unidentifiable from the given data."""


@dataclass(frozen=True)
class Rotation:
    """Proper orthonormal 3x3 matrix (no reflection)."""

    m: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.m, dtype=np.float64))
        if m.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("rotation has non-finite entries")
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHONORMALITY_TOL:
            raise ValueError("matrix is not orthonormal within 1e-9")
        if abs(np.linalg.det(m) - 1.0) > ORTHONORMALITY_TOL:
            raise ValueError("matrix is not a proper rotation (det != +1)")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float) -> "Rotation":
        """Rodrigues rotation about `axis` by `angle_rad`."""
        a = np.asarray(axis, dtype=np.float64)
        n = np.linalg.norm(a)
        if n == 0.0:
            raise ValueError("axis must be non-zero")
        a = a / n
        k = np.array(
            [[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]]
        )
        m = np.eye(3) + np.sin(angle_rad) * k + (1.0 - np.cos(angle_rad)) * (k @ k)
        return cls(m)

    def transpose(self) -> "Rotation":
        return Rotation(self.m.T.copy())

    def compose(self, other: "Rotation") -> "Rotation":
        """Rotation equal to applying `other` first, then this one."""
        return Rotation(self.m @ other.m)


@dataclass(frozen=True)
class PointCorrespondences:
    """Paired direction vectors: sensor-frame s_i matched with world-frame w_i."""

    sensor: np.ndarray
    world: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sensor, dtype=np.float64))
        w = np.atleast_2d(np.asarray(self.world, dtype=np.float64))
        if s.shape != w.shape or s.ndim != 2 or s.shape[1] != 3:
            raise ValueError(
                f"correspondences must be matching (n, 3) arrays, got {s.shape} / {w.shape}"
            )
        if s.shape[0] < 2:
            raise ValueError("need at least 2 correspondence pairs")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(w))):
            raise ValueError("correspondences contain non-finite values")
        object.__setattr__(self, "sensor", s)
        object.__setattr__(self, "world", w)


def kabsch(corr: PointCorrespondences) -> Rotation:
    """Proper rotation C minimizing sum_i ||s_i - C w_i||^2.

    Solved from the SVD of the cross-covariance H = sum_i w_i s_i^T with the
    standard determinant sign correction, so reflections are never returned.
    Degenerate point sets (all w_i or s_i collinear) leave the rotation about
    the common axis free and raise DegenerateGeometryError.
    """
    s, w = corr.sensor, corr.world
    h = w.T @ s
    u, sig, vt = np.linalg.svd(h)
    scale = max(sig[0], 1.0)
    if sig[1] <= DEGENERACY_TOL * scale:
        raise DegenerateGeometryError(
            "correspondence directions are collinear; rotation is unidentifiable"
        )
    d = np.sign(np.linalg.det(vt.T @ u.T))
    c = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return Rotation(c)


def _first_nonzero_sign(v: np.ndarray) -> float:
    for x in v:
        if x != 0.0:
            return 1.0 if x > 0.0 else -1.0
    return 1.0


def estimate_world_frame(calibration: Dataset) -> Rotation:
    """Estimate the sensor-to-world rotation from unlabeled calibration frames.

    Gravity axis: the normalized mean acceleration over all samples, mapped to
    world +z. Dominant vibration axis: the first principal component of the
    mean-removed samples projected orthogonal to gravity, mapped to world +x;
    its sign is fixed by the skewness of the projected series (first-coordinate
    sign as tie-break below 1e-6 absolute skewness). Returns the rotation that
    re-expresses sensor samples in world coordinates.
    """
    if len(calibration) == 0:
        raise ValueError("calibration dataset is empty")
    samples = np.concatenate([f.as_matrix().T for f in calibration], axis=0)

    mean_vec = samples.mean(axis=0)
    g_norm = np.linalg.norm(mean_vec)
    if g_norm <= 1e-12:
        raise DegenerateGeometryError("zero-norm gravity estimate")
    g = mean_vec / g_norm

    centered = samples - mean_vec
    perp = centered - np.outer(centered @ g, g)
    cov = (perp.T @ perp) / perp.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    lead, second = evals[2], evals[1]
    if lead <= 1e-12 or (lead - second) <= DEGENERACY_TOL * lead:
        raise DegenerateGeometryError(
            "vibration energy is isotropic; principal direction unidentifiable"
        )
    p = evecs[:, 2]

    proj = perp @ p
    sigma = proj.std()
    skew = np.mean(proj**3) / sigma**3 if sigma > 0.0 else 0.0
    if abs(skew) >= SKEWNESS_TIE_TOL:
        if skew < 0.0:
            p = -p
    elif _first_nonzero_sign(p) < 0.0:
        p = -p

    q = np.cross(g, p)
    corr = PointCorrespondences(
        sensor=np.vstack((g, p, q)),
        world=np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    )
    # kabsch yields the world->sensor map; its transpose takes samples to world
    return kabsch(corr).transpose()


def apply_rotation(frame: Frame, rotation: Rotation) -> Frame:
    """Rotate every (x, y, z) sample; labels and metadata are untouched."""
    return frame.with_samples(rotation.m @ frame.as_matrix())


def align_dataset(dataset: Dataset, rotation: Rotation) -> Dataset:
    return Dataset(
        tuple(apply_rotation(f, rotation) for f in dataset), dataset.provenance
    )


def estimate_per_pump(dataset: Dataset) -> dict:
    """One rotation per pump_id, each estimated from that pump's frames only."""
    rotations = {}
    for pid in dataset.pump_ids:
        sub = dataset.filter(lambda f: f.pump_id == pid)
        rotations[pid] = estimate_world_frame(sub)
    return rotations


def align_per_pump(dataset: Dataset, rotations: dict) -> Dataset:
    frames = tuple(apply_rotation(f, rotations[f.pump_id]) for f in dataset)
    return Dataset(frames, dataset.provenance)
