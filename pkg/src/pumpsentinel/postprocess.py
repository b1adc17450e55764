"""Probability smoothing and classifier/detector voting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import FLAG_ANOMALY, FLAG_HEALTHY
from .frames import ANOMALY_CLASSES, HEALTHY_CLASSES

SMOOTHING_WINDOW = 15
PROBABILITY_TOL = 1e-6

_HEALTHY_IDS = sorted(HEALTHY_CLASSES)  # [1, 2, 6]
_ANOMALY_IDS = sorted(ANOMALY_CLASSES)  # [3, 4, 5]


def _check_probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (6,):
        raise ValueError(f"expected 6 probabilities, got shape {p.shape}")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > PROBABILITY_TOL:
        raise ValueError("invalid probability vector")
    return p


@dataclass(frozen=True)
class SmootherState:
    """Trailing buffer of up to 15 recent probability vectors."""

    buffer: tuple = ()

    def __len__(self) -> int:
        return len(self.buffer)


def smooth_step(state: SmootherState, probs):
    """Append probs (evicting beyond 15) and return (state, windowed mean).

    The mean of the buffered vectors is renormalized to guard against
    floating-point drift.
    """
    p = _check_probs(probs)
    buf = (state.buffer + (p,))[-SMOOTHING_WINDOW:]
    mean = np.mean(buf, axis=0)
    return SmootherState(buf), mean / mean.sum()


def smooth_series(prob_rows: np.ndarray, reset_before=None) -> np.ndarray:
    """Smooth a whole prediction stream; row i uses the trailing window.

    `reset_before` optionally marks rows where the buffer restarts (e.g. a
    stream gap); row 0 always starts a fresh buffer.
    """
    prob_rows = np.atleast_2d(np.asarray(prob_rows, dtype=np.float64))
    out = np.empty_like(prob_rows)
    state = SmootherState()
    for i in range(prob_rows.shape[0]):
        if reset_before is not None and reset_before[i]:
            state = SmootherState()
        state, out[i] = smooth_step(state, prob_rows[i])
    return out


def _argmax_in(p: np.ndarray, class_ids) -> int:
    # ids are ascending, so the first maximum is the smallest class id
    best = class_ids[0]
    for cid in class_ids[1:]:
        if p[cid - 1] > p[best - 1]:
            best = cid
    return best


def vote(probs, ae_flag: str) -> int:
    """Final class: the detector overrules the classifier's healthy/anomaly group.

    If the flag contradicts the argmax group, the argmax is re-taken inside
    the detector's group; ties resolve to the smallest class id.
    """
    p = _check_probs(probs)
    if ae_flag not in (FLAG_HEALTHY, FLAG_ANOMALY):
        raise ValueError(f"unknown detector flag {ae_flag!r}")
    top = _argmax_in(p, [1, 2, 3, 4, 5, 6])
    if ae_flag == FLAG_ANOMALY and top in HEALTHY_CLASSES:
        return _argmax_in(p, _ANOMALY_IDS)
    if ae_flag == FLAG_HEALTHY and top in ANOMALY_CLASSES:
        return _argmax_in(p, _HEALTHY_IDS)
    return top
