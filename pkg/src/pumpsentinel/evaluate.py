"""Experiment grid: model/classifier/variant accuracy cells plus the summary
statistical comparisons (smoothing, training diversity, detector voting)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import pipeline as pipe
from .alignment import align_per_pump, estimate_per_pump
from .detector import FLAG_ANOMALY
from .frames import ALL_CLASSES, Dataset
from .postprocess import smooth_series, vote
from .stats import TTestResult, accuracy, paired_ttest

MODEL_IDS = ("I", "II")
CLASSIFIERS = ("ann", "rocket")
TEST_SETS = ("T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8")
MAIN_VARIANTS = ("M", "V+M", "V+M+S")
VOTING_TEST_SET = "T1"  # the only set that meets the detector's same-asset criterion

STREAM_GAP_MS = pipe.STREAM_GAP_MS


@dataclass(frozen=True)
class ExperimentResult:
    model_id: str
    classifier: str
    variant: str
    test_set: str
    accuracy: float
    confusion: np.ndarray  # (6, 6): rows true class, columns predicted
    n_frames: int


@dataclass(frozen=True)
class Comparison:
    name: str
    n_pairs: int
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    ttest: TTestResult


@dataclass(frozen=True)
class GridConfig:
    seed: int = 7
    n_kernels: int = 1000
    smote_k: int = 5


@dataclass
class GridResult:
    results: list
    comparisons: list
    smoothing_pairs: list = field(default_factory=list)  # (cell key, raw, smoothed)


def confusion_matrix(predictions, labels) -> np.ndarray:
    conf = np.zeros((6, 6), dtype=int)
    for pred, true in zip(predictions, labels):
        conf[true - 1, pred - 1] += 1
    return conf


def stream_resets(dataset: Dataset) -> np.ndarray:
    """Rows where the smoothing buffer restarts: pump change or a gap > 5 min."""
    resets = np.zeros(len(dataset), dtype=bool)
    prev = None
    for i, f in enumerate(dataset):
        if prev is not None and (
            f.pump_id != prev.pump_id or f.timestamp - prev.timestamp > STREAM_GAP_MS
        ):
            resets[i] = True
        prev = f
    return resets


def _predictions_from_probs(probs: np.ndarray) -> np.ndarray:
    return probs.argmax(axis=1) + 1


def _result(model_id, classifier, variant, name, predictions, labels) -> ExperimentResult:
    conf = confusion_matrix(predictions, labels)
    return ExperimentResult(
        model_id, classifier, variant, name,
        accuracy(predictions, labels), conf, len(labels),
    )


def run_grid(datasets: dict, config: GridConfig = GridConfig()) -> GridResult:
    """Train Model I/II for both classifiers with and without alignment, then
    score every variant cell on T1-T8.

    Smoothing and voting are post-processing over the stored raw probability
    streams, so each (model, classifier, alignment) triple is trained once.
    With alignment on, each test set is re-aligned from its own frames (a new
    installation is calibrated in place); training pumps use their training
    rotations. The detector runs on T1 only and is shared by both classifier
    heads of a model.
    """
    training = {
        "I": [datasets["TrainingSetI"]],
        "II": [datasets["TrainingSetI"], datasets["TrainingSetII"]],
    }
    for name in TEST_SETS:
        if name not in datasets:
            raise ValueError(f"missing dataset {name}")

    # per-test-set alignment, estimated from the test frames themselves
    aligned_tests = {}
    for name in TEST_SETS:
        ds = datasets[name]
        aligned_tests[name] = align_per_pump(ds, estimate_per_pump(ds))

    models = {}
    for model_id in MODEL_IDS:
        frames = [f for ds in training[model_id] for f in ds]
        merged = Dataset(tuple(frames), model_id)
        rotations = estimate_per_pump(merged)
        aligned = align_per_pump(merged, rotations)
        for classifier in CLASSIFIERS:
            for align_flag in (False, True):
                data = aligned if align_flag else merged
                fit_seed = config.seed
                if classifier == "ann":
                    models[(model_id, classifier, align_flag)] = pipe.fit_ann_model(
                        data, fit_seed, smote_k=config.smote_k
                    )
                else:
                    models[(model_id, classifier, align_flag)] = pipe.fit_rocket_model(
                        data, fit_seed, config.n_kernels
                    )

    # asset-specific detector: healthy frames of the primary training pump
    primary = datasets["TrainingSetI"][0].pump_id
    healthy = [f for f in datasets["TrainingSetI"] if f.label in {1, 2, 6}]
    detector = pipe.fit_detector_model(healthy, config.seed)
    detector_flags = {
        name: detector.flags(list(datasets[name])) for name in (VOTING_TEST_SET,)
    }

    results = []
    smoothing_pairs = []
    voting_pairs = []
    by_cell = {}

    for model_id in MODEL_IDS:
        for classifier in CLASSIFIERS:
            for name in TEST_SETS:
                raw_ds = datasets[name]
                labels = np.array([f.label for f in raw_ds])
                resets = stream_resets(raw_ds)
                for align_flag, variant_plain, variant_smoothed in (
                    (False, "M", "M+S"),
                    (True, "V+M", "V+M+S"),
                ):
                    model = models[(model_id, classifier, align_flag)]
                    ds = aligned_tests[name] if align_flag else raw_ds
                    probs = model.frame_probabilities(list(ds))
                    smoothed = smooth_series(probs, resets)

                    acc_plain = accuracy(_predictions_from_probs(probs), labels)
                    acc_smoothed = accuracy(_predictions_from_probs(smoothed), labels)
                    smoothing_pairs.append(
                        ((model_id, classifier, align_flag, name), acc_plain, acc_smoothed)
                    )

                    if variant_plain in MAIN_VARIANTS:
                        res = _result(model_id, classifier, variant_plain, name,
                                      _predictions_from_probs(probs), labels)
                        results.append(res)
                        by_cell[(model_id, classifier, variant_plain, name)] = res
                    if variant_smoothed in MAIN_VARIANTS:
                        res = _result(model_id, classifier, variant_smoothed, name,
                                      _predictions_from_probs(smoothed), labels)
                        results.append(res)
                        by_cell[(model_id, classifier, variant_smoothed, name)] = res

                    if align_flag and name == VOTING_TEST_SET:
                        flags = detector_flags[name]
                        voted = np.array(
                            [vote(p, fl) for p, fl in zip(smoothed, flags)]
                        )
                        res = _result(model_id, classifier, "V+M+S+A", name, voted, labels)
                        results.append(res)
                        by_cell[(model_id, classifier, "V+M+S+A", name)] = res
                        voting_pairs.append((acc_smoothed, accuracy(voted, labels)))

    comparisons = _summaries(smoothing_pairs, voting_pairs, by_cell)
    return GridResult(results, comparisons, smoothing_pairs)


def _paired_comparison(name: str, a, b) -> Comparison:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ttest = paired_ttest(a, b)
    return Comparison(
        name, a.shape[0],
        float(a.mean()), float(a.std(ddof=1)),
        float(b.mean()), float(b.std(ddof=1)),
        ttest,
    )


def _summaries(smoothing_pairs, voting_pairs, by_cell) -> list:
    comparisons = []

    raw = [p[1] for p in smoothing_pairs]
    sm = [p[2] for p in smoothing_pairs]
    comparisons.append(_paired_comparison("smoothing: raw vs smoothed", raw, sm))

    model_i, model_ii = [], []
    for classifier in CLASSIFIERS:
        for variant in MAIN_VARIANTS:
            for name in ("T5", "T6", "T7", "T8"):
                model_i.append(by_cell[("I", classifier, variant, name)].accuracy)
                model_ii.append(by_cell[("II", classifier, variant, name)].accuracy)
    comparisons.append(
        _paired_comparison("training diversity on T5-T8: Model I vs Model II",
                           model_i, model_ii)
    )

    if voting_pairs:
        before = [p[0] for p in voting_pairs]
        after = [p[1] for p in voting_pairs]
        comparisons.append(
            _paired_comparison("detector voting on T1: V+M+S vs V+M+S+A", before, after)
        )
    return comparisons


def write_results_csv(results, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "classifier", "variant", "test_set", "accuracy", "n_frames"])
        for r in results:
            writer.writerow(
                [r.model_id, r.classifier, r.variant, r.test_set,
                 f"{r.accuracy:.6f}", r.n_frames]
            )


def write_summary(comparisons, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["comparison", "n_pairs", "mean_a", "sd_a", "mean_b", "sd_b", "t", "df", "p"]
        )
        for c in comparisons:
            writer.writerow(
                [c.name, c.n_pairs,
                 f"{c.mean_a:.6f}", f"{c.sd_a:.6f}",
                 f"{c.mean_b:.6f}", f"{c.sd_b:.6f}",
                 f"{c.ttest.t:.6f}", f"{c.ttest.df:.4f}", f"{c.ttest.p:.6g}"]
            )


def format_table(results) -> str:
    """Aligned plain-text accuracy table, one block per (model, classifier)."""
    lines = []
    variants = MAIN_VARIANTS + ("V+M+S+A",)
    for model_id in MODEL_IDS:
        for classifier in CLASSIFIERS:
            block = [r for r in results
                     if r.model_id == model_id and r.classifier == classifier]
            if not block:
                continue
            lines.append(f"Model {model_id} / {classifier.upper()}")
            header = "  ".join(f"{name:>7}" for name in TEST_SETS)
            lines.append(f"{'variant':>9}  {header}")
            for variant in variants:
                cells = []
                for name in TEST_SETS:
                    match = [r for r in block
                             if r.variant == variant and r.test_set == name]
                    cells.append(f"{match[0].accuracy:7.3f}" if match else f"{'-':>7}")
                if any(c.strip() != "-" for c in cells):
                    lines.append(f"{variant:>9}  " + "  ".join(cells))
            lines.append("")
    return "\n".join(lines)
