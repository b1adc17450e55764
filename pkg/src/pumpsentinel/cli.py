"""Command-line entry points: simulate | train | eval | grid | serve | predict."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluate as ev
from .bundle import VariantFlags, load_bundle, save_bundle
from .frames import Dataset, load_jsonl, save_jsonl
from .pipeline import Pipeline, train_bundle
from .postprocess import SmootherState, smooth_series, vote
from .server import serve_forever
from .stats import accuracy
from .synth import SynthConfig, generate_series, load_config


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else SynthConfig()
    datasets = generate_series(args.seed, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, ds in datasets.items():
        path = out_dir / f"{name}.jsonl"
        save_jsonl(ds, path)
        print(f"wrote {path} ({len(ds)} frames)")
    return 0


def _cmd_train(args) -> int:
    datasets = [load_jsonl(p) for p in args.datasets]
    variant = VariantFlags.from_name(args.variant)
    bundle = train_bundle(
        datasets, args.classifier, variant, args.seed, n_kernels=args.kernels
    )
    save_bundle(bundle, args.out)
    print(f"wrote {args.out} (classifier={args.classifier}, variant={variant.name})")
    return 0


def _cmd_eval(args) -> int:
    bundle = load_bundle(args.bundle)
    pipeline = Pipeline(bundle)
    rows = []
    for path in args.datasets:
        ds = load_jsonl(path)
        if len(ds) == 0:
            raise ValueError(f"empty test set: {path}")
        labels = np.array([f.label for f in ds])
        if np.any(labels == None):  # noqa: E711  (labels is an object array then)
            raise ValueError(f"test set {path} has unlabeled frames")
        labels = labels.astype(int)

        rotation = None
        if bundle.variant.alignment:
            # a test set is a fresh installation: calibrate from its own frames
            from .alignment import estimate_world_frame

            rotation = estimate_world_frame(ds)
        probs = pipeline.probabilities(list(ds), rotation)
        if bundle.variant.smoothing:
            probs = smooth_series(probs, ev.stream_resets(ds))
        preds = probs.argmax(axis=1) + 1
        if bundle.variant.autoencoder and pipeline.detector is not None:
            flags = pipeline.detector.flags(list(ds))
            preds = np.array([vote(p, fl) for p, fl in zip(probs, flags)])
        rows.append((ds.provenance, accuracy(preds, labels), len(ds)))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["test_set", "accuracy", "n_frames"])
        for name, acc, n in rows:
            writer.writerow([name, f"{acc:.6f}", n])
    for name, acc, n in rows:
        print(f"{name}: accuracy={acc:.4f} n={n}")
    return 0


def _cmd_grid(args) -> int:
    cfg = load_config(args.config) if args.config else SynthConfig()
    if args.data:
        datasets = {}
        for name in ev.TEST_SETS + ("TrainingSetI", "TrainingSetII"):
            path = Path(args.data) / f"{name}.jsonl"
            if not path.exists():
                raise FileNotFoundError(f"missing dataset {path}")
            datasets[name] = load_jsonl(path, provenance=name)
    else:
        datasets = generate_series(args.seed, cfg)
    grid = ev.run_grid(datasets, ev.GridConfig(seed=args.seed, n_kernels=args.kernels))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ev.write_results_csv(grid.results, out_dir / "results.csv")
    ev.write_summary(grid.comparisons, out_dir / "summary.csv")
    table = ev.format_table(grid.results)
    (out_dir / "results.txt").write_text(table)
    print(table)
    for c in grid.comparisons:
        print(
            f"{c.name}: {c.mean_a:.3f}+-{c.sd_a:.3f} vs {c.mean_b:.3f}+-{c.sd_b:.3f} "
            f"(t={c.ttest.t:.3f}, df={c.ttest.df:.1f}, p={c.ttest.p:.4g}, n={c.n_pairs})"
        )
    return 0


def _cmd_serve(args) -> int:
    bundle = load_bundle(args.bundle)
    serve_forever(bundle, args.host, args.port)
    return 0


def _cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    pipeline = Pipeline(bundle)
    ds = load_jsonl(args.input)
    states: dict = {}
    out_fh = open(args.out, "w") if args.out else sys.stdout
    try:
        for frame in ds:
            state = states.get(frame.pump_id, SmootherState())
            state, result = pipeline.predict_step(frame, state)
            states[frame.pump_id] = state
            obj = {
                "pump_id": frame.pump_id,
                "timestamp": frame.timestamp,
                "raw": result.raw.tolist(),
                "smoothed": result.smoothed.tolist(),
                "classifier_class": result.classifier_class,
                "ae_flag": result.ae_flag,
                "final_class": result.final_class,
                "bundle_version": bundle.version,
            }
            out_fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
    finally:
        if args.out:
            out_fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pump-sentinel",
        description="Rotation-invariant anomaly classification for pump vibration bursts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate the synthetic two-series datasets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=str, default=None, help="generator key=value file")
    p.add_argument("--out", type=str, required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train", help="train a model bundle")
    p.add_argument("datasets", nargs="+", help="training dataset .jsonl paths")
    p.add_argument("--classifier", choices=("ann", "rocket"), required=True)
    p.add_argument("--variant", choices=("m", "vm", "vms", "vmsa"), default="vms")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernels", type=int, default=1000)
    p.add_argument("--out", type=str, required=True, help="bundle output path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a bundle on test sets")
    p.add_argument("datasets", nargs="+", help="test dataset .jsonl paths")
    p.add_argument("--bundle", type=str, required=True)
    p.add_argument("--out", type=str, required=True, help="CSV output path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("grid", help="run the full experiment grid")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--kernels", type=int, default=1000)
    p.add_argument("--config", type=str, default=None, help="generator key=value file")
    p.add_argument("--data", type=str, default=None,
                   help="directory of pre-simulated datasets (default: simulate)")
    p.add_argument("--out", type=str, required=True, help="output directory")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("serve", help="run the streaming inference service")
    p.add_argument("--bundle", type=str, required=True)
    p.add_argument("--host", type=str, default="127.0.0.1")
    p.add_argument("--port", type=int, default=7764)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("predict", help="one-shot predictions for a frames file")
    p.add_argument("--bundle", type=str, required=True)
    p.add_argument("--input", type=str, required=True, help="frames .jsonl")
    p.add_argument("--out", type=str, default=None, help="responses path (default stdout)")
    p.set_defaults(func=_cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
