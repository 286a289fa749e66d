"""Command-line surface: train, predict, eval, baseline, selftest.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifiers import (
    method_name,
    predict_any,
    train_knn,
    train_pca_pipeline,
    train_whitened_cosine,
)
from .dataset import (
    NORMAL,
    RAW_VECTORS,
    ROSACEA,
    PreprocessSpec,
    load_csv_vectors,
    load_image_vector,
    load_vectors,
    scan_directories,
)
from .evaluation import confusion, metrics, render_report
from .figures import render_report_figures
from .linalg import TruncationPolicy
from .model_io import load_model, save_model
from .selftest import format_results, run_selftest

__all__ = ["RunConfig", "main", "entry"]

BASELINE_METHODS = ("knn-l1", "knn-l2", "knn-cos", "pca-knn", "pca-mean")


@dataclass(frozen=True)
class RunConfig:
    """Documented defaults for every tunable the commands expose."""

    rank_tol: float = 1e-10
    center_at_predict: bool = False
    knn_k: int = 1
    pca_components: int | None = None  # None = smallest count covering 95% variance
    split_ratio: float = 5.0 / 6.0
    split_seed: int = 0
    output_format: str = "text"


DEFAULTS = RunConfig()


class UsageError(Exception):
    """Bad flags or inputs the user can fix; maps to exit code 2."""


def _require_dir(path, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} is not a directory: {p}")
    return p


def _load_training_data(normal_dir, rosacea_dir, train_csv, prep: PreprocessSpec):
    """Returns (x_normal, x_rosacea, effective PreprocessSpec)."""
    if train_csv is not None:
        if normal_dir or rosacea_dir:
            raise UsageError("give either class directories or a CSV file, not both")
        x, labels = load_csv_vectors(train_csv)
        idx_n = [i for i, lab in enumerate(labels) if lab == NORMAL]
        idx_r = [i for i, lab in enumerate(labels) if lab == ROSACEA]
        if not idx_n or not idx_r:
            raise UsageError("training CSV must contain both classes")
        return x[:, idx_n], x[:, idx_r], RAW_VECTORS
    if not normal_dir or not rosacea_dir:
        raise UsageError("need --normal-dir and --rosacea-dir (or a training CSV)")
    _require_dir(normal_dir, "--normal-dir")
    _require_dir(rosacea_dir, "--rosacea-dir")
    manifest = scan_directories(normal_dir, rosacea_dir)
    x, labels = load_vectors(manifest, prep)
    idx_n = [i for i, lab in enumerate(labels) if lab == NORMAL]
    idx_r = [i for i, lab in enumerate(labels) if lab == ROSACEA]
    return x[:, idx_n], x[:, idx_r], prep


def _load_test_data(normal_dir, rosacea_dir, test_csv, model):
    """Returns (inputs, columns d x N, truth labels) for evaluation."""
    if test_csv is not None:
        if normal_dir or rosacea_dir:
            raise UsageError("give either class directories or a CSV file, not both")
        x, labels = load_csv_vectors(test_csv)
        if x.shape[0] != model.dimension:
            raise ValueError(
                f"test vectors have length {x.shape[0]} but the model expects {model.dimension}"
            )
        inputs = [f"{Path(test_csv).name}:row{i + 1}" for i in range(len(labels))]
    else:
        if not normal_dir or not rosacea_dir:
            raise UsageError("need --normal-dir and --rosacea-dir (or a test CSV)")
        _require_dir(normal_dir, "--normal-dir")
        _require_dir(rosacea_dir, "--rosacea-dir")
        manifest = scan_directories(normal_dir, rosacea_dir)
        x, labels = load_vectors(manifest, model.preprocess)
        inputs = [str(p) for p, _ in manifest.entries]
    if NORMAL not in labels or ROSACEA not in labels:
        raise ValueError("test set must contain both classes")
    return inputs, x, labels


def _score_text(value: float) -> str:
    return "n/a" if math.isnan(value) else f"{value:.4f}"


def _score_json(value: float):
    return None if math.isnan(value) else value


def _image_prep(args) -> PreprocessSpec:
    if args.width < 8 or args.height < 8:
        raise UsageError("--width and --height must be at least 8")
    return PreprocessSpec(args.width, args.height, 3, args.pixel_scale)


def cmd_train(args) -> int:
    prep = _image_prep(args)
    x_normal, x_rosacea, prep = _load_training_data(
        args.normal_dir, args.rosacea_dir, args.train_csv, prep
    )
    policy = TruncationPolicy(rel_tol=args.rank_tol)
    model = train_whitened_cosine(x_normal, x_rosacea, policy, prep)
    save_model(model, args.out)
    n, m = model.train_counts
    top = model.whitening.eigenvalues[:5]
    print(f"trained whitened-cosine model: {args.out}")
    print(f"  dimension d      : {model.dimension}")
    print(f"  samples (n, m)   : {n} normal, {m} rosacea")
    print(f"  retained rank    : {model.whitening.retained_rank}")
    print(f"  top eigenvalues  : {', '.join(f'{v:.6g}' for v in top)}")
    return 0


def _predict_inputs(args, model):
    """Yield (input name, vector or exception) without aborting on bad files."""
    if args.csv is not None:
        x, _labels = load_csv_vectors(args.csv)
        if x.shape[0] != model.dimension:
            raise ValueError(
                f"vectors have length {x.shape[0]} but the model expects {model.dimension}"
            )
        for i in range(x.shape[1]):
            yield f"{Path(args.csv).name}:row{i + 1}", x[:, i]
        return
    for path in args.paths:
        try:
            yield str(path), load_image_vector(path, model.preprocess)
        except ValueError as exc:
            yield str(path), exc


def cmd_predict(args) -> int:
    if not args.paths and args.csv is None:
        raise UsageError("nothing to predict: give image paths or --csv")
    if args.paths and args.csv is not None:
        raise UsageError("give either image paths or --csv, not both")
    model = load_model(args.model)
    rows = []
    failures = 0
    for name, payload in _predict_inputs(args, model):
        if isinstance(payload, Exception):
            rows.append({"input": name, "error": str(payload)})
            failures += 1
            continue
        pred = predict_any(model, payload, center_at_predict=args.center_at_predict)
        rows.append(
            {
                "input": name,
                "label": pred.label,
                "sim_normal": pred.sim_normal,
                "sim_rosacea": pred.sim_rosacea,
            }
        )
    if args.format == "json":
        for row in rows:
            if "sim_normal" in row:
                row["sim_normal"] = _score_json(row["sim_normal"])
                row["sim_rosacea"] = _score_json(row["sim_rosacea"])
        print(json.dumps(rows, indent=2))
    else:
        for row in rows:
            if "error" in row:
                print(f"{row['input']}  ERROR: {row['error']}")
            else:
                print(
                    f"{row['input']}  {row['label']}"
                    f"  sim_normal={_score_text(row['sim_normal'])}"
                    f"  sim_rosacea={_score_text(row['sim_rosacea'])}"
                )
    return 1 if failures else 0


def _evaluate(model, inputs, columns, truths, center_at_predict: bool):
    scored = []
    for i in range(columns.shape[1]):
        pred = predict_any(model, columns[:, i], center_at_predict=center_at_predict)
        scored.append((pred, truths[i]))
    cm = confusion((pred.label, truth) for pred, truth in scored)
    return scored, cm


def _emit_report(report, scored, cm, model, fmt: str, report_dir) -> None:
    print(render_report([report], fmt), end="")
    if report_dir is not None:
        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.csv").write_text(render_report([report], "csv"))
        (report_dir / "report.json").write_text(render_report([report], "json"))
        written = render_report_figures(report_dir, cm, scored, model)
        names = ", ".join(p.name for p in written)
        print(f"report written to {report_dir} (report.csv, report.json, {names})",
              file=sys.stderr)


def cmd_eval(args) -> int:
    model = load_model(args.model)
    inputs, columns, truths = _load_test_data(
        args.normal_dir, args.rosacea_dir, args.test_csv, model
    )
    scored, cm = _evaluate(model, inputs, columns, truths, args.center_at_predict)
    report = metrics(cm, method_name(model))
    _emit_report(report, scored, cm, model, args.format, args.report_dir)
    return 0


def cmd_baseline(args) -> int:
    if args.k < 1:
        raise UsageError("--k must be at least 1")
    if args.components is not None and args.components < 1:
        raise UsageError("--components must be at least 1")
    prep = _image_prep(args)
    x_normal, x_rosacea, prep = _load_training_data(
        args.train_normal_dir, args.train_rosacea_dir, args.train_csv, prep
    )
    labels = [NORMAL] * x_normal.shape[1] + [ROSACEA] * x_rosacea.shape[1]

    if args.method in ("knn-l1", "knn-l2", "knn-cos"):
        metric = {"knn-l1": "l1", "knn-l2": "l2", "knn-cos": "cosine"}[args.method]
        pooled = np.concatenate([x_normal, x_rosacea], axis=1)
        model = train_knn(pooled, labels, k=args.k, metric=metric, preprocess=prep)
    else:
        head = "knn-l2" if args.method == "pca-knn" else "nearest-mean"
        model = train_pca_pipeline(
            x_normal,
            x_rosacea,
            n_components=args.components,
            inner=head,
            knn_k=args.k,
            preprocess=prep,
        )

    if args.out:
        save_model(model, args.out)
        print(f"saved {args.method} model: {args.out}", file=sys.stderr)

    inputs, columns, truths = _load_test_data(
        args.test_normal_dir, args.test_rosacea_dir, args.test_csv, model
    )
    scored, cm = _evaluate(model, inputs, columns, truths, center_at_predict=False)
    report = metrics(cm, method_name(model))
    _emit_report(report, scored, cm, model, args.format, args.report_dir)
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed, eigenvalue_error=args.inject_eigenvalue_error)
    print(format_results(results), end="")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcosim",
        description="Whitened-cosine-similarity screening classifier and baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the whitened-cosine detector")
    p_train.add_argument("--normal-dir", help="directory of normal-class images")
    p_train.add_argument("--rosacea-dir", help="directory of rosacea-class images")
    p_train.add_argument("--train-csv", help="labeled CSV vectors instead of image dirs")
    p_train.add_argument("--out", required=True, help="output model file")
    p_train.add_argument("--width", type=int, default=512)
    p_train.add_argument("--height", type=int, default=512)
    p_train.add_argument("--pixel-scale", choices=("unit", "raw"), default="unit")
    p_train.add_argument("--rank-tol", type=float, default=DEFAULTS.rank_tol,
                         help="relative eigenvalue truncation threshold")
    p_train.set_defaults(handler=cmd_train)

    p_pred = sub.add_parser("predict", help="classify images or CSV vectors")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("paths", nargs="*", help="image files to classify")
    p_pred.add_argument("--csv", help="labeled CSV vectors (labels are ignored)")
    p_pred.add_argument("--format", choices=("text", "json"), default="text")
    p_pred.add_argument("--center-at-predict", action="store_true",
                        help="shift test vector and class means by the grand mean")
    p_pred.set_defaults(handler=cmd_predict)

    p_eval = sub.add_parser("eval", help="evaluate a model on a labeled test set")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--normal-dir")
    p_eval.add_argument("--rosacea-dir")
    p_eval.add_argument("--test-csv")
    p_eval.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p_eval.add_argument("--report-dir",
                        help="write report.csv, report.json, and figures here")
    p_eval.add_argument("--center-at-predict", action="store_true")
    p_eval.set_defaults(handler=cmd_eval)

    p_base = sub.add_parser("baseline", help="train and evaluate a baseline method")
    p_base.add_argument("--method", required=True, choices=BASELINE_METHODS)
    p_base.add_argument("--k", type=int, default=DEFAULTS.knn_k, help="neighbor count")
    p_base.add_argument("--components", type=int, default=DEFAULTS.pca_components,
                        help="PCA component count (default: 95%% retained variance)")
    p_base.add_argument("--train-normal-dir")
    p_base.add_argument("--train-rosacea-dir")
    p_base.add_argument("--train-csv")
    p_base.add_argument("--test-normal-dir")
    p_base.add_argument("--test-rosacea-dir")
    p_base.add_argument("--test-csv")
    p_base.add_argument("--width", type=int, default=512)
    p_base.add_argument("--height", type=int, default=512)
    p_base.add_argument("--pixel-scale", choices=("unit", "raw"), default="unit")
    p_base.add_argument("--out", help="also save the trained baseline model")
    p_base.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p_base.add_argument("--report-dir")
    p_base.set_defaults(handler=cmd_baseline)

    p_self = sub.add_parser("selftest", help="run the built-in verification checks")
    p_self.add_argument("--seed", type=int, default=DEFAULTS.split_seed)
    p_self.add_argument("--inject-eigenvalue-error", type=float, default=0.0,
                        help="test hook: corrupt the whitening spectrum to prove "
                             "failures are reported")
    p_self.set_defaults(handler=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
