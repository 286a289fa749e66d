"""Figure rendering for evaluation reports.

Writes PNG files next to the delimited report output: a confusion-matrix
heatmap, a per-sample score plot, and (for image-trained models) the class
mean images.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classifiers import KnnModel, WhitenedCosineModel
from .dataset import NORMAL, ROSACEA
from .evaluation import ConfusionMatrix

__all__ = [
    "save_confusion_figure",
    "save_score_figure",
    "save_class_mean_figure",
    "render_report_figures",
]


def save_confusion_figure(cm: ConfusionMatrix, path) -> Path:
    """2x2 confusion-matrix heatmap with annotated counts."""
    counts = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]], dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    ax.imshow(counts, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax.text(j, i, f"{int(counts[i, j])}", ha="center", va="center",
                    color="black", fontsize=14)
    ax.set_xticks([0, 1], ["normal", "rosacea"])
    ax.set_yticks([0, 1], ["normal", "rosacea"])
    ax.set_xlabel("predicted")
    ax.set_ylabel("actual")
    ax.set_title("Confusion matrix")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_score_figure(scored, path) -> Path:
    """Scatter of per-sample class scores, colored by the true label.

    ``scored`` is a sequence of (prediction, truth) pairs. Samples whose
    scores are NaN (e.g. a KNN neighborhood without one of the classes) are
    dropped from the plot.
    """
    points = {NORMAL: [], ROSACEA: []}
    for pred, truth in scored:
        if math.isnan(pred.sim_normal) or math.isnan(pred.sim_rosacea):
            continue
        points[truth].append((pred.sim_normal, pred.sim_rosacea))
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    for truth, color, marker in ((NORMAL, "tab:blue", "o"), (ROSACEA, "tab:red", "^")):
        if points[truth]:
            xs, ys = zip(*points[truth])
            ax.scatter(xs, ys, c=color, marker=marker, s=22, alpha=0.75,
                       label=f"actual {truth}")
    lims = ax.get_xlim() + ax.get_ylim()
    lo, hi = min(lims), max(lims)
    ax.plot([lo, hi], [lo, hi], color="gray", lw=0.8, ls="--")
    ax.set_xlabel("score vs normal mean")
    ax.set_ylabel("score vs rosacea mean")
    ax.set_title("Per-sample class scores")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _class_mean_images(model):
    """(title, d-vector) pairs for models that expose full-dimension means."""
    if isinstance(model, WhitenedCosineModel):
        return [
            ("mean normal", model.mean_normal),
            ("mean rosacea", model.mean_rosacea),
            ("grand mean", model.grand_mean),
        ]
    if isinstance(model, KnnModel):
        cols = model.training_columns
        out = []
        for label in (NORMAL, ROSACEA):
            idx = [i for i, lab in enumerate(model.labels) if lab == label]
            if idx:
                out.append((f"mean {label}", cols[:, idx].mean(axis=1)))
        return out
    return []


def save_class_mean_figure(model, path) -> Path | None:
    """Render the class mean vectors as images; None if the model has no
    image geometry or no full-dimension means (PCA pipelines)."""
    prep = model.preprocess
    if not prep.is_image:
        return None
    panels = _class_mean_images(model)
    if not panels:
        return None
    fig, axes = plt.subplots(1, len(panels), figsize=(3.0 * len(panels), 3.2))
    if len(panels) == 1:
        axes = [axes]
    for ax, (title, vec) in zip(axes, panels):
        img = vec.reshape(prep.height, prep.width, prep.channels)
        if prep.pixel_scale == "raw":
            img = img / 255.0
        ax.imshow(np.clip(img, 0.0, 1.0))
        ax.set_title(title, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_report_figures(report_dir, cm: ConfusionMatrix, scored, model=None) -> list[Path]:
    """Write the standard figure set into ``report_dir``; returns written paths."""
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    written = [
        save_confusion_figure(cm, report_dir / "confusion_matrix.png"),
        save_score_figure(scored, report_dir / "scores.png"),
    ]
    if model is not None:
        mean_fig = save_class_mean_figure(model, report_dir / "class_means.png")
        if mean_fig is not None:
            written.append(mean_fig)
    return written
