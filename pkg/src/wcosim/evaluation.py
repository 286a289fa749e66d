"""Confusion-matrix accounting and the accuracy / recall / precision / F1
metrics, plus text, JSON, and CSV report rendering.

Rosacea is the positive class throughout. Undefined ratios (zero denominator)
are reported as NaN markers, never silently as zero: "n/a" in text, null in
JSON, "nan" in CSV.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from io import StringIO
import csv as _csv

from .dataset import NORMAL, ROSACEA

__all__ = ["ConfusionMatrix", "MetricsReport", "confusion", "metrics", "render_report"]

REPORT_FIELDS = ("method", "accuracy", "recall", "precision", "f1", "tp", "tn", "fp", "fn")


@dataclass(frozen=True)
class ConfusionMatrix:
    """TP/TN/FP/FN counts with rosacea as the positive class."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        # counts are additive, so shard results fold cleanly
        return ConfusionMatrix(
            self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn
        )


@dataclass(frozen=True)
class MetricsReport:
    method: str
    accuracy: float
    recall: float
    precision: float
    f1: float
    counts: ConfusionMatrix


def confusion(predictions) -> ConfusionMatrix:
    """Count (predicted, truth) label pairs into a confusion matrix."""
    tp = tn = fp = fn = 0
    n = 0
    for predicted, truth in predictions:
        if predicted not in (NORMAL, ROSACEA) or truth not in (NORMAL, ROSACEA):
            raise ValueError(f"unknown label in pair ({predicted!r}, {truth!r})")
        if truth == ROSACEA:
            if predicted == ROSACEA:
                tp += 1
            else:
                fn += 1
        else:
            if predicted == ROSACEA:
                fp += 1
            else:
                tn += 1
        n += 1
    if n == 0:
        raise ValueError("no predictions to score")
    return ConfusionMatrix(tp, tn, fp, fn)


def metrics(cm: ConfusionMatrix, method: str = "") -> MetricsReport:
    """Accuracy, recall, precision, and F1 from the counts.

    Recall is TP/(TP+FN), precision TP/(TP+FP), F1 their harmonic mean.
    Ratios with a zero denominator come back as NaN.
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else math.nan
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else math.nan
    if math.isnan(recall) or math.isnan(precision) or precision + recall == 0.0:
        f1 = math.nan
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricsReport(method, accuracy, recall, precision, f1, cm)


def _fmt(value: float, decimals: int) -> str:
    return "n/a" if math.isnan(value) else f"{value:.{decimals}f}"


def _row_values(report: MetricsReport) -> list:
    cm = report.counts
    return [
        report.method,
        report.accuracy,
        report.recall,
        report.precision,
        report.f1,
        cm.tp,
        cm.tn,
        cm.fp,
        cm.fn,
    ]


def render_report(reports, fmt: str = "text") -> str:
    """Render metric reports in input order.

    Text rounds metrics to 2 decimals for eyeballing; the machine formats
    (json, csv) carry 4.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to render")

    if fmt == "text":
        header = ["method", "accuracy", "recall", "precision", "f1", "tp", "tn", "fp", "fn"]
        rows = [header]
        for r in reports:
            vals = _row_values(r)
            rows.append(
                [vals[0]]
                + [_fmt(v, 2) for v in vals[1:5]]
                + [str(v) for v in vals[5:]]
            )
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        return "\n".join(lines) + "\n"

    if fmt == "json":
        payload = []
        for r in reports:
            vals = _row_values(r)
            record = dict(zip(REPORT_FIELDS, vals))
            for key in ("accuracy", "recall", "precision", "f1"):
                record[key] = None if math.isnan(record[key]) else round(record[key], 4)
            payload.append(record)
        return json.dumps(payload, indent=2) + "\n"

    if fmt == "csv":
        buf = StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_FIELDS)
        for r in reports:
            vals = _row_values(r)
            writer.writerow(
                [vals[0]]
                + ["nan" if math.isnan(v) else f"{v:.4f}" for v in vals[1:5]]
                + vals[5:]
            )
        return buf.getvalue()

    raise ValueError(f"unknown report format {fmt!r} (expected text, json, or csv)")
