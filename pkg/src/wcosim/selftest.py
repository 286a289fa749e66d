"""Built-in verification suite: numerical identities the library must satisfy,
runnable from the CLI without any dataset.

Each check uses an independent route (materialized covariance, explicit
matrix inverse, exact arithmetic) to confirm the production path. The
``eigenvalue_error`` hook deliberately corrupts the whitening spectrum so the
harness itself can be shown to catch failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluation import ConfusionMatrix, metrics
from .linalg import (
    WhiteningMatrix,
    covariance_unbiased,
    eigh_symmetric,
    pca_gram_trick,
    whitening_matrix,
)
from .similarity import whitened_cosine

__all__ = ["CheckResult", "run_selftest", "format_results"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _gauss_jordan_inverse(a: np.ndarray) -> np.ndarray:
    """Matrix inverse by Gauss-Jordan elimination with partial pivoting.

    Kept deliberately naive and separate from any eigen-based route.
    """
    n = a.shape[0]
    aug = np.hstack([a.astype(np.float64).copy(), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < 1e-300:
            raise ValueError("singular matrix")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def _random_centered(rng, d: int, c: int) -> np.ndarray:
    x = rng.standard_normal((d, c))
    return x - x.mean(axis=1, keepdims=True)


def _check_gram_vs_direct(rng, rounds: int = 20) -> CheckResult:
    worst_val = 0.0
    worst_vec = 0.0
    for _ in range(rounds):
        d = int(rng.integers(6, 48))
        c = int(rng.integers(3, 13))
        x = _random_centered(rng, d, c)
        fast = pca_gram_trick(x)
        direct = eigh_symmetric(covariance_unbiased(x))
        k = fast.values.size
        ref_vals = direct.values[:k]
        rel = np.abs(fast.values - ref_vals) / ref_vals
        worst_val = max(worst_val, float(rel.max()))
        for i in range(k):
            u, v = fast.vectors[:, i], direct.vectors[:, i]
            worst_vec = max(worst_vec, min(np.linalg.norm(u - v), np.linalg.norm(u + v)))
    ok = worst_val <= 1e-8 and worst_vec <= 1e-6
    return CheckResult(
        "gram-trick vs direct eigendecomposition",
        ok,
        f"worst eigenvalue rel err {worst_val:.2e}, worst eigenvector diff {worst_vec:.2e}",
    )


def _check_whitening_identity(rng, rounds: int = 10, eigenvalue_error: float = 0.0) -> CheckResult:
    worst = 0.0
    for _ in range(rounds):
        d = int(rng.integers(5, 40))
        c = int(rng.integers(3, 14))
        x = _random_centered(rng, d, c)
        es = pca_gram_trick(x)
        w = whitening_matrix(es)
        if eigenvalue_error != 0.0:
            w = WhiteningMatrix(w.w * (1.0 + eigenvalue_error), w.eigenvalues)
        sigma = covariance_unbiased(x)
        gram = w.w.T @ sigma @ w.w
        worst = max(worst, float(np.abs(gram - np.eye(w.retained_rank)).max()))
    ok = worst <= 1e-6
    return CheckResult(
        "whitening identity W^T S W = I",
        ok,
        f"worst max deviation from identity {worst:.2e}",
    )


def _check_inverse_form_equivalence(rng, rounds: int = 8) -> CheckResult:
    worst = 0.0
    for _ in range(rounds):
        d = int(rng.integers(3, 12))
        c = d + int(rng.integers(6, 12))
        x = _random_centered(rng, d, c)
        es = pca_gram_trick(x)
        w = whitening_matrix(es)
        if w.retained_rank != d:
            return CheckResult(
                "projected form matches inverse-covariance form",
                False,
                f"expected full rank {d}, got {w.retained_rank}",
            )
        sigma = covariance_unbiased(x)
        sigma_inv = _gauss_jordan_inverse(sigma)
        u = rng.standard_normal(d)
        v = rng.standard_normal(d)
        direct = float(
            (u @ sigma_inv @ v)
            / (np.linalg.norm(w.w.T @ u) * np.linalg.norm(w.w.T @ v))
        )
        fast = whitened_cosine(u, v, w)
        worst = max(worst, abs(direct - fast))
    ok = worst <= 1e-6
    return CheckResult(
        "projected form matches inverse-covariance form",
        ok,
        f"worst score difference {worst:.2e}",
    )


def _check_metric_arithmetic() -> CheckResult:
    report = metrics(ConfusionMatrix(tp=48, tn=150, fp=0, fn=2))
    expected_f1 = 2.0 * 1.0 * 0.96 / (1.0 + 0.96)
    checks = [
        abs(report.accuracy - 0.99) < 1e-12,
        abs(report.recall - 0.96) < 1e-12,
        abs(report.precision - 1.0) < 1e-12,
        abs(report.f1 - expected_f1) < 1e-12,
        not math.isnan(report.f1),
    ]
    ok = all(checks)
    return CheckResult(
        "confusion-matrix metric arithmetic",
        ok,
        f"accuracy {report.accuracy:.4f}, recall {report.recall:.4f}, "
        f"precision {report.precision:.4f}, f1 {report.f1:.4f}",
    )


def run_selftest(seed: int = 0, eigenvalue_error: float = 0.0) -> list[CheckResult]:
    """Run every check with a deterministic generator; returns all results."""
    rng = np.random.default_rng(seed)
    return [
        _check_gram_vs_direct(rng),
        _check_whitening_identity(rng, eigenvalue_error=eigenvalue_error),
        _check_inverse_form_equivalence(rng),
        _check_metric_arithmetic(),
    ]


def format_results(results) -> str:
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(f"[{status}] {res.name}: {res.detail}")
    failed = sum(1 for r in results if not r.passed)
    lines.append(
        f"{len(results) - failed}/{len(results)} checks passed"
        + ("" if failed == 0 else f", {failed} FAILED")
    )
    return "\n".join(lines) + "\n"
