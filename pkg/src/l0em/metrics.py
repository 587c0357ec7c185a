"""Shared evaluation utilities."""

from dataclasses import dataclass

import numpy as np

from .validate import as_design, column_norms


@dataclass(frozen=True)
class SupportMetrics:
    true_positive: int
    false_positive: int
    false_negative: int

    @property
    def exact_recovery(self) -> bool:
        return self.false_positive == 0 and self.false_negative == 0


def mse(y_true, y_pred) -> float:
    """Mean squared difference."""
    a = np.asarray(y_true, dtype=np.float64).reshape(-1)
    b = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    d = a - b
    return float(d @ d) / a.size


def coherence(X) -> float:
    """Maximum absolute cosine similarity between distinct columns.

    0 for mutually orthogonal columns, 1 when two columns are collinear.
    """
    X = as_design(X)
    if X.shape[1] < 2:
        raise ValueError("coherence needs at least two columns")
    norms = column_norms(X, require_nonzero=True)
    C = (X / norms).T @ (X / norms)
    np.fill_diagonal(C, 0.0)
    return float(np.max(np.abs(C)))


def support_metrics(theta_hat, true_support) -> SupportMetrics:
    """Count support errors of a fitted coefficient vector.

    The fitted support is the exact nonzero set (hard thresholding has
    already been applied by the solver, so no extra tolerance is used here).
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64).reshape(-1)
    m = theta_hat.size
    truth = {int(j) for j in true_support}
    if truth and (min(truth) < 0 or max(truth) >= m):
        raise ValueError(f"true support indices out of range for m={m}")
    found = set(np.flatnonzero(theta_hat).tolist())
    return SupportMetrics(
        true_positive=len(found & truth),
        false_positive=len(found - truth),
        false_negative=len(truth - found),
    )
