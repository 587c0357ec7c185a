"""Input validation helpers.

Every public entry point funnels array-like inputs through these functions so
that shape and finiteness errors surface as ValueError with a usable message
instead of failing deep inside a factorization.
"""

import numpy as np


def as_design(X) -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float64 array with n >= 1 rows, m >= 1 columns."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"design matrix must be 2-D, got shape {X.shape}")
    n, m = X.shape
    if n < 1 or m < 1:
        raise ValueError(f"design matrix must be at least 1x1, got {n}x{m}")
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix contains non-finite entries")
    return X


def as_response(y, n: int) -> np.ndarray:
    """Coerce ``y`` to a finite 1-D float64 vector of length ``n``."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != n:
        raise ValueError(f"response length {y.shape[0]} does not match {n} design rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite entries")
    return y


def as_coefficients(theta, m: int) -> np.ndarray:
    """Coerce ``theta`` to a finite 1-D float64 vector of length ``m``."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.shape[0] != m:
        raise ValueError(
            f"coefficient length {theta.shape[0]} does not match {m} design columns"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("coefficient vector contains non-finite entries")
    return theta


def as_weights(w, m: int) -> np.ndarray:
    """Coerce ``w`` to a finite nonnegative 1-D float64 vector of length ``m``.

    A scalar is broadcast to all m columns.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 0:
        w = np.full(m, float(w))
    w = w.reshape(-1)
    if w.shape[0] != m:
        raise ValueError(f"weight length {w.shape[0]} does not match {m} design columns")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain non-finite entries")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return w


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def column_norms(X: np.ndarray, require_nonzero: bool = False) -> np.ndarray:
    """Euclidean norm of each column; optionally reject zero columns."""
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    if require_nonzero and np.any(norms == 0.0):
        dead = np.flatnonzero(norms == 0.0)
        raise ValueError(f"design matrix has zero columns at indices {dead.tolist()}")
    return norms
