"""Dense weighted ridge solves.

The core operation solves, for a nonnegative column-weight vector w,

    (diag(w) X'X + lam I) theta = diag(w) X'y

which is the normal-equation form of a ridge problem whose columns have been
rescaled by sqrt(w).  Substituting theta = sqrt(w) * z symmetrizes the kernel,
so both the m x m (primal) and n x n (dual) forms reduce to a single
positive-definite Cholesky solve:

    primal: z = (A'A + lam I)^{-1} A'y,      A = X diag(sqrt(w))
    dual:   z = A' (AA' + lam I)^{-1} y

The two are algebraically identical; the dual is preferred when the number of
active columns exceeds the sample count.
"""

import numpy as np
from scipy.linalg.lapack import dposv

from .exceptions import NumericError
from .validate import as_design, as_response, as_weights, check_positive

# Columns whose weight falls below FREEZE_RTOL * max(w) are pinned at zero and
# dropped from the active solve; this is exact for w_j = 0 and prevents
# underflow once an iterate has collapsed a coordinate.
FREEZE_RTOL = 1e-14


def _spd_solve(K: np.ndarray, rhs: np.ndarray, context: str) -> np.ndarray:
    # overwrite_a=0 keeps K intact so a failure can report its conditioning
    _, x, info = dposv(K, rhs, lower=0, overwrite_a=0, overwrite_b=0)
    if info != 0:
        cond = float(np.linalg.cond(K))
        raise NumericError(
            f"{context}: kernel factorization failed (condition estimate {cond:.3e})"
        )
    return x


def _solve_active(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    lam: float,
    mode: str = "auto",
    gram: np.ndarray | None = None,
    xty: np.ndarray | None = None,
) -> np.ndarray:
    """Unvalidated weighted ridge solve; callers guarantee clean inputs.

    ``gram``/``xty`` optionally carry precomputed X'X and X'y for the primal
    path, which lets iterative callers avoid touching X each step.
    """
    n, m = X.shape
    theta = np.zeros(m)
    wmax = float(w.max()) if m else 0.0
    if wmax <= 0.0:
        return theta

    active = w >= FREEZE_RTOL * wmax
    full = bool(active.all())
    idx = None if full else np.flatnonzero(active)
    m_act = m if full else idx.size
    s = np.sqrt(w if full else w[idx])

    if mode == "auto":
        mode = "dual" if m_act > n else "primal"

    if mode == "primal":
        if gram is not None:
            G = gram if full else gram[np.ix_(idx, idx)]
            K = G * s
            K *= s[:, None]
            rhs = s * (xty if full else xty[idx])
        else:
            A = (X if full else X[:, idx]) * s
            K = A.T @ A
            rhs = A.T @ y
        K.flat[:: m_act + 1] += lam
        z = _spd_solve(K, rhs, "primal weighted ridge")
    elif mode == "dual":
        A = (X if full else X[:, idx]) * s
        K = A @ A.T
        K.flat[:: n + 1] += lam
        u = _spd_solve(K, y, "dual weighted ridge")
        z = A.T @ u
    else:
        raise ValueError(f"mode must be 'auto', 'primal' or 'dual', got {mode!r}")

    if full:
        theta = s * z
    else:
        theta[idx] = s * z
    return theta


def weighted_ridge_solve(X, y, weights, lam: float, mode: str = "auto") -> np.ndarray:
    """Solve (diag(w) X'X + lam I) theta = diag(w) X'y.

    Parameters
    ----------
    X : array-like of shape (n, m)
        Design matrix, one row per sample.
    y : array-like of shape (n,)
        Response vector.
    weights : array-like of shape (m,) or scalar
        Nonnegative per-column weights; columns with zero weight get an exact
        zero coefficient.
    lam : float
        Positive ridge strength.
    mode : {'auto', 'primal', 'dual'}
        Kernel form. 'auto' picks the n x n dual when the active column count
        exceeds n, otherwise the m x m primal.

    Returns
    -------
    ndarray of shape (m,)

    Raises
    ------
    ValueError
        On dimension mismatch, negative weights, or nonpositive lam.
    NumericError
        If the symmetric kernel cannot be factorized.
    """
    X = as_design(X)
    n, m = X.shape
    y = as_response(y, n)
    w = as_weights(weights, m)
    lam = check_positive(lam, "lam")
    return _solve_active(X, y, w, lam, mode=mode)


def ridge_init(X, y, lam: float, mode: str = "auto") -> np.ndarray:
    """Plain ridge solution (X'X + lam I)^{-1} X'y, i.e. unit weights."""
    return weighted_ridge_solve(X, y, 1.0, lam, mode=mode)
