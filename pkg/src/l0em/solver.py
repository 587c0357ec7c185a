"""L0/Lp-penalized least squares via an EM-style fixed-point iteration.

Each iteration copies the current coefficients into an auxiliary vector
(E-step), forms per-column weights |eta|^(2-p) (eta^2 for the L0 case), and
solves the resulting weighted ridge system (M-step).  The loop stops when the
sup-norm change falls below ``tol``; afterwards entries smaller than
``threshold`` are hard-zeroed.  With a positive penalty the map is a local
contraction, so runs from a fixed start are reproducible bit for bit.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NumericError
from .linalg import _solve_active
from .validate import (
    as_coefficients,
    as_design,
    as_response,
    check_positive,
    column_norms,
)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the fixed-point iteration.

    Parameters
    ----------
    p : float
        Penalty exponent in [0, 2]; 0 counts nonzero coefficients, 1 gives a
        lasso-type penalty, 2 reduces to plain ridge (one iteration).
    tol : float
        Stop when the sup-norm step ||theta - eta|| drops below this.
    threshold : float
        Final hard-zeroing cutoff: entries with |theta_j| < threshold are set
        to exactly 0 after the loop exits.
    max_iter : int
        Iteration cap; hitting it yields ``converged=False``, not an error.
    nonneg : bool
        Clamp negative coefficients to 0 after every M-step (and so in the
        final result).
    init : 'ridge' or array-like
        Starting point. 'ridge' solves the unit-weight ridge system; an
        explicit vector is used as given.
    """

    p: float = 0.0
    tol: float = 1e-6
    threshold: float = 1e-3
    max_iter: int = 1000
    nonneg: bool = False
    init: object = "ridge"

    def __post_init__(self):
        if not 0.0 <= self.p <= 2.0:
            raise ValueError(f"p must lie in [0, 2], got {self.p}")
        check_positive(self.tol, "tol")
        check_positive(self.threshold, "threshold")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if isinstance(self.init, str) and self.init != "ridge":
            raise ValueError(f"init must be 'ridge' or an explicit vector, got {self.init!r}")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one penalized fit.

    ``theta`` is the hard-thresholded coefficient vector; ``theta_raw`` is the
    iterate at loop exit, before thresholding.  ``stationarity_max`` and
    ``certificate_ok`` record the fixed-point residual check evaluated at loop
    exit (certificate_ok is None for p > 0, where the L0 residual equation
    does not apply).
    """

    theta: np.ndarray
    theta_raw: np.ndarray
    support: np.ndarray
    iterations: int
    converged: bool
    objective: float
    trace: np.ndarray
    lam: float
    p: float
    stationarity_max: float
    certificate_ok: bool | None
    history: tuple | None = field(default=None, repr=False)

    @property
    def n_selected(self) -> int:
        return int(self.support.size)


def objective(X, y, theta, lam: float, p: float = 0.0) -> float:
    """Penalized least-squares value 0.5*||y - X theta||^2 + (lam/2) * sum |theta_j|^p.

    For p = 0 the penalty term counts nonzero entries (0^0 taken as 0).
    """
    X = as_design(X)
    n, m = X.shape
    y = as_response(y, n)
    theta = as_coefficients(theta, m)
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    resid = y - X @ theta
    if p == 0.0:
        pen = float(np.count_nonzero(theta))
    else:
        pen = float(np.sum(np.abs(theta) ** p))
    return 0.5 * float(resid @ resid) + 0.5 * lam * pen


def lambda_max(X, y) -> float:
    """Largest useful L0 penalty: max_j (x_j'y)^2 / (4 x_j'x_j).

    Above this value (for mutually orthogonal columns) the all-zero vector is
    the only fixed point, so the fitted model is empty.
    """
    X = as_design(X)
    y = as_response(y, X.shape[0])
    norms = column_norms(X, require_nonzero=True)
    corr = X.T @ y
    return float(np.max(corr * corr / (4.0 * norms * norms)))


def stationarity_residual(X, y, theta, lam: float) -> np.ndarray:
    """Fixed-point residual r_j = lam*theta_j - theta_j^2 * x_j'(y - X theta).

    Exactly zero at any fixed point of the L0 iteration; used as the
    convergence certificate for converged fits.
    """
    X = as_design(X)
    n, m = X.shape
    y = as_response(y, n)
    theta = as_coefficients(theta, m)
    resid = y - X @ theta
    return lam * theta - theta * theta * (X.T @ resid)


def stationarity_bound(X, y, theta, lam: float) -> float:
    """Tolerance for the certificate: 1e-6 * (1 + ||theta||_inf^2 * max_j ||x_j|| * ||y - X theta||)."""
    X = as_design(X)
    n, m = X.shape
    y = as_response(y, n)
    theta = as_coefficients(theta, m)
    resid = y - X @ theta
    tmax = float(np.max(np.abs(theta))) if m else 0.0
    xmax = float(np.max(column_norms(X)))
    return 1e-6 * (1.0 + tmax * tmax * xmax * float(np.linalg.norm(resid)))


def check_certificate(X, y, theta, lam: float) -> bool:
    """True when the stationarity residual satisfies its bound."""
    r = stationarity_residual(X, y, theta, lam)
    return float(np.max(np.abs(r))) <= stationarity_bound(X, y, theta, lam)


def fit_lpem(X, y, lam: float, options: SolverOptions | None = None,
             keep_history: bool = False) -> FitResult:
    """Run the Lp fixed-point iteration for any p in [0, 2].

    p = 0 reproduces :func:`fit_l0em` exactly; p = 2 makes the M-step
    weight-free, so the first iteration already returns the ridge solution.

    Parameters
    ----------
    X, y : array-like
        Design matrix (n, m) and response (n,).
    lam : float
        Positive penalty strength.
    options : SolverOptions, optional
        Defaults to ``SolverOptions()`` (p = 0).
    keep_history : bool
        Record every iterate (including the start) in ``FitResult.history``;
        off by default since paths and cross-validation run many fits.

    Returns
    -------
    FitResult
        ``converged=False`` (not an exception) when ``max_iter`` is reached.

    Raises
    ------
    ValueError
        For nonpositive lam or inconsistent shapes.
    NumericError
        If an iterate goes non-finite or a kernel cannot be factorized; the
        message carries the iteration index.
    """
    X = as_design(X)
    n, m = X.shape
    y = as_response(y, n)
    lam = check_positive(lam, "lam")
    opts = options if options is not None else SolverOptions()

    # X'X fits in memory and pays for itself whenever the primal kernel is
    # used, which is exactly the m <= n regime.
    gram = xty = None
    if m <= n:
        gram = X.T @ X
        xty = X.T @ y

    ones = np.ones(m)
    if isinstance(opts.init, str):
        theta_w = _solve_active(X, y, ones, lam, gram=gram, xty=xty)
    else:
        theta_w = as_coefficients(opts.init, m).copy()

    p = float(opts.p)
    expo = 2.0 - p
    # For p < 2 an exactly-zero coordinate gives a zero weight at the next
    # E-step and can never revive, so such columns are permanently dropped
    # from the working problem.  (At p = 2 the weight is |0|^0 = 1.)
    shrinkable = p < 2.0
    work = np.arange(m)
    Xw, gramw, xtyw = X, gram, xty

    def full_vector(values: np.ndarray) -> np.ndarray:
        if values.size == m:
            return values.copy()
        out = np.zeros(m)
        out[work] = values
        return out

    history = [full_vector(theta_w)] if keep_history else None
    trace = []
    converged = False
    for it in range(1, int(opts.max_iter) + 1):
        if theta_w.size == 0:
            trace.append(0.0)
            if keep_history:
                history.append(np.zeros(m))
            converged = True
            break
        eta = theta_w
        if p == 0.0:
            w = eta * eta
        elif p == 2.0:
            w = ones
        else:
            w = np.abs(eta) ** expo
        try:
            theta_w = _solve_active(Xw, y, w, lam, gram=gramw, xty=xtyw)
        except NumericError as exc:
            raise NumericError(f"iteration {it}: {exc}") from exc
        if opts.nonneg:
            theta_w = np.maximum(theta_w, 0.0)
        if not np.all(np.isfinite(theta_w)):
            raise NumericError(f"iteration {it}: non-finite iterate")
        delta = float(np.max(np.abs(theta_w - eta)))
        trace.append(delta)
        if keep_history:
            history.append(full_vector(theta_w))
        if delta < opts.tol:
            converged = True
            break
        if shrinkable:
            alive = theta_w != 0.0
            if not alive.all():
                work = work[alive]
                theta_w = theta_w[alive]
                Xw = np.ascontiguousarray(Xw[:, alive])
                if gramw is not None:
                    gramw = np.ascontiguousarray(gramw[alive][:, alive])
                    xtyw = xtyw[alive]
                elif 0 < work.size <= n:
                    gramw = Xw.T @ Xw
                    xtyw = Xw.T @ y

    theta = full_vector(theta_w) if theta_w.size != m else theta_w
    resid = y - X @ theta
    stat = lam * theta - theta * theta * (X.T @ resid)
    stat_max = float(np.max(np.abs(stat))) if m else 0.0
    cert = None
    if p == 0.0:
        tmax = float(np.max(np.abs(theta))) if m else 0.0
        xmax = float(np.max(column_norms(X)))
        bound = 1e-6 * (1.0 + tmax * tmax * xmax * float(np.linalg.norm(resid)))
        cert = bool(stat_max <= bound)

    theta_raw = theta
    theta = np.where(np.abs(theta) < opts.threshold, 0.0, theta)
    return FitResult(
        theta=theta,
        theta_raw=theta_raw,
        support=np.flatnonzero(theta),
        iterations=len(trace),
        converged=converged,
        objective=objective(X, y, theta, lam, p),
        trace=np.asarray(trace),
        lam=lam,
        p=p,
        stationarity_max=stat_max,
        certificate_ok=cert,
        history=tuple(history) if keep_history else None,
    )


def fit_l0em(X, y, lam: float, options: SolverOptions | None = None,
             keep_history: bool = False) -> FitResult:
    """L0-penalized fit; identical to :func:`fit_lpem` with p = 0."""
    opts = options if options is not None else SolverOptions()
    if opts.p != 0.0:
        raise ValueError(f"fit_l0em requires options.p == 0, got p={opts.p}; use fit_lpem")
    return fit_lpem(X, y, lam, opts, keep_history=keep_history)


def reg_path(X, y, grid, options: SolverOptions | None = None,
             warm_start: bool = False, keep_history: bool = False) -> list[FitResult]:
    """Fit every penalty value in an ascending grid.

    Fits are independent by default, each re-initialized per
    ``options.init``; with ``warm_start=True`` each fit after the first starts
    from the previous thresholded solution instead.
    """
    values = np.asarray(getattr(grid, "values", grid), dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise ValueError("penalty grid is empty")
    if np.any(np.diff(values) <= 0):
        raise ValueError("penalty grid must be strictly ascending")
    opts = options if options is not None else SolverOptions()

    fits = []
    for i, lam in enumerate(values):
        if warm_start and fits:
            opts_i = replace(opts, init=fits[-1].theta)
        else:
            opts_i = opts
        try:
            fits.append(fit_lpem(X, y, float(lam), opts_i, keep_history=keep_history))
        except NumericError as exc:
            raise NumericError(f"grid index {i} (lam={lam:.6g}): {exc}") from exc
    return fits


def eventual_contraction(history, tail_frac: float = 0.8) -> bool:
    """Check that sup-norm distances to the final iterate are non-increasing
    over the trailing ``tail_frac`` share of iteration steps.

    ``history`` is the iterate sequence recorded with ``keep_history=True``.
    A small relative slack absorbs floating-point noise near zero.
    """
    iterates = list(history)
    if len(iterates) < 2:
        return True
    final = iterates[-1]
    d = [float(np.max(np.abs(h - final))) for h in iterates]
    steps = len(d) - 1
    start = steps - max(1, math.ceil(tail_frac * steps))
    return all(d[i + 1] <= d[i] + 1e-12 * (1.0 + d[i]) for i in range(start, steps))
