"""Penalty-strength selection: grids, k-fold CV, stability, and closed forms.

Cross-validation scores every grid value on held-out mean squared error and
on the spread of the fitted support size across folds.  The two selection
rules those statistics induce (minimum-MSE and smallest penalty with fold-
stable support) can be combined by taking the larger penalty, which favors
the sparser model.  For the L0 penalty the closed-form AIC/BIC/RIC values
skip cross-validation entirely.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import pmap
from .exceptions import NumericError
from .solver import SolverOptions, fit_lpem, lambda_max
from .validate import as_design, as_response, check_positive


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly ascending positive penalty values."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise ValueError("grid must contain at least one value")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("grid values must be positive and finite")
        if np.any(np.diff(values) <= 0):
            raise ValueError("grid values must be strictly ascending")
        object.__setattr__(self, "values", values)

    @classmethod
    def log_spaced(cls, lam_min: float, lam_max: float, count: int) -> "LambdaGrid":
        check_positive(lam_min, "lam_min")
        if count < 2:
            raise ValueError(f"count must be >= 2, got {count}")
        if lam_min >= lam_max:
            raise ValueError(f"lam_min={lam_min!r} must be below lam_max={lam_max!r}")
        return cls(np.geomspace(lam_min, lam_max, int(count)))

    @classmethod
    def explicit(cls, values) -> "LambdaGrid":
        return cls(np.asarray(values, dtype=np.float64))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CvReport:
    """Per-grid-value cross-validation statistics.

    ``fold_mse`` and ``fold_nonzero`` hold the raw (grid x fold) cells;
    rows with any numerically failed cell are marked invalid and skipped by
    the selection rules.  ``cert_checked``/``cert_failed`` count converged
    L0 fold fits against the stationarity certificate.
    """

    lambdas: np.ndarray
    mse_mean: np.ndarray
    mse_sd: np.ndarray
    nonzero_mean: np.ndarray
    nonzero_sd: np.ndarray
    valid: np.ndarray
    fold_mse: np.ndarray
    fold_nonzero: np.ndarray
    k: int
    seed: int
    cert_checked: int
    cert_failed: int


@dataclass(frozen=True)
class SelectionResult:
    lambda_mse: float
    lambda_ss: float
    lambda_final: float
    rule: str
    stability_exact: bool


CV_RULES = ("cv_mse", "stability", "combined_max")
IC_RULES = ("aic", "bic", "ric")


def make_grid(X, y, count: int = 100, lam_min: float = 1e-4, p: float = 0.0) -> LambdaGrid:
    """Log-spaced grid from ``lam_min`` up to the data-determined maximum.

    The upper end is the smallest penalty that empties the model: the
    quarter-squared-correlation formula for p = 0, max_j |x_j'y| otherwise.
    """
    X = as_design(X)
    y = as_response(y, X.shape[0])
    if p == 0.0:
        lam_max = lambda_max(X, y)
    else:
        lam_max = float(np.max(np.abs(X.T @ y)))
    return LambdaGrid.log_spaced(lam_min, lam_max, count)


def _balanced_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [np.sort(part) for part in np.array_split(rng.permutation(n), k)]


def cv_mse(X, y, grid: LambdaGrid, k: int = 5, seed: int = 0,
           options: SolverOptions | None = None, threads: int | None = 1) -> CvReport:
    """k-fold cross-validation of every grid value.

    Rows are partitioned once per call (seeded, size-balanced).  For each
    (grid value, fold) pair the model is fit on the remaining folds and
    scored on the held-out fold: mean squared prediction error and fitted
    support size.  A fold fit that raises NumericError invalidates that
    cell; rows containing an invalid cell are flagged and excluded from
    selection.  Non-convergence is not a failure.

    Returns
    -------
    CvReport
    """
    X = as_design(X)
    n, m = X.shape
    y = as_response(y, n)
    lambdas = grid.values if isinstance(grid, LambdaGrid) else LambdaGrid.explicit(grid).values
    opts = options if options is not None else SolverOptions()
    k = int(k)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} samples, got n={n}")

    folds = _balanced_folds(n, k, seed)
    splits = []
    for test_idx in folds:
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        splits.append((X[mask], y[mask], X[test_idx], y[test_idx]))

    def run_fold(fold_idx: int):
        X_tr, y_tr, X_te, y_te = splits[fold_idx]
        mse_col = np.full(lambdas.size, np.nan)
        nz_col = np.full(lambdas.size, np.nan)
        checked = failed = 0
        for i, lam in enumerate(lambdas):
            try:
                fit = fit_lpem(X_tr, y_tr, float(lam), opts)
            except NumericError:
                continue
            err = y_te - X_te @ fit.theta
            mse_col[i] = float(err @ err) / y_te.size
            nz_col[i] = fit.n_selected
            if fit.p == 0.0 and fit.converged:
                checked += 1
                failed += 0 if fit.certificate_ok else 1
        return mse_col, nz_col, checked, failed

    results = pmap(run_fold, range(k), threads)
    fold_mse = np.column_stack([r[0] for r in results])
    fold_nonzero = np.column_stack([r[1] for r in results])
    cert_checked = sum(r[2] for r in results)
    cert_failed = sum(r[3] for r in results)

    valid = ~np.isnan(fold_mse).any(axis=1)
    mse_mean = np.full(lambdas.size, np.nan)
    mse_sd = np.full(lambdas.size, np.nan)
    nz_mean = np.full(lambdas.size, np.nan)
    nz_sd = np.full(lambdas.size, np.nan)
    if valid.any():
        mse_mean[valid] = fold_mse[valid].mean(axis=1)
        mse_sd[valid] = fold_mse[valid].std(axis=1, ddof=1)
        nz_mean[valid] = fold_nonzero[valid].mean(axis=1)
        nz_sd[valid] = fold_nonzero[valid].std(axis=1, ddof=1)

    return CvReport(
        lambdas=lambdas.copy(),
        mse_mean=mse_mean,
        mse_sd=mse_sd,
        nonzero_mean=nz_mean,
        nonzero_sd=nz_sd,
        valid=valid,
        fold_mse=fold_mse,
        fold_nonzero=fold_nonzero,
        k=k,
        seed=int(seed),
        cert_checked=cert_checked,
        cert_failed=cert_failed,
    )


def _stability_index(report: CvReport) -> tuple[int, bool]:
    valid = np.flatnonzero(report.valid)
    if valid.size == 0:
        raise NumericError("every grid row has an invalid cross-validation cell")
    zero = valid[report.nonzero_sd[valid] == 0.0]
    if zero.size:
        return int(zero[0]), True
    sds = report.nonzero_sd[valid]
    best = valid[sds == sds.min()]
    return int(best[-1]), False  # tie -> larger penalty


def lambda_stability(report: CvReport) -> float:
    """Smallest grid value whose support-size SD across folds is exactly zero.

    If no value achieves zero SD, falls back to the minimum-SD value (ties
    broken toward the larger penalty); :func:`select_lambda` flags that case.
    """
    idx, _ = _stability_index(report)
    return float(report.lambdas[idx])


def _mse_index(report: CvReport) -> int:
    valid = np.flatnonzero(report.valid)
    if valid.size == 0:
        raise NumericError("every grid row has an invalid cross-validation cell")
    scores = report.mse_mean[valid]
    best = valid[scores == scores.min()]
    return int(best[-1])  # tie -> larger penalty, the sparser model


def select_lambda(report: CvReport, rule: str = "combined_max") -> SelectionResult:
    """Resolve a cross-validation report into one penalty value.

    rule 'cv_mse' minimizes held-out MSE, 'stability' takes the smallest
    fold-stable penalty, and 'combined_max' takes the larger of the two.
    """
    if rule not in CV_RULES:
        raise ValueError(f"rule must be one of {CV_RULES}, got {rule!r}")
    lam_mse = float(report.lambdas[_mse_index(report)])
    ss_idx, exact = _stability_index(report)
    lam_ss = float(report.lambdas[ss_idx])
    if rule == "cv_mse":
        final = lam_mse
    elif rule == "stability":
        final = lam_ss
    else:
        final = max(lam_mse, lam_ss)
    return SelectionResult(
        lambda_mse=lam_mse,
        lambda_ss=lam_ss,
        lambda_final=final,
        rule=rule,
        stability_exact=exact,
    )


def lambda_ic(criterion: str, n: int, m: int) -> float:
    """Closed-form penalty: 2 for 'aic', ln(n) for 'bic', 2 ln(m) for 'ric'."""
    if criterion not in IC_RULES:
        raise ValueError(f"criterion must be one of {IC_RULES}, got {criterion!r}")
    n, m = int(n), int(m)
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    if m < 1:
        raise ValueError(f"need m >= 1 columns, got {m}")
    if criterion == "aic":
        return 2.0
    if criterion == "bic":
        return math.log(n)
    return 2.0 * math.log(m)
