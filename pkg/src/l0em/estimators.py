"""Scikit-learn style estimators wrapping the functional core.

The classes follow the usual conventions: all constructor arguments are
stored verbatim (so ``get_params``/``set_params``/``clone`` work), validation
happens in ``fit``, and fitted state lives in trailing-underscore attributes.
"""

import numbers

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import NotFittedError
from .graph import NetworkEstimate, nodewise_network
from .selection import CV_RULES, IC_RULES, cv_mse, lambda_ic, make_grid, select_lambda
from .solver import SolverOptions, fit_lpem
from .validate import as_design, as_response


def _check_fitted(estimator, attr: str):
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call 'fit' first"
        )


class L0Regressor(RegressorMixin, BaseEstimator):
    """Sparse linear regression with an L0 (or general Lp) penalty.

    Parameters
    ----------
    lam : float or {'aic', 'bic', 'ric'}, default='bic'
        Penalty strength; a criterion name resolves it in closed form from
        the training shape.
    p : float, default=0.0
        Penalty exponent in [0, 2].
    tol, threshold, max_iter, nonneg
        Passed to the solver; see :class:`~l0em.solver.SolverOptions`.

    Attributes
    ----------
    coef_ : ndarray of shape (m,)
    support_ : ndarray of selected column indices
    lambda_ : float, resolved penalty
    n_iter_ : int
    converged_ : bool
    fit_result_ : FitResult
    """

    def __init__(self, lam="bic", p=0.0, tol=1e-6, threshold=1e-3,
                 max_iter=1000, nonneg=False):
        self.lam = lam
        self.p = p
        self.tol = tol
        self.threshold = threshold
        self.max_iter = max_iter
        self.nonneg = nonneg

    def _options(self) -> SolverOptions:
        return SolverOptions(p=self.p, tol=self.tol, threshold=self.threshold,
                             max_iter=self.max_iter, nonneg=self.nonneg)

    def _resolve_lam(self, n: int, m: int) -> float:
        if isinstance(self.lam, str):
            return lambda_ic(self.lam, n, m)
        if not isinstance(self.lam, numbers.Real):
            raise ValueError(f"lam must be a number or one of {IC_RULES}, got {self.lam!r}")
        return float(self.lam)

    def fit(self, X, y):
        X = as_design(X)
        y = as_response(y, X.shape[0])
        lam = self._resolve_lam(*X.shape)
        result = fit_lpem(X, y, lam, self._options())
        self.fit_result_ = result
        self.coef_ = result.theta
        self.support_ = result.support
        self.lambda_ = lam
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.intercept_ = 0.0
        return self

    def predict(self, X):
        _check_fitted(self, "coef_")
        X = as_design(X)
        if X.shape[1] != self.coef_.size:
            raise ValueError(
                f"X has {X.shape[1]} columns, model was fit with {self.coef_.size}"
            )
        return X @ self.coef_


class L0RegressorCV(RegressorMixin, BaseEstimator):
    """L0 regression with the penalty chosen by cross-validation.

    Builds a log-spaced grid up to the data-determined maximum, scores it by
    k-fold CV, applies the selection rule, and refits on the full data at the
    chosen penalty (the refit is what ``coef_`` exposes).

    Parameters
    ----------
    rule : {'cv_mse', 'stability', 'combined_max'}, default='combined_max'
    cv : int, default=5
        Fold count.
    grid_size : int, default=100
    lam_min : float, default=1e-4
    p, tol, threshold, max_iter, nonneg
        Solver settings.
    random_state : int, default=0
        Seed for the fold assignment.
    threads : int or None, default=1
        Worker threads for the fold fits (None reads L0EM_THREADS).
    """

    def __init__(self, rule="combined_max", cv=5, grid_size=100, lam_min=1e-4,
                 p=0.0, tol=1e-6, threshold=1e-3, max_iter=1000, nonneg=False,
                 random_state=0, threads=1):
        self.rule = rule
        self.cv = cv
        self.grid_size = grid_size
        self.lam_min = lam_min
        self.p = p
        self.tol = tol
        self.threshold = threshold
        self.max_iter = max_iter
        self.nonneg = nonneg
        self.random_state = random_state
        self.threads = threads

    def fit(self, X, y):
        if self.rule not in CV_RULES:
            raise ValueError(f"rule must be one of {CV_RULES}, got {self.rule!r}")
        X = as_design(X)
        y = as_response(y, X.shape[0])
        options = SolverOptions(p=self.p, tol=self.tol, threshold=self.threshold,
                                max_iter=self.max_iter, nonneg=self.nonneg)
        grid = make_grid(X, y, self.grid_size, self.lam_min, self.p)
        report = cv_mse(X, y, grid, self.cv, self.random_state, options,
                        threads=self.threads)
        selection = select_lambda(report, self.rule)
        result = fit_lpem(X, y, selection.lambda_final, options)
        self.cv_report_ = report
        self.selection_ = selection
        self.lambda_ = selection.lambda_final
        self.fit_result_ = result
        self.coef_ = result.theta
        self.support_ = result.support
        self.converged_ = result.converged
        self.intercept_ = 0.0
        return self

    def predict(self, X):
        _check_fitted(self, "coef_")
        X = as_design(X)
        if X.shape[1] != self.coef_.size:
            raise ValueError(
                f"X has {X.shape[1]} columns, model was fit with {self.coef_.size}"
            )
        return X @ self.coef_


class GraphicalL0(BaseEstimator):
    """Undirected network estimation by nodewise L0 regression.

    Parameters
    ----------
    lam : float or {'aic', 'bic', 'ric'}, default='bic'
        Per-node penalty (criteria resolve from the node's regression shape).
    positive_only : bool, default=False
        Keep only nonnegative partial associations.
    rule : {'or', 'and', 'max_magnitude'}, default='or'
        Edge symmetrization rule.
    tol, threshold, max_iter
        Solver settings for the nodewise fits.
    threads : int or None, default=1

    Attributes
    ----------
    network_ : NetworkEstimate
    weights_ : ndarray of shape (m, m)
    adjacency_ : boolean ndarray of shape (m, m)
    """

    def __init__(self, lam="bic", positive_only=False, rule="or",
                 tol=1e-6, threshold=1e-3, max_iter=1000, threads=1):
        self.lam = lam
        self.positive_only = positive_only
        self.rule = rule
        self.tol = tol
        self.threshold = threshold
        self.max_iter = max_iter
        self.threads = threads

    def fit(self, X, y=None):
        options = SolverOptions(tol=self.tol, threshold=self.threshold,
                                max_iter=self.max_iter)
        network: NetworkEstimate = nodewise_network(
            X, self.lam, positive_only=self.positive_only, options=options,
            rule=self.rule, threads=self.threads,
        )
        self.network_ = network
        self.weights_ = network.weights
        self.adjacency_ = network.adjacency
        return self
