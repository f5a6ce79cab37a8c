"""Bayesian ridge regression fitted by evidence (type-II likelihood)
maximization.

The posterior mean for fixed precisions is the closed form
``w = alpha * (lambda*I + alpha*X'X)^-1 X'y``; alpha (noise precision) and
lambda (weight precision) are re-estimated from the effective number of
parameters gamma until neither moves by more than ``tol``. The linear system
is solved in whichever of the p x p or n x n forms is smaller.
"""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .base import ModelError, RegressorSpec, TrainedModel

__all__ = ["RidgeModel", "fit_bayesian_ridge", "posterior_mean"]

_EPS = 1e-12
_PRECISION_FLOOR = 1e-10  # keeps lambda*I + alpha*X'X invertible on degenerate data
_PRECISION_CAP = 1e12


def posterior_mean(X: np.ndarray, y: np.ndarray, alpha: float, lambda_: float) -> np.ndarray:
    """Posterior mean weights for fixed precisions (no intercept handling).

    Uses the n x n dual form when p > n via the push-through identity
    ``(lambda*I_p + alpha*X'X)^-1 X' = X' (lambda*I_n + alpha*XX')^-1``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if p <= n:
        gram = lambda_ * np.eye(p) + alpha * (X.T @ X)
        return alpha * np.linalg.solve(gram, X.T @ y)
    outer = lambda_ * np.eye(n) + alpha * (X @ X.T)
    return alpha * (X.T @ np.linalg.solve(outer, y))


class RidgeModel(TrainedModel):
    kind = "bayesian_ridge"

    def __init__(self, column_names, spec, training_log, coef, intercept, alpha, lambda_, n_iter):
        super().__init__(column_names, spec, training_log)
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)
        self.alpha = float(alpha)
        self.lambda_ = float(lambda_)
        self.n_iter = int(n_iter)

    def _predict_values(self, values: np.ndarray) -> np.ndarray:
        return values @ self.coef + self.intercept


def _log_marginal_likelihood(n, p, eigvals, alpha, lambda_, sse, wtw) -> float:
    # eigvals are the nonzero-spectrum candidates of X'X (length min(n, p));
    # the remaining p - len(eigvals) eigenvalues are exactly zero.
    logdet = float(np.sum(np.log(lambda_ + alpha * eigvals)))
    logdet += (p - len(eigvals)) * np.log(lambda_)
    return 0.5 * (
        p * np.log(lambda_)
        + n * np.log(alpha)
        - alpha * sse
        - lambda_ * wtw
        - logdet
        - n * np.log(2.0 * np.pi)
    )


def fit_bayesian_ridge(spec: RegressorSpec, X: FeatureMatrix, y: np.ndarray) -> RidgeModel:
    params = spec.resolved()
    max_iter = int(params["max_iter"])
    tol = float(params["tol"])
    fit_intercept = bool(params["fit_intercept"])

    A = np.asarray(X.values, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ModelError("training matrix contains non-finite values")
    n, p = A.shape
    if fit_intercept:
        x_mean = A.mean(axis=0)
        y_mean = float(y.mean())
        A = A - x_mean
        yc = y - y_mean
    else:
        x_mean = np.zeros(p)
        y_mean = 0.0
        yc = y

    if p <= n:
        eigvals = np.linalg.eigvalsh(A.T @ A)
    else:
        eigvals = np.linalg.eigvalsh(A @ A.T)
    eigvals = np.clip(eigvals, 0.0, None)

    alpha = 1.0 / (float(np.var(y)) + _EPS)
    lambda_ = 1.0
    curve: list[float] = []
    w = np.zeros(p)
    it = 0
    for it in range(1, max_iter + 1):
        w = posterior_mean(A, yc, alpha, lambda_)
        resid = yc - A @ w
        sse = float(resid @ resid)
        wtw = float(w @ w)
        curve.append(_log_marginal_likelihood(n, p, eigvals, alpha, lambda_, sse, wtw))

        gamma = float(np.sum(alpha * eigvals / (lambda_ + alpha * eigvals)))
        lambda_new = min(max(gamma / (wtw + _EPS), _PRECISION_FLOOR), _PRECISION_CAP)
        alpha_new = min(max((n - gamma) / (sse + _EPS), _PRECISION_FLOOR), _PRECISION_CAP)
        if abs(lambda_new - lambda_) < tol and abs(alpha_new - alpha) < tol:
            alpha, lambda_ = alpha_new, lambda_new
            break
        alpha, lambda_ = alpha_new, lambda_new

    w = posterior_mean(A, yc, alpha, lambda_)
    intercept = y_mean - float(x_mean @ w) if fit_intercept else 0.0
    return RidgeModel(
        column_names=X.names,
        spec=spec,
        training_log=curve,
        coef=w,
        intercept=intercept,
        alpha=alpha,
        lambda_=lambda_,
        n_iter=it,
    )
