"""Epsilon-insensitive support vector regression trained by SMO.

The dual is posed over 2n box-constrained variables a = [alpha; alpha*] with
signs z = [+1...; -1...] and linear term [eps - y; eps + y], subject to
z.a = 0. Each step picks the maximal violating pair (largest KKT violation),
solves the two-variable subproblem in closed form, and updates the gradient
incrementally; every step strictly increases the dual objective. Training
stops when the violation m(a) - M(a) drops below ``tol``.
"""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .base import ConvergenceError, ModelError, RegressorSpec, TrainedModel

__all__ = ["SvrModel", "fit_svr", "rbf_kernel"]


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for all row pairs."""
    a2 = np.sum(A**2, axis=1)[:, None]
    b2 = np.sum(B**2, axis=1)[None, :]
    sq = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * sq)


class SvrModel(TrainedModel):
    kind = "svr"

    def __init__(
        self,
        column_names,
        spec,
        training_log,
        support_vectors: np.ndarray,
        dual_coef: np.ndarray,
        bias: float,
        gamma: float,
        final_violation: float,
        n_steps: int,
    ):
        super().__init__(column_names, spec, training_log)
        self.support_vectors = np.asarray(support_vectors, dtype=float)
        self.dual_coef = np.asarray(dual_coef, dtype=float)
        self.bias = float(bias)
        self.gamma = float(gamma)
        self.final_violation = float(final_violation)
        self.n_steps = int(n_steps)

    def _predict_values(self, values: np.ndarray) -> np.ndarray:
        if len(values) == 0:
            return np.zeros(0)
        if len(self.support_vectors) == 0:
            return np.full(len(values), self.bias)
        K = rbf_kernel(self.support_vectors, values, self.gamma)
        return self.dual_coef @ K + self.bias


def _resolve_gamma(params: dict, A: np.ndarray) -> float:
    if params["gamma"] == "scale":
        var = float(A.var())
        if var <= 0.0:
            return 1.0
        return 1.0 / (A.shape[1] * var)
    return float(params["gamma"])


def fit_svr(spec: RegressorSpec, X: FeatureMatrix, y: np.ndarray) -> SvrModel:
    params = spec.resolved()
    A = np.asarray(X.values, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ModelError("training matrix contains non-finite values")
    n = len(y)
    C = float(params["C"])
    eps = float(params["epsilon"])
    tol = float(params["tol"])
    max_iter = int(params["max_iter"])
    gamma = _resolve_gamma(params, A)

    K = rbf_kernel(A, A, gamma)
    kdiag = np.diag(K)

    a = np.zeros(2 * n)
    p_lin = np.concatenate([eps - y, eps + y])
    G = p_lin.copy()
    # vals = -z * G; z is +1 on the first block and -1 on the second
    def violation_state():
        vals = np.concatenate([-G[:n], G[n:]])
        up = np.concatenate([a[:n] < C - 0.0, a[n:] > 0.0])
        low = np.concatenate([a[:n] > 0.0, a[n:] < C - 0.0])
        return vals, up, low

    def dual_objective() -> float:
        return -0.5 * float(a @ (G + p_lin))

    curve: list[float] = [dual_objective()]
    sweep = max(n, 1)
    step = 0
    gap = np.inf
    while True:
        vals, up, low = violation_state()
        if not up.any() or not low.any():
            gap = -np.inf
            break
        vi = np.where(up, vals, -np.inf)
        vj = np.where(low, vals, np.inf)
        i = int(np.argmax(vi))
        j = int(np.argmin(vj))
        gap = float(vi[i] - vj[j])
        if gap < tol:
            break
        if step >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge within {max_iter} steps; final KKT violation {gap:.3e}"
            )

        si, sj = i % n, j % n
        eta = float(kdiag[si] + kdiag[sj] - 2.0 * K[si, sj])
        eta = max(eta, 1e-12)
        t = gap / eta
        # box limits along the feasible direction (a_i moves by z_i*t, a_j by -z_j*t)
        t_max_i = (C - a[i]) if i < n else a[i]
        t_max_j = a[j] if j < n else (C - a[j])
        t = min(t, t_max_i, t_max_j)

        a[i] += t if i < n else -t
        a[j] -= t if j < n else -t
        d = t * (K[:, si] - K[:, sj])
        G[:n] += d
        G[n:] -= d

        step += 1
        if step % sweep == 0:
            curve.append(dual_objective())

    curve.append(dual_objective())

    beta = a[:n] - a[n:]
    vals, up, low = violation_state()
    free = (a > 1e-12) & (a < C - 1e-12)
    if free.any():
        bias = float(np.mean(vals[free]))
    else:
        hi = float(np.max(np.where(up, vals, -np.inf))) if up.any() else None
        lo = float(np.min(np.where(low, vals, np.inf))) if low.any() else None
        if hi is None:
            bias = lo if lo is not None else 0.0
        elif lo is None:
            bias = hi
        else:
            bias = 0.5 * (hi + lo)

    keep = np.abs(beta) > 1e-12
    return SvrModel(
        column_names=X.names,
        spec=spec,
        training_log=curve,
        support_vectors=A[keep],
        dual_coef=beta[keep],
        bias=bias,
        gamma=gamma,
        final_violation=gap,
        n_steps=step,
    )
