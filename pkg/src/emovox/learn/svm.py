"""Binary soft-margin SVM trained with sequential minimal optimization.

The solver follows the working-set selection that uses second-order
information (Fan, Chen & Lin, 2005): the first index maximally violates the
KKT conditions, the second maximises the guaranteed decrease of the dual
objective.  The full kernel matrix is held in memory, which is fine for the
few thousand training points this package deals with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DimensionMismatchError, NotConvergedError

_TAU = 1e-12
SUPPORT_THRESHOLD = 1e-10


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def linear_kernel(A, B) -> np.ndarray:
    return np.asarray(A, dtype=np.float64) @ np.asarray(B, dtype=np.float64).T


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    n_iter: int
    gap: float
    dual_objective: float


@njit(cache=True)
def _smo_loop(K, y, C, tol, max_iter, alpha, G):
    n = y.shape[0]
    it = 0
    gap = np.inf
    while it < max_iter:
        # first index: maximal violator in I_up
        i = -1
        g_max = -np.inf
        g_min = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > g_max:
                    g_max = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < g_min:
                    g_min = v
        gap = g_max - g_min
        if gap < tol or i < 0:
            break

        # second index: largest second-order decrease within I_low
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                b = g_max + y[t] * G[t]
                if b > 0:
                    q = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if q <= 0:
                        q = _TAU
                    score = -(b * b) / q
                    if score < best:
                        best = score
                        j = t
        if j < 0:
            break

        ai_old = alpha[i]
        aj_old = alpha[j]
        qij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            q = K[i, i] + K[j, j] + 2.0 * qij
            if q <= 0:
                q = _TAU
            delta = (-G[i] - G[j]) / q
            diff = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            elif ai < 0:
                ai = 0.0
                aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            elif aj > C:
                aj = C
                ai = C + diff
        else:
            q = K[i, i] + K[j, j] - 2.0 * qij
            if q <= 0:
                q = _TAU
            delta = (G[i] - G[j]) / q
            total = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            elif aj < 0:
                aj = 0.0
                ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            elif ai < 0:
                ai = 0.0
                aj = total
        alpha[i] = ai
        alpha[j] = aj
        dai = (ai - ai_old) * y[i]
        daj = (aj - aj_old) * y[j]
        for t in range(n):
            G[t] += y[t] * (K[i, t] * dai + K[j, t] * daj)
        it += 1
    return it, gap


def smo_solve(K, y, C: float, tol: float = 1e-3, max_iter: int = 200_000) -> SmoResult:
    """Maximise ``sum(a) - 0.5 a'Qa`` subject to ``0 <= a <= C`` and ``y'a = 0``.

    ``Q = (y y') * K``.  Stops when the maximal KKT violation ``m(a) - M(a)``
    drops below ``tol``.  The decision function is ``sum_i a_i y_i K(x_i, x) - rho``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.size
    alpha = np.zeros(n)
    G = -np.ones(n)
    it, gap = _smo_loop(K, y, float(C), float(tol), int(max_iter), alpha, G)
    if gap >= tol and it >= max_iter:
        raise NotConvergedError(
            f"SMO did not reach tol={tol} within {max_iter} iterations (gap {gap:.3g})",
            {"iterations": int(it), "gap": float(gap), "tol": tol, "n_samples": n},
        )
    np.clip(alpha, 0.0, C, out=alpha)

    pos = y > 0
    neg = ~pos
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        upper = alpha >= C
        lower = alpha <= 0
        ub_mask = (upper & neg) | (lower & pos)
        lb_mask = (upper & pos) | (lower & neg)
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = float((ub + lb) / 2.0)
        else:
            rho = float(ub if np.isfinite(ub) else lb)
    dual = float(alpha.sum() - 0.5 * alpha @ (G + 1.0))
    return SmoResult(alpha, rho, int(it), float(gap), dual)


def dual_objective(alpha, K, y) -> float:
    """``sum(a) - 0.5 a'Qa`` for an arbitrary feasible ``a``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    ya = alpha * np.asarray(y, dtype=np.float64)
    return float(alpha.sum() - 0.5 * ya @ np.asarray(K) @ ya)


class BinarySVC(ClassifierMixin, BaseEstimator):
    """Soft-margin binary SVM with an RBF or linear kernel.

    Parameters
    ----------
    C : float, default=1.0
        Box constraint on the dual coefficients.
    kernel : {"rbf", "linear"}, default="rbf"
    gamma : float or "scale", default="scale"
        RBF width.  ``"scale"`` uses ``1 / (n_features * X.var())``.
    tol : float, default=1e-3
        Stopping tolerance on the maximal KKT violation.
    max_iter : int, default=200000
    random_state : int, RandomState or None
        Seeds the order in which training points are presented to the solver,
        which decides ties in working-set selection.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
        ``classes_[1]`` is the positive class.
    support_ : ndarray
        Indices of training points with ``alpha > 1e-10``.
    support_vectors_ : ndarray of shape (n_SV, n_features)
    dual_coef_ : ndarray of shape (n_SV,)
        ``alpha_i * y_i``.
    intercept_ : float
    alpha_ : ndarray of shape (n_samples,)
        Full dual solution in training order.
    gamma_ : float
    n_iter_ : int
    dual_objective_ : float
    """

    def __init__(self, C=1.0, kernel="rbf", gamma="scale", tol=1e-3, max_iter=200_000, random_state=None):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _gram(self, A, B):
        if self.kernel == "rbf":
            return rbf_kernel(A, B, self.gamma_)
        if self.kernel == "linear":
            return linear_kernel(A, B)
        raise ValueError(f"unknown kernel {self.kernel!r}")

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if self.C <= 0:
            raise ValueError("C must be positive")
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError(f"BinarySVC needs exactly two classes, got {self.classes_.size}")
        ys = np.where(y == self.classes_[1], 1.0, -1.0)

        if self.gamma == "scale":
            var = X.var()
            self.gamma_ = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        else:
            self.gamma_ = float(self.gamma)
            if self.gamma_ <= 0:
                raise ValueError("gamma must be positive")

        rng = check_random_state(self.random_state)
        perm = rng.permutation(X.shape[0])
        Xp, yp = X[perm], ys[perm]
        res = smo_solve(self._gram(Xp, Xp), yp, float(self.C), self.tol, self.max_iter)

        alpha = np.empty_like(res.alpha)
        alpha[perm] = res.alpha
        self.alpha_ = alpha
        self.support_ = np.flatnonzero(alpha > SUPPORT_THRESHOLD)
        self.support_vectors_ = X[self.support_]
        self.dual_coef_ = alpha[self.support_] * ys[self.support_]
        self.intercept_ = -res.rho
        self.n_iter_ = res.n_iter
        self.kkt_gap_ = res.gap
        self.dual_objective_ = res.dual_objective
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def coef_(self):
        """Primal weights, defined for the linear kernel only."""
        check_is_fitted(self, "dual_coef_")
        if self.kernel != "linear":
            raise AttributeError("coef_ is only available for the linear kernel")
        return self.dual_coef_ @ self.support_vectors_

    def decision_function(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"model expects {self.n_features_in_} features, got {X.shape[1]}"
            )
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        return self._gram(X, self.support_vectors_) @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, self.classes_[1], self.classes_[0])


def train_binary_svm(X, y, C=1.0, gamma="scale", tol=1e-3, seed=None, kernel="rbf", max_iter=200_000):
    """Fit a :class:`BinarySVC` on ``y`` in {-1, +1}."""
    return BinarySVC(C=C, kernel=kernel, gamma=gamma, tol=tol, max_iter=max_iter, random_state=seed).fit(X, y)


def svm_decision(model: BinarySVC, x) -> float:
    """Decision value of a single vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("expected a single feature vector")
    return float(model.decision_function(x[None, :])[0])
