"""SVM recursive feature elimination with the squared-weight criterion of Guyon et al. (2002).

Ranking uses a linear-kernel SVM even when the final classifier is RBF.  For
more than two classes the criterion is summed over one-vs-rest linear SVMs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted, check_X_y

from .svm import BinarySVC


@dataclass(frozen=True)
class FeatureSelection:
    selected_indices: tuple[int, ...]
    ranking: tuple[int, ...]
    """All feature indices, earliest-eliminated first; the survivors close the list."""
    history: tuple[tuple[int, ...], ...] = field(default=(), compare=False)
    """Surviving feature set before each elimination round, and the final set last."""


def _weights(X, y, C, tol, rng) -> np.ndarray:
    classes = np.unique(y)
    binaries = [classes[1]] if classes.size == 2 else list(classes)
    score = np.zeros(X.shape[1])
    for cls in binaries:
        yy = np.where(y == cls, 1.0, -1.0)
        svc = BinarySVC(C=C, kernel="linear", tol=tol, random_state=rng.randint(2**31 - 1))
        svc.fit(X, yy)
        score += svc.coef_**2
    return score


def svm_rfe(X, y, target_k: int, step: float = 0.1, C: float = 1.0, tol: float = 1e-3, random_state=None) -> FeatureSelection:
    """Eliminate the ``ceil(step * remaining)`` lowest-weight features per round until ``target_k`` remain.

    Equal weights are resolved by dropping the higher feature index first.
    """
    X, y = check_X_y(X, y, dtype=np.float64)
    n_features = X.shape[1]
    if not 1 <= target_k <= n_features:
        raise ValueError(f"target_k must lie in [1, {n_features}], got {target_k}")
    if not 0 < step <= 1:
        raise ValueError("step must be a fraction in (0, 1]")
    rng = check_random_state(random_state)

    remaining = np.arange(n_features)
    eliminated: list[int] = []
    history = []
    while remaining.size > target_k:
        history.append(tuple(int(i) for i in remaining))
        score = _weights(X[:, remaining], y, C, tol, rng)
        n_drop = min(max(1, math.ceil(step * remaining.size)), remaining.size - target_k)
        # lexsort: primary key score ascending, ties -> higher index first
        order = np.lexsort((-remaining, score))
        drop = order[:n_drop]
        eliminated.extend(int(i) for i in remaining[drop])
        remaining = np.delete(remaining, drop)
    history.append(tuple(int(i) for i in remaining))
    ranking = tuple(eliminated) + tuple(int(i) for i in remaining)
    return FeatureSelection(tuple(int(i) for i in remaining), ranking, tuple(history))


class SVMRFE(SelectorMixin, BaseEstimator):
    """Transformer keeping the ``n_features_to_select`` columns chosen by :func:`svm_rfe`."""

    def __init__(self, n_features_to_select=100, step=0.1, C=1.0, tol=1e-3, random_state=None):
        self.n_features_to_select = n_features_to_select
        self.step = step
        self.C = C
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        k = min(int(self.n_features_to_select), X.shape[1])
        self.selection_ = svm_rfe(X, y, k, self.step, self.C, self.tol, self.random_state)
        self.n_features_in_ = X.shape[1]
        self.support_ = np.zeros(X.shape[1], dtype=bool)
        self.support_[list(self.selection_.selected_indices)] = True
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_
