"""Platt scaling of SVM decision values into probabilities.

Newton's method with backtracking line search on the regularised targets of
Platt (1999), in the numerically careful form of Lin, Lin & Weng (2007).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

FALLBACK = (-1.0, 0.0)


def _nll(a, b, f, t):
    z = a * f + b
    # log(1 + exp(z)) - (1 - t) z, written to avoid overflow
    return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)), (t - 1.0) * z + np.log1p(np.exp(z)))))


def fit_platt(decisions, labels, max_iter: int = 100, min_step: float = 1e-10, sigma: float = 1e-12):
    """Fit ``p(y=+1 | f) = 1 / (1 + exp(a f + b))``.

    Returns ``(a, b, info)``.  ``info["fallback"]`` is True when the fit could
    not produce a finite, increasing sigmoid and ``(-1, 0)`` was used instead.
    """
    f = np.asarray(decisions, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    pos = y > 0
    n_pos = int(pos.sum())
    n_neg = f.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("Platt scaling needs both classes")
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(pos, hi, lo)

    a, b = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    fval = _nll(a, b, f, t)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        z = a * f + b
        ez = np.exp(-np.abs(z))
        p = np.where(z >= 0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + np.dot(f * f, d2)
        h22 = sigma + d2.sum()
        h21 = np.dot(f, d2)
        d1 = t - p
        g1 = np.dot(f, d1)
        g2 = d1.sum()
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            converged = True
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            nf = _nll(na, nb, f, t)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    info = {"iterations": it, "converged": converged, "fallback": False}
    if not (np.isfinite(a) and np.isfinite(b)) or a >= 0:
        a, b = FALLBACK
        info["fallback"] = True
    return float(a), float(b), info


def platt_probability(decisions, a: float, b: float):
    z = a * np.asarray(decisions, dtype=np.float64) + b
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0, ez / (1.0 + ez), 1.0 / (1.0 + ez))


class PlattScaler(TransformerMixin, BaseEstimator):
    """Map decision values to calibrated positive-class probabilities."""

    def __init__(self, max_iter=100):
        self.max_iter = max_iter

    def fit(self, decisions, y):
        self.a_, self.b_, info = fit_platt(decisions, y, max_iter=self.max_iter)
        self.n_iter_ = info["iterations"]
        self.fallback_ = info["fallback"]
        return self

    def transform(self, decisions):
        check_is_fitted(self, "a_")
        return platt_probability(decisions, self.a_, self.b_)
