"""SMOTE over-sampling by interpolation between nearest minority neighbours."""

from __future__ import annotations

import numpy as np
from sklearn.neighbors import NearestNeighbors
from sklearn.utils import check_random_state

from ..exceptions import TooFewSamplesError


def smote_oversample(minority, k: int = 5, n_synthetic: int = 0, random_state=None, return_origin=False):
    """Generate ``n_synthetic`` points on segments between minority samples and their neighbours.

    ``k`` is clamped to ``len(minority) - 1``.  With ``return_origin`` the
    ``(base_index, neighbour_index, u)`` arrays are returned too, so that each
    synthetic equals ``x[base] + u * (x[neighbour] - x[base])``.
    """
    X = np.asarray(minority, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("minority samples must be a 2-D array")
    if X.shape[0] < 2:
        raise TooFewSamplesError(f"SMOTE needs at least 2 minority samples, got {X.shape[0]}")
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = check_random_state(random_state)
    n_synthetic = int(n_synthetic)
    empty = np.empty((0, X.shape[1]))
    if n_synthetic <= 0:
        if return_origin:
            return empty, np.empty(0, int), np.empty(0, int), np.empty(0)
        return empty

    k = min(int(k), X.shape[0] - 1)
    nn = NearestNeighbors(n_neighbors=k + 1, algorithm="brute").fit(X)
    neigh = nn.kneighbors(X, return_distance=False)
    # drop self; duplicates may put self at a later position
    table = np.empty((X.shape[0], k), dtype=int)
    for r, row in enumerate(neigh):
        others = row[row != r][:k]
        if others.size < k:
            others = np.concatenate([others, row[:k - others.size]])
        table[r] = others

    base = rng.randint(0, X.shape[0], size=n_synthetic)
    pick = rng.randint(0, k, size=n_synthetic)
    other = table[base, pick]
    u = rng.uniform(0.0, 1.0, size=n_synthetic)
    synth = X[base] + u[:, None] * (X[other] - X[base])
    if return_origin:
        return synth, base, other, u
    return synth


def smote_balance(X, y, k: int = 5, random_state=None, target_count=None):
    """Over-sample every class up to the majority count (or ``target_count``).

    Returns ``(X_resampled, y_resampled, n_synthetic_per_class)``; originals
    come first in their input order, synthetics follow class by class in
    sorted label order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    rng = check_random_state(random_state)
    classes, counts = np.unique(y, return_counts=True)
    target = int(counts.max()) if target_count is None else int(target_count)
    parts_X, parts_y = [X], [y]
    added = {}
    for cls, cnt in zip(classes, counts):
        need = target - int(cnt)
        added[cls.item() if hasattr(cls, "item") else cls] = max(need, 0)
        if need <= 0:
            continue
        synth = smote_oversample(X[y == cls], k=k, n_synthetic=need, random_state=rng)
        parts_X.append(synth)
        parts_y.append(np.full(need, cls, dtype=y.dtype))
    return np.vstack(parts_X), np.concatenate(parts_y), added
