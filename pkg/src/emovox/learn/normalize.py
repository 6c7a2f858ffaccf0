"""Per-speaker z-score normalisation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

STD_FLOOR = 1e-8
POLICIES = ("self", "global", "none")


@dataclass(frozen=True)
class SpeakerStats:
    speaker_id: str
    mean: np.ndarray
    std: np.ndarray


def fit_speaker_stats(X, speakers, std_floor: float = STD_FLOOR) -> dict[str, SpeakerStats]:
    """Mean and population std of every feature, separately for each speaker."""
    X = np.asarray(X, dtype=np.float64)
    speakers = np.asarray(speakers)
    stats = {}
    for spk in sorted(set(speakers.tolist())):
        rows = X[speakers == spk]
        std = np.maximum(rows.std(axis=0), std_floor)
        stats[spk] = SpeakerStats(spk, rows.mean(axis=0), std)
    return stats


def zscore_apply(x, stats: SpeakerStats) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - stats.mean) / stats.std


class SpeakerNormalizer(TransformerMixin, BaseEstimator):
    """Z-score each speaker's features with that speaker's own statistics.

    Parameters
    ----------
    policy : {"self", "global", "none"}, default="self"
        How rows from speakers unseen during ``fit`` are treated.  ``"self"``
        computes statistics from those rows themselves (no labels needed);
        ``"global"`` uses mean and std pooled over all training rows; ``"none"``
        leaves every row untouched.
    std_floor : float, default=1e-8

    Notes
    -----
    ``fit`` and ``transform`` take the speaker of each row through the
    ``speakers`` keyword.  Without it all rows are treated with the pooled
    training statistics.
    """

    def __init__(self, policy="self", std_floor=STD_FLOOR):
        self.policy = policy
        self.std_floor = std_floor

    def fit(self, X, y=None, speakers=None):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        self.std_ = np.maximum(X.std(axis=0), self.std_floor)
        self.stats_ = {} if speakers is None else fit_speaker_stats(X, speakers, self.std_floor)
        return self

    def transform(self, X, speakers=None):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if self.policy == "none":
            return X.copy()
        if speakers is None:
            return (X - self.mean_) / self.std_
        speakers = np.asarray(speakers)
        out = np.empty_like(X)
        unseen = sorted(set(speakers.tolist()) - set(self.stats_))
        own = fit_speaker_stats(X, speakers, self.std_floor) if unseen and self.policy == "self" else {}
        for spk in sorted(set(speakers.tolist())):
            rows = speakers == spk
            if spk in self.stats_:
                st = self.stats_[spk]
            elif self.policy == "self":
                st = own[spk]
            else:
                st = SpeakerStats(spk, self.mean_, self.std_)
            out[rows] = zscore_apply(X[rows], st)
        return out

    def fit_transform(self, X, y=None, speakers=None):
        return self.fit(X, y, speakers=speakers).transform(X, speakers=speakers)
