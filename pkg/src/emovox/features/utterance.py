"""Utterance-level feature vector: frame streams, derivatives, statistics and speaking rate.

Canonical ordering of the 331 values::

    for stream in FRAME_FEATURE_NAMES + ["d_" + n for n in FRAME_FEATURE_NAMES]:
        for stat in ("mean", "std", "min", "max", "range"):
            f"{stream}_{stat}"
    "speaking_rate"
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from sklearn.base import BaseEstimator, TransformerMixin

from ..corpus import Utterance
from ..exceptions import NoVoicedFramesError, TooShortError
from .framing import HOP_SECONDS, F0_MAX, F0_MIN, frame_signal, pitch_track
from .spectral import FRAME_FEATURE_NAMES, frame_feature_matrix

STATISTICS = ("mean", "std", "min", "max", "range")
STREAM_NAMES = tuple(FRAME_FEATURE_NAMES) + tuple(f"d_{n}" for n in FRAME_FEATURE_NAMES)
N_STREAMS = len(STREAM_NAMES)
N_FEATURES = N_STREAMS * len(STATISTICS) + 1

RATE_SMOOTHING_SECONDS = 0.100
RATE_PEAK_FRACTION = 0.3
RATE_MIN_GAP_SECONDS = 0.150
# ripples on a plateau are not syllables; a nucleus must stand out of its surroundings
RATE_MIN_PROMINENCE = 0.1


def feature_names() -> list[str]:
    names = [f"{s}_{stat}" for s in STREAM_NAMES for stat in STATISTICS]
    names.append("speaking_rate")
    return names


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    utterance_id: str
    speaker_id: str
    emotion: str | None = None

    def __post_init__(self):
        if self.values.shape != (N_FEATURES,):
            raise ValueError(f"feature vector must have {N_FEATURES} values, got {self.values.shape}")
        self.values.setflags(write=False)


def append_derivatives(rows, hop_seconds: float = HOP_SECONDS) -> np.ndarray:
    """Stack each frame stream with its time derivative along the voiced sequence.

    Interior points use central differences, the two ends one-sided ones; a
    single row gets an all-zero derivative.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] == 0:
        raise ValueError("need at least one frame")
    if rows.shape[0] == 1:
        deriv = np.zeros_like(rows)
    else:
        deriv = np.gradient(rows, hop_seconds, axis=0)
    return np.hstack([rows, deriv])


def aggregate_statistics(rows) -> np.ndarray:
    """Mean, population std, min, max and range of every column, stream-major."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] == 0:
        raise ValueError("need at least one row")
    lo = rows.min(axis=0)
    hi = rows.max(axis=0)
    # clamp so rounding in the mean cannot leave [min, max]
    mean = np.clip(rows.mean(axis=0), lo, hi)
    stats = np.stack([mean, rows.std(axis=0), lo, hi, hi - lo], axis=1)
    return stats.reshape(-1)


def energy_contour(samples, fs: float) -> np.ndarray:
    """Frame energies smoothed by a 100 ms moving average."""
    frames = frame_signal(samples, fs)
    energy = np.sum(frames * frames, axis=1)
    width = max(1, int(round(RATE_SMOOTHING_SECONDS / HOP_SECONDS)))
    return np.convolve(energy, np.ones(width) / width, mode="same")


def speaking_rate(utterance: Utterance) -> float:
    """Syllable nuclei per second, counted as peaks of the smoothed energy contour."""
    fs = utterance.sample_rate
    try:
        contour = energy_contour(utterance.samples, fs)
    except TooShortError:
        return 0.0
    top = contour.max()
    if not np.isfinite(top) or top <= 0:
        return 0.0
    # contour values below a relative 1e-12 are rounding residue of silence
    contour = np.where(contour > top * 1e-12, contour, 0.0)
    peaks, _ = find_peaks(
        np.concatenate([[0.0], contour, [0.0]]),
        height=RATE_PEAK_FRACTION * top,
        distance=max(1, int(round(RATE_MIN_GAP_SECONDS / HOP_SECONDS))),
        prominence=RATE_MIN_PROMINENCE * top,
    )
    return peaks.size / utterance.duration


def voiced_frame_rows(utterance: Utterance, f0_min=F0_MIN, f0_max=F0_MAX) -> np.ndarray:
    """The 33-column frame descriptor matrix over voiced frames only."""
    fs = utterance.sample_rate
    try:
        frames = frame_signal(utterance.samples, fs)
    except TooShortError as exc:
        raise NoVoicedFramesError(f"{utterance.utterance_id}: {exc}") from exc
    voiced, f0, _ = pitch_track(frames, fs, f0_min=f0_min, f0_max=f0_max)
    if not voiced.any():
        raise NoVoicedFramesError(f"{utterance.utterance_id}: no voiced frames")
    return frame_feature_matrix(frames[voiced], fs, f0[voiced])


def extract_feature_vector(utterance: Utterance, f0_min=F0_MIN, f0_max=F0_MAX) -> FeatureVector:
    """Compute the 331-value descriptor of one utterance.

    Raises
    ------
    NoVoicedFramesError
        No frame passed the voicing test; the caller decides whether to skip.
    """
    rows = voiced_frame_rows(utterance, f0_min=f0_min, f0_max=f0_max)
    stats = aggregate_statistics(append_derivatives(rows))
    values = np.append(stats, speaking_rate(utterance))
    return FeatureVector(values, utterance.utterance_id, utterance.speaker_id, utterance.emotion)


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping a sequence of utterances to a feature matrix.

    Parameters
    ----------
    f0_min, f0_max : float
        Pitch search range in Hz.
    n_jobs : int or None
        Passed to :class:`joblib.Parallel`; output order never depends on it.
    """

    def __init__(self, f0_min=F0_MIN, f0_max=F0_MAX, n_jobs=None):
        self.f0_min = f0_min
        self.f0_max = f0_max
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        self.n_features_out_ = N_FEATURES
        return self

    def transform(self, X):
        from joblib import Parallel, delayed

        vectors = Parallel(n_jobs=self.n_jobs)(
            delayed(extract_feature_vector)(u, self.f0_min, self.f0_max) for u in X
        )
        return np.vstack([v.values for v in vectors]) if vectors else np.empty((0, N_FEATURES))

    def get_feature_names_out(self, input_features=None):
        return np.asarray(feature_names(), dtype=object)
