"""Framing and autocorrelation voicing / F0 detection."""

from __future__ import annotations

import numpy as np

from ..exceptions import TooShortError

WINDOW_SECONDS = 0.060
HOP_SECONDS = 0.010

F0_MIN = 50.0
F0_MAX = 500.0
VOICING_THRESHOLD = 0.30
RMS_GATE = 0.01
# a later lag only wins if its correlation beats the earliest strong peak by this margin
OCTAVE_MARGIN = 0.05


def frame_length(fs: float) -> int:
    return int(round(WINDOW_SECONDS * fs))


def hop_length(fs: float) -> int:
    return int(round(HOP_SECONDS * fs))


def frame_signal(samples, fs: float) -> np.ndarray:
    """Cut ``samples`` into 60 ms frames with a 10 ms hop.

    Returns a read-only ``(n_frames, window)`` view; the trailing remainder
    that does not fill a whole window is dropped.
    """
    x = np.asarray(samples, dtype=np.float64)
    if fs <= 0:
        raise ValueError("sample rate must be positive")
    win, hop = frame_length(fs), hop_length(fs)
    if x.size < win:
        raise TooShortError(f"{x.size} samples is shorter than one {win}-sample window")
    n_frames = 1 + (x.size - win) // hop
    frames = np.lib.stride_tricks.sliding_window_view(x, win)[::hop][:n_frames]
    return frames


def frame_times(n_frames: int, fs: float) -> np.ndarray:
    return np.arange(n_frames) * hop_length(fs) / fs


def nccf(frames, min_lag: int, max_lag: int) -> np.ndarray:
    """Normalized cross-correlation of each frame with its lagged self.

    Entry ``[i, k]`` is the correlation at lag ``min_lag + k``, computed over
    the overlapping part only so that a periodic frame scores 1 at its period.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    n = frames.shape[1]
    if max_lag >= n:
        raise ValueError(f"max lag {max_lag} must be shorter than the frame ({n})")
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(frames, nfft, axis=1)
    acf = np.fft.irfft(spec.real**2 + spec.imag**2, nfft, axis=1)
    lags = np.arange(min_lag, max_lag + 1)
    num = acf[:, lags]
    csum = np.concatenate(
        [np.zeros((frames.shape[0], 1)), np.cumsum(frames**2, axis=1)], axis=1
    )
    head = csum[:, n - lags]
    tail = csum[:, n][:, None] - csum[:, lags]
    den = np.sqrt(np.maximum(head * tail, 0.0))
    out = np.zeros_like(num)
    ok = den > 1e-20
    out[ok] = num[ok] / den[ok]
    return out


def _pick_period(r: np.ndarray, lags: np.ndarray):
    # interior local maxima only, so parabolic interpolation has both neighbours
    mid = r[1:-1]
    is_peak = (mid > r[:-2]) & (mid >= r[2:])
    idx = np.flatnonzero(is_peak) + 1
    if idx.size == 0:
        return 0.0, None
    best = r[idx].max()
    k = idx[np.argmax(r[idx] >= best - OCTAVE_MARGIN)]
    a, b, c = r[k - 1], r[k], r[k + 1]
    denom = a - 2.0 * b + c
    shift = 0.5 * (a - c) / denom if denom < 0 else 0.0
    return float(b), float(lags[k] + shift)


def pitch_track(
    frames,
    fs: float,
    f0_min: float = F0_MIN,
    f0_max: float = F0_MAX,
    threshold: float = VOICING_THRESHOLD,
    rms_gate: float = RMS_GATE,
    reference_rms: float | None = None,
):
    """Voicing decision and F0 for a batch of frames.

    A frame is voiced when its strongest normalized-autocorrelation peak in the
    ``[f0_min, f0_max]`` lag range reaches ``threshold`` and its RMS is at least
    ``rms_gate`` times ``reference_rms`` (default: the loudest frame in the batch).

    Returns
    -------
    voiced : bool array, shape (n_frames,)
    f0 : float array, NaN where unvoiced
    peak : float array, the correlation value of the chosen peak
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    min_lag = max(1, int(np.floor(fs / f0_max)) - 1)
    max_lag = int(np.ceil(fs / f0_min)) + 1
    lags = np.arange(min_lag, max_lag + 1)
    r = nccf(frames, min_lag, max_lag)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    if reference_rms is None:
        reference_rms = float(rms.max()) if rms.size else 0.0

    n = frames.shape[0]
    voiced = np.zeros(n, dtype=bool)
    f0 = np.full(n, np.nan)
    peak = np.zeros(n)
    for i in range(n):
        if rms[i] <= 0.0 or rms[i] < rms_gate * reference_rms:
            continue
        value, lag = _pick_period(r[i], lags)
        peak[i] = value
        if lag is None or value < threshold:
            continue
        freq = fs / lag
        if not (f0_min <= freq <= f0_max):
            continue
        voiced[i] = True
        f0[i] = freq
    return voiced, f0, peak


def detect_voicing(frame, fs: float, reference_rms: float | None = None, **kwargs):
    """Single-frame wrapper around :func:`pitch_track`; returns ``(voiced, f0 or None)``."""
    voiced, f0, _ = pitch_track(np.asarray(frame)[None, :], fs, reference_rms=reference_rms, **kwargs)
    if voiced[0]:
        return True, float(f0[0])
    return False, None
