"""Per-frame acoustic descriptors.

All spectral-shape statistics are computed on the power spectrum of the
Hamming-windowed frame zero-padded to 1024 points.  Peak-based descriptors
(roughness, irregularity) use the magnitude spectrum.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.fft import dct

from ..exceptions import DegenerateSpectrumError

N_FFT = 1024
N_MEL = 26
N_MFCC = 12
LPC_ORDER = 18
N_FORMANTS = 4
FORMANT_MIN_HZ = 90.0
FORMANT_EDGE_HZ = 50.0
FORMANT_MAX_BW = 400.0
PRE_EMPHASIS = 0.97
ROLLOFF_FRACTION = 0.85
BRIGHTNESS_CUTOFF = 1500.0
PEAK_FLOOR_DB = -40.0
# window sidelobes of a strong partial can poke above the floor near DC
LEAKAGE_BINS = 8
LEAKAGE_DB = 30.0

FRAME_FEATURE_NAMES = (
    ["f0", "energy"]
    + [f"formant{i}_freq" for i in range(1, N_FORMANTS + 1)]
    + [f"formant{i}_bw" for i in range(1, N_FORMANTS + 1)]
    + [f"mfcc{i}" for i in range(1, N_MFCC + 1)]
    + [
        "zcr",
        "rolloff",
        "brightness",
        "centroid",
        "spread",
        "skewness",
        "kurtosis",
        "flatness",
        "entropy",
        "roughness",
        "irregularity",
    ]
)
N_FRAME_FEATURES = len(FRAME_FEATURE_NAMES)
_COL = {name: i for i, name in enumerate(FRAME_FEATURE_NAMES)}

_TINY = 1e-300


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(fs: float, n_fft: int = N_FFT, n_filters: int = N_MEL, fmin=0.0, fmax=None):
    """Triangular filters equally spaced on the mel scale, shape ``(n_filters, n_fft//2 + 1)``."""
    fmax = fs / 2.0 if fmax is None else fmax
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2))
    freqs = np.arange(n_fft // 2 + 1) * fs / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(up, down))
    fb.setflags(write=False)
    return fb


def levinson_durbin(r, order: int):
    """Solve the Yule-Walker equations for autocorrelation ``r``.

    Returns the predictor polynomial ``a`` (``a[0] == 1``) and the final
    prediction error.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        if err <= 0.0:
            break
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = -acc / err
        a[1:i] = a[1:i] + k * a[i - 1 : 0 : -1]
        a[i] = k
        err *= 1.0 - k * k
    return a, err


def lpc(frame, order: int = LPC_ORDER):
    """Autocorrelation-method LPC of an already windowed frame."""
    x = np.asarray(frame, dtype=np.float64)
    r = np.correlate(x, x, mode="full")[x.size - 1 : x.size + order]
    return levinson_durbin(r, order)[0]


def formants(windowed, fs: float, order: int = LPC_ORDER):
    """First four ``(frequency, bandwidth)`` pairs from LPC root solving.

    Candidates outside ``(90 Hz, fs/2 - 50 Hz)`` or with bandwidth of 400 Hz and
    above are discarded; missing slots are filled with ``(fs/2, 400)``.
    """
    a = lpc(windowed, order)
    roots = np.roots(a)
    roots = roots[np.imag(roots) > 0]
    freq = np.angle(roots) * fs / (2.0 * np.pi)
    with np.errstate(divide="ignore"):
        bw = -np.log(np.abs(roots)) * fs / np.pi
    keep = (freq > FORMANT_MIN_HZ) & (freq < fs / 2.0 - FORMANT_EDGE_HZ) & (bw < FORMANT_MAX_BW)
    order_idx = np.argsort(freq[keep], kind="stable")
    freq, bw = freq[keep][order_idx], bw[keep][order_idx]
    out_f = np.full(N_FORMANTS, fs / 2.0)
    out_b = np.full(N_FORMANTS, FORMANT_MAX_BW)
    n = min(N_FORMANTS, freq.size)
    out_f[:n] = freq[:n]
    out_b[:n] = bw[:n]
    return out_f, out_b


def spectral_peaks(mag):
    """Indices of local maxima within 40 dB of the frame maximum.

    A maximum lying within ``LEAKAGE_BINS`` of a peak that is ``LEAKAGE_DB``
    or more stronger is treated as window leakage and dropped.
    """
    mag = np.asarray(mag)
    top = mag.max()
    if top <= 0:
        return np.zeros(0, dtype=int)
    mid = mag[1:-1]
    is_peak = (mid > mag[:-2]) & (mid >= mag[2:]) & (mid >= top * 10.0 ** (PEAK_FLOOR_DB / 20.0))
    idx = np.flatnonzero(is_peak) + 1
    if idx.size == 0:
        return np.array([int(np.argmax(mag))])
    if idx.size > 1:
        amp = mag[idx]
        near = np.abs(idx[:, None] - idx[None, :]) <= LEAKAGE_BINS
        dominated = near & (amp[None, :] >= amp[:, None] * 10.0 ** (LEAKAGE_DB / 20.0))
        idx = idx[~dominated.any(axis=1)]
    return idx


def roughness(freqs, amps):
    """Sum of Plomp-Levelt dissonance over all pairs of partials (Sethares' parametrisation)."""
    freqs = np.asarray(freqs, dtype=np.float64)
    amps = np.asarray(amps, dtype=np.float64)
    if freqs.size < 2:
        return 0.0
    i, j = np.triu_indices(freqs.size, k=1)
    fmin = np.minimum(freqs[i], freqs[j])
    df = np.abs(freqs[i] - freqs[j])
    s = 0.24 / (0.0207 * fmin + 18.96)
    d = np.exp(-3.51 * s * df) - np.exp(-5.75 * s * df)
    return float(np.sum(amps[i] * amps[j] * d))


def irregularity(amps):
    """Jensen's irregularity: squared successive partial differences over total partial energy."""
    a = np.asarray(amps, dtype=np.float64)
    total = np.sum(a * a)
    if total <= 0:
        return 0.0
    nxt = np.append(a[1:], 0.0)
    return float(np.sum((a - nxt) ** 2) / total)


def frame_feature_matrix(frames, fs: float, f0) -> np.ndarray:
    """Compute the 33 frame descriptors for each row of ``frames``.

    ``f0`` supplies the already-estimated fundamental per frame; it is copied
    into the first column.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    f0 = np.broadcast_to(np.asarray(f0, dtype=np.float64), (frames.shape[0],))
    n_frames, width = frames.shape
    window = np.hamming(width)
    xw = frames * window
    energy = np.sum(xw * xw, axis=1)
    if np.any(energy <= 0.0):
        bad = int(np.flatnonzero(energy <= 0.0)[0])
        raise DegenerateSpectrumError(f"frame {bad} has zero energy after windowing")

    spec = np.fft.rfft(xw, N_FFT, axis=1)
    mag = np.abs(spec)
    power = mag * mag
    freqs = np.arange(power.shape[1]) * fs / N_FFT
    total = power.sum(axis=1)
    p = power / total[:, None]

    out = np.empty((n_frames, N_FRAME_FEATURES))
    out[:, _COL["f0"]] = f0
    out[:, _COL["energy"]] = energy

    mel = power @ mel_filterbank(float(fs)).T
    cep = dct(np.log(np.maximum(mel, _TINY)), type=2, norm="ortho", axis=1)
    out[:, _COL["mfcc1"] : _COL["mfcc1"] + N_MFCC] = cep[:, 1 : N_MFCC + 1]

    signs = np.signbit(frames)
    out[:, _COL["zcr"]] = np.mean(signs[:, 1:] != signs[:, :-1], axis=1)

    cum = np.cumsum(power, axis=1)
    roll_idx = np.argmax(cum >= ROLLOFF_FRACTION * total[:, None], axis=1)
    out[:, _COL["rolloff"]] = freqs[roll_idx]
    out[:, _COL["brightness"]] = power[:, freqs > BRIGHTNESS_CUTOFF].sum(axis=1) / total

    centroid = p @ freqs
    dev = freqs[None, :] - centroid[:, None]
    var = np.sum(p * dev**2, axis=1)
    spread = np.sqrt(var)
    safe = np.where(spread > 0, spread, 1.0)
    out[:, _COL["centroid"]] = centroid
    out[:, _COL["spread"]] = spread
    out[:, _COL["skewness"]] = np.where(spread > 0, np.sum(p * dev**3, axis=1) / safe**3, 0.0)
    out[:, _COL["kurtosis"]] = np.where(spread > 0, np.sum(p * dev**4, axis=1) / safe**4, 0.0)

    log_power = np.log(np.maximum(power, _TINY))
    out[:, _COL["flatness"]] = np.exp(log_power.mean(axis=1)) / power.mean(axis=1)
    plogp = np.where(p > 0, p * np.log(np.maximum(p, _TINY)), 0.0)
    out[:, _COL["entropy"]] = -plogp.sum(axis=1) / np.log(power.shape[1])

    emph = np.concatenate([frames[:, :1], frames[:, 1:] - PRE_EMPHASIS * frames[:, :-1]], axis=1)
    emph *= window
    f_start = _COL["formant1_freq"]
    b_start = _COL["formant1_bw"]
    for i in range(n_frames):
        ff, bb = formants(emph[i], fs)
        out[i, f_start : f_start + N_FORMANTS] = ff
        out[i, b_start : b_start + N_FORMANTS] = bb
        peaks = spectral_peaks(mag[i])
        out[i, _COL["roughness"]] = roughness(freqs[peaks], mag[i, peaks])
        out[i, _COL["irregularity"]] = irregularity(mag[i, peaks])
    return out


def frame_features(frame, fs: float, f0: float) -> dict[str, float]:
    """Named descriptors of a single voiced frame."""
    row = frame_feature_matrix(np.asarray(frame)[None, :], fs, [f0])[0]
    return dict(zip(FRAME_FEATURE_NAMES, row.tolist()))
