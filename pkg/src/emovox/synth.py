"""Synthetic signals and corpora for testing and demonstrations.

The emotional corpus generator gives each class its own pitch level, pitch
movement, loudness and syllable rate.  Every pseudo-speaker multiplies pitch
and loudness by fixed factors, which per-speaker z-scoring undoes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from ._io import atomic_write_text
from .corpus import EMOTIONS, PIPELINE_RATE, CorpusManifest, ManifestEntry, write_manifest, write_wav
from .features.cache import FeatureTable
from .features.utterance import N_FEATURES


def sine(freq, duration=0.5, fs=PIPELINE_RATE, amplitude=0.5, phase=0.0) -> np.ndarray:
    t = np.arange(int(round(duration * fs))) / fs
    return amplitude * np.sin(2.0 * np.pi * freq * t + phase)


def resonator_coefficients(freq, bandwidth, fs):
    """Denominator of a two-pole resonator with the given centre and bandwidth in Hz."""
    r = np.exp(-np.pi * bandwidth / fs)
    theta = 2.0 * np.pi * freq / fs
    return np.array([1.0, -2.0 * r * np.cos(theta), r * r])


def vowel(
    f0=100.0,
    formants=(700.0, 1220.0, 2600.0, 3400.0),
    bandwidths=(80.0, 90.0, 120.0, 150.0),
    duration=0.5,
    fs=PIPELINE_RATE,
) -> np.ndarray:
    """Impulse train at ``f0`` through a cascade of two-pole resonators, peak-normalised to 0.5."""
    n = int(round(duration * fs))
    x = np.zeros(n)
    x[:: max(1, int(round(fs / f0)))] = 1.0
    for f, b in zip(formants, bandwidths):
        x = lfilter([1.0], resonator_coefficients(f, b, fs), x)
    return 0.5 * x / np.max(np.abs(x))


def bursts(n_bursts, burst_seconds=0.12, gap_seconds=0.18, freq=200.0, fs=PIPELINE_RATE, lead_seconds=0.1):
    """``n_bursts`` Hann-shaped tone bursts separated by silence."""
    burst = sine(freq, burst_seconds, fs) * np.hanning(int(round(burst_seconds * fs)))
    gap = np.zeros(int(round(gap_seconds * fs)))
    lead = np.zeros(int(round(lead_seconds * fs)))
    parts = [lead]
    for _ in range(n_bursts):
        parts += [burst, gap]
    return np.concatenate(parts)


@dataclass(frozen=True)
class ClassProfile:
    f0: float
    """Mean pitch in Hz before the speaker factor."""
    swing: float
    """Pitch modulation depth in semitones."""
    swing_rate: float
    """Pitch modulation frequency in Hz."""
    gain: float
    rate: float
    """Syllables per second."""
    tilt: float
    """Harmonic amplitude decay exponent; lower is brighter."""


PROFILES = {
    "anger": ClassProfile(f0=210.0, swing=3.0, swing_rate=1.5, gain=0.80, rate=5.5, tilt=0.9),
    "disgust": ClassProfile(f0=135.0, swing=1.5, swing_rate=0.7, gain=0.40, rate=3.0, tilt=1.4),
    "fear": ClassProfile(f0=270.0, swing=2.0, swing_rate=6.0, gain=0.45, rate=6.5, tilt=1.2),
    "happy": ClassProfile(f0=240.0, swing=5.0, swing_rate=1.0, gain=0.60, rate=4.5, tilt=1.0),
    "neutral": ClassProfile(f0=155.0, swing=0.7, swing_rate=0.5, gain=0.30, rate=4.0, tilt=1.6),
    "sad": ClassProfile(f0=115.0, swing=0.4, swing_rate=0.4, gain=0.15, rate=2.5, tilt=2.0),
}


@dataclass(frozen=True)
class SpeakerOffset:
    pitch_factor: float
    gain_factor: float
    formant_factor: float


def random_speaker(rng) -> SpeakerOffset:
    return SpeakerOffset(
        pitch_factor=float(rng.uniform(0.8, 1.25)),
        gain_factor=float(rng.uniform(0.5, 1.6)),
        formant_factor=float(rng.uniform(0.92, 1.08)),
    )


def emotional_utterance(profile: ClassProfile, speaker: SpeakerOffset, rng, duration=1.2, fs=PIPELINE_RATE):
    """One synthetic utterance of a class as seen through a speaker."""
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    jitter = rng.normal(0.0, 0.03)
    f0_mean = profile.f0 * speaker.pitch_factor * 2.0 ** jitter
    phase0 = rng.uniform(0, 2 * np.pi)
    f0 = f0_mean * 2.0 ** (profile.swing / 12.0 * np.sin(2 * np.pi * profile.swing_rate * t + phase0))
    phase = 2.0 * np.pi * np.cumsum(f0) / fs

    n_harm = int(4000.0 // (f0_mean * 0.8))
    k = np.arange(1, n_harm + 1)
    amps = k ** -profile.tilt
    src = np.zeros(n)
    for kk, a in zip(k, amps):
        src += a * np.sin(kk * phase) * (kk * f0 < fs / 2 - 200)

    formant_sets = ((700, 1220, 2600), (300, 2300, 3000), (500, 900, 2400), (450, 1700, 2500))
    fset = formant_sets[rng.integers(len(formant_sets))]
    y = src
    for f, b in zip(fset, (90.0, 110.0, 150.0)):
        y = lfilter([1.0 - np.exp(-np.pi * b / fs)], resonator_coefficients(f * speaker.formant_factor, b, fs), y)
    y = y / (np.max(np.abs(y)) + 1e-12)

    # syllable envelope: raised-cosine nuclei at the class rate, 60 % duty cycle
    rate = profile.rate * 2.0 ** rng.normal(0.0, 0.05)
    period = 1.0 / rate
    env = np.zeros(n)
    start = rng.uniform(0.02, 0.08)
    while start + 0.6 * period < duration:
        a = int(start * fs)
        b = int((start + 0.6 * period) * fs)
        env[a:b] = np.hanning(b - a)
        start += period
    gain = profile.gain * speaker.gain_factor * 2.0 ** rng.normal(0.0, 0.05)
    out = gain * env * y + rng.normal(0.0, 1e-4, n)
    return np.clip(out, -1.0, 1.0)


def generate_corpus(
    out_dir,
    n_speakers=5,
    n_per_class=20,
    emotions=EMOTIONS,
    seed=0,
    duration=1.2,
    fs=PIPELINE_RATE,
) -> CorpusManifest:
    """Write a synthetic emotional corpus (WAVs, ``manifest.csv``, ``speakers.csv``) under ``out_dir``.

    Speakers alternate between ``female`` and ``male`` in ``speakers.csv``;
    the label only feeds the per-gender breakdowns.
    """
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    speakers = [(f"spk{i + 1:02d}", random_speaker(rng)) for i in range(n_speakers)]
    entries = []
    for spk_id, offset in speakers:
        for emo in emotions:
            for j in range(n_per_class):
                uid = f"{spk_id}_{emo}_{j:03d}"
                path = wav_dir / f"{uid}.wav"
                write_wav(path, emotional_utterance(PROFILES[emo], offset, rng, duration, fs), fs)
                entries.append(ManifestEntry(uid, path.resolve(), spk_id, emo))
    manifest = CorpusManifest(tuple(entries), out_dir.resolve())
    write_manifest(manifest, out_dir / "manifest.csv")
    lines = ["speaker_id,gender"] + [f"{s},{'female' if i % 2 == 0 else 'male'}" for i, (s, _) in enumerate(speakers)]
    atomic_write_text(out_dir / "speakers.csv", "\n".join(lines) + "\n")
    return manifest


def gaussian_feature_table(
    n_speakers=5,
    n_per_class=20,
    separation=2.0,
    n_informative=10,
    classes=EMOTIONS,
    label_noise=0.0,
    seed=0,
) -> FeatureTable:
    """Feature-level corpus: class means on random informative directions plus speaker offsets.

    Each class mean is ``separation`` times a random unit vector in the
    informative block; the remaining columns are noise.  Every speaker adds a
    fixed offset and scale to all columns.  With ``label_noise > 0`` that
    fraction of the rows closest to another class mean get that class as
    their label, so label errors sit near decision boundaries.
    """
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(len(classes), n_informative))
    means *= separation / np.linalg.norm(means, axis=1, keepdims=True)
    X, spk, lab, ids = [], [], [], []
    for s in range(n_speakers):
        shift = rng.normal(0.0, 3.0, N_FEATURES)
        scale = rng.uniform(0.5, 2.0, N_FEATURES)
        for c, name in enumerate(classes):
            for j in range(n_per_class):
                z = rng.normal(size=N_FEATURES)
                z[:n_informative] += means[c]
                X.append(shift + scale * z)
                spk.append(f"spk{s + 1:02d}")
                lab.append(name)
                ids.append(f"spk{s + 1:02d}_{name}_{j:03d}")
    X = np.asarray(X)
    labels = np.asarray(lab, dtype=object)
    if label_noise > 0:
        n_flip = int(round(label_noise * len(labels)))
        # distance of each row's (speaker-normalised) informative part to every class mean
        Z = np.empty_like(X[:, :n_informative])
        for s in sorted(set(spk)):
            rows = np.asarray(spk) == s
            block = X[rows, :n_informative]
            Z[rows] = (block - block.mean(0)) / block.std(0)
        d = np.linalg.norm(Z[:, None, :] - means[None, :, :], axis=2)
        own = np.array([classes.index(v) for v in labels])
        d_own = d[np.arange(len(own)), own]
        d_masked = d.copy()
        d_masked[np.arange(len(own)), own] = np.inf
        rival = d_masked.argmin(axis=1)
        margin = d_masked.min(axis=1) - d_own
        flip = np.argsort(margin, kind="stable")[:n_flip]
        labels[flip] = [classes[r] for r in rival[flip]]
    return FeatureTable(X, tuple(ids), tuple(spk), tuple(str(v) for v in labels))


def write_speakers_csv(path, genders: dict) -> None:
    lines = ["speaker_id,gender"] + [f"{s},{g}" for s, g in sorted(genders.items())]
    atomic_write_text(Path(path), "\n".join(lines) + "\n")

