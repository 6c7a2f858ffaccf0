"""Corpus manifests, WAV loading and the emotion / arousal / valence taxonomies.

Class indices everywhere in the package follow the alphabetical order of the
label names, so ``EMOTIONS.index("anger") == 0``.
"""

from __future__ import annotations

import csv
import io
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ._io import atomic_write_text
from .exceptions import FormatError, UnsupportedFormatError, ValidationError

PIPELINE_RATE = 16000

EMOTIONS = ("anger", "disgust", "fear", "happy", "neutral", "sad")
AROUSALS = ("active", "neutral", "passive")
VALENCES = ("negative", "neutral", "positive")

AROUSAL_OF = {
    "happy": "active",
    "anger": "active",
    "fear": "active",
    "sad": "passive",
    "disgust": "passive",
    "neutral": "neutral",
}
VALENCE_OF = {
    "happy": "positive",
    "sad": "negative",
    "anger": "negative",
    "disgust": "negative",
    "fear": "negative",
    "neutral": "neutral",
}

MANIFEST_HEADER = ("utterance_id", "wav_path", "speaker_id", "emotion")


def map_labels(emotion: str) -> tuple[str, str]:
    """Return the ``(arousal, valence)`` pair for an emotion label."""
    try:
        return AROUSAL_OF[emotion], VALENCE_OF[emotion]
    except KeyError:
        raise ValidationError(f"unknown emotion label {emotion!r}") from None


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    wav_path: Path
    speaker_id: str
    emotion: str


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]
    root: Path = field(default=Path("."), compare=False)

    @property
    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted({e.speaker_id for e in self.entries}))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_id(self) -> dict[str, ManifestEntry]:
        return {e.utterance_id: e for e in self.entries}


@dataclass(frozen=True)
class Utterance:
    utterance_id: str
    speaker_id: str
    samples: np.ndarray
    sample_rate: int
    emotion: str

    def __post_init__(self):
        if self.samples.size == 0:
            raise ValidationError(f"utterance {self.utterance_id!r} has no samples")
        if self.sample_rate <= 0:
            raise ValidationError(f"utterance {self.utterance_id!r}: sample rate must be positive")
        self.samples.setflags(write=False)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def load_manifest(path) -> CorpusManifest:
    """Parse and validate a manifest CSV.

    Relative ``wav_path`` values are resolved against the manifest's directory
    and stored as absolute paths.

    Raises
    ------
    OSError
        The file cannot be read.
    FormatError
        Wrong header or a row with the wrong number of fields.
    ValidationError
        Duplicate utterance id, empty field or unknown emotion.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    return parse_manifest(text, root=path.parent, source=str(path))


def parse_manifest(text: str, root=".", source="<manifest>") -> CorpusManifest:
    root = Path(root)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{source}: empty manifest") from None
    if tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise FormatError(
            f"{source}: header must be {','.join(MANIFEST_HEADER)!r}, got {','.join(header)!r}"
        )
    entries = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise FormatError(f"{source}:{lineno}: expected 4 fields, got {len(row)}")
        uid, wav, spk, emo = (v.strip() for v in row)
        if not uid or not wav or not spk:
            raise ValidationError(f"{source}:{lineno}: empty field")
        if emo not in EMOTIONS:
            raise ValidationError(f"{source}:{lineno}: unknown emotion {emo!r}")
        if uid in seen:
            raise ValidationError(f"{source}:{lineno}: duplicate utterance_id {uid!r}")
        seen.add(uid)
        wav_path = (root / wav).resolve()
        entries.append(ManifestEntry(uid, wav_path, spk, emo))
    return CorpusManifest(tuple(entries), root=root)


def write_manifest(manifest: CorpusManifest, path) -> None:
    """Write ``manifest`` so that :func:`load_manifest` reads it back unchanged.

    Paths under the destination directory are stored relative to it.
    """
    path = Path(path)
    base = path.parent.resolve()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in manifest.entries:
        wav = Path(e.wav_path)
        try:
            wav = wav.resolve().relative_to(base)
        except ValueError:
            wav = wav.resolve()
        writer.writerow([e.utterance_id, wav.as_posix(), e.speaker_id, e.emotion])
    atomic_write_text(path, buf.getvalue())


def _to_float(data: np.ndarray) -> np.ndarray:
    kind = data.dtype
    if kind == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if kind == np.int16:
        return data.astype(np.float64) / 32768.0
    if kind == np.int32:
        # scipy left-justifies 24-bit samples into int32
        return data.astype(np.float64) / 2147483648.0
    if kind in (np.float32, np.float64):
        return data.astype(np.float64)
    raise UnsupportedFormatError(f"unsupported sample type {kind}")


def resample(samples: np.ndarray, rate_in: int, rate_out: int = PIPELINE_RATE) -> np.ndarray:
    """Windowed-sinc (polyphase Kaiser FIR) resampling between integer rates."""
    if rate_in == rate_out:
        return np.asarray(samples, dtype=np.float64)
    ratio = Fraction(int(rate_out), int(rate_in))
    return resample_poly(samples, ratio.numerator, ratio.denominator)


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM/float WAV file into a mono float64 signal in [-1, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(os.fspath(path))
    except ValueError as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    if data.ndim == 2:
        if data.shape[1] > 2:
            raise UnsupportedFormatError(f"{path}: {data.shape[1]} channels, at most 2 supported")
        x = _to_float(data).mean(axis=1)
    else:
        x = _to_float(data)
    return x, int(rate)


def load_utterance(entry: ManifestEntry, rate: int = PIPELINE_RATE) -> Utterance:
    """Load the audio behind a manifest entry at the pipeline rate."""
    x, fs = read_wav(entry.wav_path)
    x = resample(x, fs, rate)
    x = np.nan_to_num(x, nan=0.0, posinf=1.0, neginf=-1.0)
    np.clip(x, -1.0, 1.0, out=x)
    return Utterance(entry.utterance_id, entry.speaker_id, x, rate, entry.emotion)


def write_wav(path, samples: np.ndarray, rate: int = PIPELINE_RATE) -> None:
    """Write a mono signal as 16-bit PCM."""
    pcm = np.round(np.clip(samples, -1.0, 32767 / 32768) * 32768.0).astype(np.int16)
    wavfile.write(os.fspath(path), rate, pcm)
