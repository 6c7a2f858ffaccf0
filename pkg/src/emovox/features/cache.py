"""Feature cache: one CSV row per utterance, columns ``f1..f331`` in canonical order.

Column ``f{i}`` holds ``feature_names()[i - 1]``.  Floats are written with
``repr`` so a cache reloads to the exact same doubles.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .._io import atomic_write_text
from ..corpus import EMOTIONS, load_utterance
from ..exceptions import FormatError, NoVoicedFramesError, ValidationError
from .utterance import N_FEATURES, FeatureVector, extract_feature_vector

CACHE_HEADER = ["utterance_id", "speaker_id", "emotion"] + [f"f{i}" for i in range(1, N_FEATURES + 1)]


@dataclass(frozen=True)
class FeatureTable:
    """Feature matrix with its row identities.

    Attributes
    ----------
    X : ndarray of shape (n, 331)
    utterance_ids, speaker_ids, emotions : tuple of str
    """

    X: np.ndarray
    utterance_ids: tuple
    speaker_ids: tuple
    emotions: tuple

    def __post_init__(self):
        n = self.X.shape[0]
        if self.X.ndim != 2 or self.X.shape[1] != N_FEATURES:
            raise ValidationError(f"feature table must have {N_FEATURES} columns, got shape {self.X.shape}")
        if not (len(self.utterance_ids) == len(self.speaker_ids) == len(self.emotions) == n):
            raise ValidationError("row identity columns do not match the matrix height")

    def __len__(self):
        return self.X.shape[0]

    @property
    def speakers(self) -> list[str]:
        return sorted(set(self.speaker_ids))

    def subset(self, mask) -> "FeatureTable":
        idx = np.flatnonzero(np.asarray(mask))
        return FeatureTable(
            self.X[idx],
            tuple(self.utterance_ids[i] for i in idx),
            tuple(self.speaker_ids[i] for i in idx),
            tuple(self.emotions[i] for i in idx),
        )

    @classmethod
    def from_vectors(cls, vectors) -> "FeatureTable":
        vectors = list(vectors)
        X = np.vstack([v.values for v in vectors]) if vectors else np.empty((0, N_FEATURES))
        return cls(
            X,
            tuple(v.utterance_id for v in vectors),
            tuple(v.speaker_id for v in vectors),
            tuple(v.emotion or "" for v in vectors),
        )

    def vectors(self):
        for i in range(len(self)):
            yield FeatureVector(self.X[i].copy(), self.utterance_ids[i], self.speaker_ids[i], self.emotions[i] or None)


def dumps_cache(table: FeatureTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CACHE_HEADER)
    for i in range(len(table)):
        w.writerow(
            [table.utterance_ids[i], table.speaker_ids[i], table.emotions[i]]
            + [repr(float(v)) for v in table.X[i]]
        )
    return buf.getvalue()


def write_cache(table: FeatureTable, path) -> None:
    atomic_write_text(Path(path), dumps_cache(table))


def parse_cache(text: str, source: str = "<cache>") -> FeatureTable:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{source}: empty feature cache") from None
    if header != CACHE_HEADER:
        raise FormatError(f"{source}: unexpected cache header (expected utterance_id,speaker_id,emotion,f1..f{N_FEATURES})")
    ids, spk, emo, rows = [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CACHE_HEADER):
            raise FormatError(f"{source}:{lineno}: expected {len(CACHE_HEADER)} fields, got {len(row)}")
        try:
            values = [float(v) for v in row[3:]]
        except ValueError as exc:
            raise FormatError(f"{source}:{lineno}: {exc}") from None
        if row[2] not in EMOTIONS:
            raise ValidationError(f"{source}:{lineno}: unknown emotion {row[2]!r}")
        ids.append(row[0])
        spk.append(row[1])
        emo.append(row[2])
        rows.append(values)
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{source}: duplicate utterance ids in cache")
    X = np.asarray(rows, dtype=np.float64).reshape(-1, N_FEATURES)
    return FeatureTable(X, tuple(ids), tuple(spk), tuple(emo))


def read_cache(path) -> FeatureTable:
    path = Path(path)
    return parse_cache(path.read_text(encoding="utf-8"), str(path))


def _extract_entry(entry, f0_min, f0_max):
    utt = load_utterance(entry)
    try:
        return extract_feature_vector(utt, f0_min=f0_min, f0_max=f0_max), None
    except NoVoicedFramesError as exc:
        return None, str(exc)


def extract_table(manifest, f0_min=50.0, f0_max=500.0, n_jobs=None):
    """Extract every manifest entry into a :class:`FeatureTable`.

    Returns ``(table, skipped)`` where ``skipped`` lists ``(utterance_id,
    reason)`` for utterances without a single voiced frame.  Rows keep
    manifest order whatever ``n_jobs`` is.
    """
    entries = list(manifest)
    results = Parallel(n_jobs=n_jobs)(delayed(_extract_entry)(e, f0_min, f0_max) for e in entries)
    vectors, skipped = [], []
    for entry, (vec, reason) in zip(entries, results):
        if vec is None:
            skipped.append((entry.utterance_id, reason))
        else:
            vectors.append(vec)
    return FeatureTable.from_vectors(vectors), skipped
