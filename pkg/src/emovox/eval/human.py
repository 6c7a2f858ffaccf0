"""Crowd-sourced listener responses: import and accuracy breakdowns."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from ..corpus import AROUSALS, EMOTIONS, VALENCES
from ..exceptions import EmptyInputError, FormatError, ValidationError
from ..fusion import get_taxonomy
from .metrics import confusion_matrix

ANNOTATION_HEADER = (
    "worker_id",
    "utterance_id",
    "emotion_response",
    "apn_response",
    "pnn_response",
    "confidence_flag",
    "worker_gender",
    "worker_age",
)
_REQUIRED = ANNOTATION_HEADER[:6]
CONFIDENCE_FLAGS = ("confident", "unsure")
AGE_BUCKETS = ((18, 29), (30, 39), (40, 49), (50, 59), (60, 200))
UNKNOWN = "NA"

_RESPONSE_COLUMN = {"emotion6": "emotion_response", "apn": "apn_response", "pnn": "pnn_response"}
_VOCAB = {"emotion_response": EMOTIONS, "apn_response": AROUSALS, "pnn_response": VALENCES}


@dataclass(frozen=True)
class Annotation:
    worker_id: str
    utterance_id: str
    emotion_response: str
    apn_response: str
    pnn_response: str
    confidence_flag: str
    worker_gender: str | None = None
    worker_age: int | None = None

    @property
    def confident(self) -> bool:
        return self.confidence_flag == "confident"

    def response(self, taxonomy: str) -> str:
        return getattr(self, _RESPONSE_COLUMN[get_taxonomy(taxonomy).name])


@dataclass(frozen=True)
class AnnotationSet:
    rows: tuple

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def workers(self) -> list[str]:
        return sorted({r.worker_id for r in self.rows})


def age_bucket(age) -> str:
    if age is None:
        return UNKNOWN
    for lo, hi in AGE_BUCKETS:
        if lo <= age <= hi:
            return f"{lo}+" if hi >= 200 else f"{lo}-{hi}"
    return UNKNOWN


def parse_annotations(text: str, manifest, source: str = "<annotations>") -> AnnotationSet:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise FormatError(f"{source}: empty annotation file")
    header = [h.strip() for h in header]
    if tuple(header) not in (ANNOTATION_HEADER, _REQUIRED):
        raise FormatError(f"{source}: header must be {','.join(ANNOTATION_HEADER)}")
    known = {e.utterance_id for e in manifest}
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw:
            continue
        if len(raw) != len(header):
            raise FormatError(f"{source}:{lineno}: expected {len(header)} fields, got {len(raw)}")
        rec = dict(zip(header, (v.strip() for v in raw)))
        for col in _REQUIRED:
            if not rec[col]:
                raise FormatError(f"{source}:{lineno}: empty {col}")
        flag = rec["confidence_flag"].lower()
        if flag not in CONFIDENCE_FLAGS:
            raise FormatError(f"{source}:{lineno}: confidence_flag {rec['confidence_flag']!r} is not confident/unsure")
        for col, vocab in _VOCAB.items():
            rec[col] = rec[col].lower()
            if rec[col] not in vocab:
                raise ValidationError(f"{source}:{lineno}: {col} {rec[col]!r} is not one of {', '.join(vocab)}")
        if rec["utterance_id"] not in known:
            raise ValidationError(f"{source}:{lineno}: utterance_id {rec['utterance_id']!r} is not in the manifest")
        age = rec.get("worker_age") or None
        if age is not None:
            try:
                age = int(age)
            except ValueError:
                raise FormatError(f"{source}:{lineno}: worker_age {age!r} is not an integer") from None
        rows.append(
            Annotation(
                worker_id=rec["worker_id"],
                utterance_id=rec["utterance_id"],
                emotion_response=rec["emotion_response"],
                apn_response=rec["apn_response"],
                pnn_response=rec["pnn_response"],
                confidence_flag=flag,
                worker_gender=(rec.get("worker_gender") or "").lower() or None,
                worker_age=age,
            )
        )
    return AnnotationSet(tuple(rows))


def import_human_annotations(path, manifest) -> AnnotationSet:
    """Read and validate a listener-response CSV against ``manifest``.

    Raises
    ------
    OSError
        File missing or unreadable.
    FormatError
        Bad header, field count, empty required field or unknown confidence flag.
    ValidationError
        Unknown response label or utterance id; the message names the row.
    """
    path = Path(path)
    return parse_annotations(path.read_text(encoding="utf-8"), manifest, str(path))


def _split(rows_ok):
    """``{"n", "correct", "accuracy"}`` for a list of correctness flags."""
    n = len(rows_ok)
    ok = sum(rows_ok)
    return {"n": n, "correct": ok, "accuracy": ok / n if n else None}


def _confidence_split(items, total):
    conf = [ok for ok, a in items if a.confident]
    unsure = [ok for ok, a in items if not a.confident]
    out = {}
    for name, part in (("confident", conf), ("unsure", unsure)):
        d = _split(part)
        d["prevalence"] = len(part) / total if total else None
        out[name] = d
    return out


@dataclass
class HumanReport:
    taxonomy: str
    classes: tuple
    overall: dict
    confidence: dict
    by_speaker_gender: dict
    by_worker_gender: dict
    confusion: object
    samples_by_worker: dict
    """Worker gender -> age bucket -> number of responses (only with age data)."""
    n_workers: int

    def to_dict(self) -> dict:
        return {
            "taxonomy": self.taxonomy,
            "classes": list(self.classes),
            "n_workers": self.n_workers,
            "overall": self.overall,
            "confidence": self.confidence,
            "by_speaker_gender": self.by_speaker_gender,
            "by_worker_gender": self.by_worker_gender,
            "confusion": self.confusion.to_dict(),
            "samples_by_worker": self.samples_by_worker,
        }


def human_report(annotations: AnnotationSet, manifest, taxonomy="emotion6", speaker_genders=None) -> HumanReport:
    """Listener accuracy against the manifest's ground truth.

    Accuracy is split by the listener's own confidence flag (with each
    part's share of all responses), by speaker gender (needs
    ``speaker_genders``) and by listener gender, the latter again broken
    down by speaker gender and confidence.
    """
    if len(annotations) == 0:
        raise EmptyInputError("no annotations to report on")
    tax = get_taxonomy(taxonomy)
    truth_of = {e.utterance_id: tax.mapper(e.emotion) for e in manifest}
    speaker_of = {e.utterance_id: e.speaker_id for e in manifest}
    genders = speaker_genders or {}

    items = [(a.response(tax.name) == truth_of[a.utterance_id], a) for a in annotations]
    total = len(items)

    def by_speaker(subset):
        groups: dict = {}
        for ok, a in subset:
            g = genders.get(speaker_of[a.utterance_id], UNKNOWN)
            groups.setdefault(g, []).append(ok)
        return {g: _split(v) for g, v in sorted(groups.items())} if genders else {}

    by_worker = {}
    worker_groups: dict = {}
    for ok, a in items:
        worker_groups.setdefault(a.worker_gender or UNKNOWN, []).append((ok, a))
    for g, subset in sorted(worker_groups.items()):
        entry = _split([ok for ok, _ in subset])
        entry.update(_confidence_split(subset, len(subset)))
        entry["by_speaker_gender"] = by_speaker(subset)
        by_worker[g] = entry

    samples = {}
    if any(a.worker_age is not None for a in annotations):
        counts = Counter((a.worker_gender or UNKNOWN, age_bucket(a.worker_age)) for a in annotations)
        for (g, b), n in sorted(counts.items()):
            samples.setdefault(g, {})[b] = n

    return HumanReport(
        taxonomy=tax.name,
        classes=tuple(tax.classes),
        overall=_split([ok for ok, _ in items]),
        confidence=_confidence_split(items, total),
        by_speaker_gender=by_speaker(items),
        by_worker_gender=by_worker,
        confusion=confusion_matrix(
            [a.response(tax.name) for a in annotations],
            [truth_of[a.utterance_id] for a in annotations],
            tax.classes,
        ),
        samples_by_worker=samples,
        n_workers=len(annotations.workers),
    )
