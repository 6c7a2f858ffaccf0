"""Leave-one-speaker-out evaluation of the one-against-all ensemble."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from ..config import RunConfig
from ..corpus import CorpusManifest
from ..exceptions import EmovoxError, FormatError, TooFewSpeakersError
from ..features.cache import FeatureTable, extract_table
from ..fusion import OaaEnsemble, calibrate_threshold, fuse, get_taxonomy
from .metrics import ConfusionMatrix, CoverageRow, confusion_matrix, coverage_accuracy


@dataclass(frozen=True)
class LosoFold:
    test_speaker: str
    train_ids: frozenset
    test_ids: frozenset


def _rows(data):
    """(utterance_id, speaker_id) pairs of a manifest or feature table."""
    if isinstance(data, FeatureTable):
        return list(zip(data.utterance_ids, data.speaker_ids))
    return [(e.utterance_id, e.speaker_id) for e in data]


def loso_split(data) -> list[LosoFold]:
    """One fold per speaker, ordered by speaker id."""
    rows = _rows(data)
    speakers = sorted({s for _, s in rows})
    if len(speakers) < 2:
        raise TooFewSpeakersError(f"leave-one-speaker-out needs at least 2 speakers, got {len(speakers)}")
    folds = []
    for spk in speakers:
        test = frozenset(u for u, s in rows if s == spk)
        train = frozenset(u for u, s in rows if s != spk)
        folds.append(LosoFold(spk, train, test))
    return folds


def fold_seed(master_seed, speaker_id: str) -> int:
    """Seed of one fold, a hash of the master seed and the held-out speaker."""
    digest = hashlib.sha256(f"{master_seed}\x00{speaker_id}".encode()).digest()
    return int.from_bytes(digest[:4], "little") & 0x7FFFFFFF


def load_speaker_genders(path) -> dict[str, str]:
    """Read a ``speaker_id,gender`` CSV into a dict; gender values are lower-cased."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["speaker_id", "gender"]:
            raise FormatError(f"{path}: header must be exactly 'speaker_id,gender'")
        out = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            out[row[0].strip()] = row[1].strip().lower()
    return out


@dataclass
class FoldResult:
    test_speaker: str
    seed: int
    utterance_ids: list
    truths: list
    predictions: list
    confidences: np.ndarray
    thresholds: dict
    """Coverage target -> threshold calibrated on the training speakers' confidences."""
    contributors: dict = field(default_factory=dict)
    """Pipeline stage -> speakers whose rows reached that stage."""

    @property
    def max_confidence(self) -> np.ndarray:
        return self.confidences.max(axis=1)

    @property
    def correct(self) -> np.ndarray:
        return np.asarray(self.truths, dtype=object) == np.asarray(self.predictions, dtype=object)


INNER_SPLITS = 3


def inner_confidences(train: FeatureTable, taxonomy, config: RunConfig, seed: int) -> np.ndarray:
    """Out-of-fold maximal confidences of the training rows.

    The training speakers are split into up to three groups; each group is
    scored by an ensemble fitted on the others.  Only training speakers are
    touched.
    """
    speakers = train.speakers
    n_splits = min(INNER_SPLITS, len(speakers))
    out = np.empty(len(train))
    spk = np.asarray(train.speaker_ids, dtype=object)
    if n_splits < 2:
        raise TooFewSpeakersError("inner calibration needs at least 2 training speakers")
    for k in range(n_splits):
        held = np.isin(spk, speakers[k::n_splits])
        fit_part, score_part = train.subset(~held), train.subset(held)
        ens = OaaEnsemble(taxonomy=taxonomy, random_state=seed + k + 1, **config.ensemble_params())
        ens.fit(fit_part.X, fit_part.emotions, speakers=fit_part.speaker_ids)
        out[held] = ens.confidences(ens.normalize(score_part.X, speakers=score_part.speaker_ids)).max(axis=1)
    return out


def _run_fold(table: FeatureTable, fold: LosoFold, taxonomy, config: RunConfig, seed: int) -> FoldResult:
    tax = get_taxonomy(taxonomy)
    spk = np.asarray(table.speaker_ids, dtype=object)
    test_mask = spk == fold.test_speaker
    train, test = table.subset(~test_mask), table.subset(test_mask)
    try:
        ens = OaaEnsemble(taxonomy=tax.name, random_state=seed, **config.ensemble_params())
        ens.fit(train.X, train.emotions, speakers=train.speaker_ids)
        conf = ens.confidences(ens.normalize(test.X, speakers=test.speaker_ids))
        if config.calibration == "inner":
            held_in = inner_confidences(train, tax.name, config, seed)
        else:
            held_in = ens.train_max_confidence_
    except EmovoxError as exc:
        try:
            wrapped = type(exc)(f"fold {fold.test_speaker!r}: {exc}")
        except TypeError:
            raise exc
        raise wrapped from exc
    idx, _, _ = fuse(conf)
    thresholds = {float(c): calibrate_threshold(held_in, c) for c in config.coverage}
    return FoldResult(
        test_speaker=fold.test_speaker,
        seed=seed,
        utterance_ids=list(test.utterance_ids),
        truths=list(tax.map(test.emotions)),
        predictions=[str(c) for c in ens.classes_[idx]],
        confidences=conf,
        thresholds=thresholds,
        contributors={k: sorted(v) for k, v in ens.fit_log_.items()},
    )


@dataclass
class EvaluationReport:
    """Pooled outcome of all folds for one taxonomy.

    ``coverage_pooled`` calibrates each threshold on the pooled test
    confidences, so every requested coverage is met exactly (up to ties).
    ``coverage_calibrated`` applies the per-fold thresholds learned on the
    training speakers, which is what a deployed system would do; its
    realised coverage is reported alongside.
    """

    taxonomy: str
    classes: tuple
    seed: object
    config: dict
    folds: list
    confusion: ConfusionMatrix
    coverage_pooled: list
    coverage_calibrated: list
    by_speaker_gender: dict

    @property
    def n(self) -> int:
        return sum(len(f.truths) for f in self.folds)

    @property
    def accuracy_micro(self) -> float:
        return float(sum(int(f.correct.sum()) for f in self.folds) / self.n)

    @property
    def accuracy_macro(self) -> float:
        return float(np.mean([f.correct.mean() for f in self.folds]))

    def to_dict(self) -> dict:
        folds = []
        for f in self.folds:
            folds.append(
                {
                    "test_speaker": f.test_speaker,
                    "seed": f.seed,
                    "n_test": len(f.truths),
                    "n_correct": int(f.correct.sum()),
                    "accuracy": float(f.correct.mean()),
                    "thresholds": {repr(k): v for k, v in sorted(f.thresholds.items())},
                    "contributors": f.contributors,
                    "predictions": [
                        {
                            "utterance_id": u,
                            "truth": t,
                            "predicted": p,
                            "confidences": dict(zip(self.classes, map(float, row))),
                        }
                        for u, t, p, row in zip(f.utterance_ids, f.truths, f.predictions, f.confidences)
                    ],
                }
            )
        return {
            "taxonomy": self.taxonomy,
            "classes": list(self.classes),
            "seed": self.seed,
            "config": self.config,
            "n_utterances": self.n,
            "accuracy_micro": self.accuracy_micro,
            "accuracy_macro": self.accuracy_macro,
            "confusion": self.confusion.to_dict(),
            "coverage_pooled": [r.to_dict() for r in self.coverage_pooled],
            "coverage_calibrated": [r.to_dict() for r in self.coverage_calibrated],
            "by_speaker_gender": self.by_speaker_gender,
            "folds": folds,
        }


def _calibrated_rows(folds, coverages) -> list[CoverageRow]:
    rows = []
    for c in coverages:
        c = float(c)
        n_cls = n_rej = ok_cls = ok_rej = 0
        for f in folds:
            keep = f.max_confidence >= f.thresholds[c]
            ok = f.correct
            n_cls += int(keep.sum())
            n_rej += int((~keep).sum())
            ok_cls += int(ok[keep].sum())
            ok_rej += int(ok[~keep].sum())
        # thresholds differ per fold; the pooled row carries no single one
        rows.append(CoverageRow(c, None, n_cls, n_rej, ok_cls, ok_rej))
    return rows


def _gender_accuracy(folds, genders) -> dict:
    if not genders:
        return {}
    tally: dict = {}
    for f in folds:
        g = genders.get(f.test_speaker, "unknown")
        n, ok = tally.get(g, (0, 0))
        tally[g] = (n + len(f.truths), ok + int(f.correct.sum()))
    return {g: {"n": n, "correct": ok, "accuracy": ok / n} for g, (n, ok) in sorted(tally.items())}


def run_loso(
    data,
    taxonomy="emotion6",
    config: RunConfig | None = None,
    seed=None,
    n_jobs=None,
    speaker_genders: dict | None = None,
) -> EvaluationReport:
    """Train on all speakers but one, test on the one left out, for every speaker.

    Parameters
    ----------
    data : FeatureTable or CorpusManifest
        A manifest is run through feature extraction first; utterances
        without voiced frames are dropped.
    taxonomy : {"emotion6", "apn", "pnn"}
    config : RunConfig, optional
    seed : int, optional
        Master seed; defaults to ``config.seed``.  Each fold derives its own
        seed from it and the held-out speaker, so results do not depend on
        ``n_jobs``.
    speaker_genders : dict, optional
        ``speaker_id -> gender`` for the per-gender accuracy breakdown.
    """
    config = config or RunConfig()
    seed = config.seed if seed is None else seed
    tax = get_taxonomy(taxonomy)
    if isinstance(data, CorpusManifest):
        data, _ = extract_table(data, config.f0_min, config.f0_max, n_jobs=n_jobs)
    folds = loso_split(data)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(data, fold, tax.name, config, fold_seed(seed, fold.test_speaker)) for fold in folds
    )
    truths = [t for f in results for t in f.truths]
    preds = [p for f in results for p in f.predictions]
    max_conf = np.concatenate([f.max_confidence for f in results])
    correct = np.concatenate([f.correct for f in results])
    return EvaluationReport(
        taxonomy=tax.name,
        classes=tuple(tax.classes),
        seed=seed,
        config=config.to_dict(),
        folds=results,
        confusion=confusion_matrix(preds, truths, tax.classes),
        coverage_pooled=coverage_accuracy(max_conf, correct, config.coverage),
        coverage_calibrated=_calibrated_rows(results, config.coverage),
        by_speaker_gender=_gender_accuracy(results, speaker_genders),
    )
