"""One-against-all SVM ensemble with highest-confidence fusion and a reject option."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._io import atomic_write_text
from .corpus import AROUSAL_OF, AROUSALS, EMOTIONS, VALENCE_OF, VALENCES
from .exceptions import (
    DimensionMismatchError,
    EmptyInputError,
    FormatError,
    MissingClassError,
    ValidationError,
)
from .learn.normalize import SpeakerNormalizer, SpeakerStats
from .learn.platt import fit_platt, platt_probability
from .learn.rfe import FeatureSelection, svm_rfe
from .learn.smote import smote_balance, smote_oversample
from .learn.svm import BinarySVC

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Taxonomy:
    name: str
    classes: tuple[str, ...]
    mapper: Callable[[str], str]

    def map(self, emotions) -> np.ndarray:
        """Map emotion labels (or labels already in this taxonomy) to class names."""
        out = []
        for e in emotions:
            if e in EMOTIONS:
                out.append(self.mapper(e))
            elif e in self.classes:
                out.append(e)
            else:
                raise ValidationError(f"unknown label {e!r} for taxonomy {self.name}")
        return np.asarray(out, dtype=object)


TAXONOMIES = {
    "emotion6": Taxonomy("emotion6", EMOTIONS, str),
    "apn": Taxonomy("apn", AROUSALS, AROUSAL_OF.__getitem__),
    "pnn": Taxonomy("pnn", VALENCES, VALENCE_OF.__getitem__),
}


def get_taxonomy(name) -> Taxonomy:
    if isinstance(name, Taxonomy):
        return name
    try:
        return TAXONOMIES[name]
    except KeyError:
        raise ValueError(f"unknown taxonomy {name!r}; choose from {sorted(TAXONOMIES)}") from None


@dataclass(frozen=True)
class ClassificationResult:
    utterance_id: str
    confidences: dict[str, float]
    predicted: str
    max_confidence: float
    rejected: bool


def fuse(confidences, threshold: float = 0.0):
    """Pick the most confident class and apply the reject rule.

    ``confidences`` has one column per class in canonical order; ties go to
    the lowest column.  Returns ``(index, max_confidence, rejected)`` arrays.
    """
    conf = np.atleast_2d(np.asarray(confidences, dtype=np.float64))
    idx = np.argmax(conf, axis=1)
    top = conf[np.arange(conf.shape[0]), idx]
    return idx, top, top < threshold


def calibrate_threshold(max_confidences, target_coverage: float) -> float:
    """Threshold that keeps (at least) ``target_coverage`` of the given confidences.

    With ``k = ceil(coverage * n)`` samples to classify, the threshold is the
    ``k``-th largest confidence; samples below it are rejected.
    """
    c = np.sort(np.asarray(max_confidences, dtype=np.float64).ravel())
    if c.size == 0:
        raise EmptyInputError("cannot calibrate a threshold on no confidences")
    if not 0 < target_coverage <= 1:
        raise ValueError("target coverage must lie in (0, 1]")
    k = max(1, math.ceil(target_coverage * c.size - 1e-9))
    return float(c[c.size - k])


def _labels_to_taxonomy(y, taxonomy: Taxonomy) -> np.ndarray:
    return taxonomy.map(np.asarray(y, dtype=object))


def _fit_one(cls, Z, labels, balance, smote_k, seed, C, gamma, tol):
    rng = np.random.RandomState(seed)
    yy = np.where(labels == cls, 1.0, -1.0)
    Xb = Z
    if balance == "oaa":
        n_pos = int((yy > 0).sum())
        n_neg = yy.size - n_pos
        if n_neg > n_pos and n_pos >= 2:
            synth = smote_oversample(Z[yy > 0], k=smote_k, n_synthetic=n_neg - n_pos, random_state=rng)
            Xb = np.vstack([Z, synth])
            yy = np.concatenate([yy, np.ones(synth.shape[0])])
    svc = BinarySVC(C=C, kernel="rbf", gamma=gamma, tol=tol, random_state=rng.randint(2**31 - 1))
    svc.fit(Xb, yy)
    a, b, info = fit_platt(svc.decision_function(Xb), yy)
    return svc, (a, b), info


class OaaEnsemble(ClassifierMixin, BaseEstimator):
    """One RBF SVM per class, fused by highest calibrated confidence.

    Training runs speaker z-normalisation, SMOTE balancing, SVM-RFE feature
    selection and then one binary SVM per class, in that order.  Each binary
    classifier's training decisions are mapped to probabilities by Platt
    scaling; these are the per-class confidences.

    Parameters
    ----------
    taxonomy : {"emotion6", "apn", "pnn"}, default="emotion6"
    C : float, default=1.0
    gamma : float or "scale", default="scale"
        ``"scale"`` means ``1 / (k * Var(X))`` over the selected columns.
    tol : float, default=1e-3
    rfe_k : int, default=100
        Number of features kept by SVM-RFE; values at or above the input
        width disable selection.
    rfe_step : float, default=0.1
    rfe_C : float, default=1.0
    smote_k : int, default=5
    balance : {"majority", "oaa", "none"}, default="majority"
        ``"majority"`` over-samples every class to the largest class count
        once, before feature selection.  ``"oaa"`` instead over-samples the
        positive class of each binary problem to the size of its negatives.
    normalization : {"self", "global", "none"}, default="self"
    threshold : float, default=0.0
        Default rejection threshold on the maximal confidence.
    random_state : int or None
    n_jobs : int or None
        Parallel workers for the per-class fits; results do not depend on it.

    Notes
    -----
    ``fit``/``predict`` accept ``speakers=`` with the speaker id of each row.
    After ``fit``, ``fit_log_`` maps each pipeline stage to the set of
    speakers whose rows reached it.
    """

    def __init__(
        self,
        taxonomy="emotion6",
        C=1.0,
        gamma="scale",
        tol=1e-3,
        rfe_k=100,
        rfe_step=0.1,
        rfe_C=1.0,
        smote_k=5,
        balance="majority",
        normalization="self",
        threshold=0.0,
        random_state=None,
        n_jobs=None,
    ):
        self.taxonomy = taxonomy
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.rfe_k = rfe_k
        self.rfe_step = rfe_step
        self.rfe_C = rfe_C
        self.smote_k = smote_k
        self.balance = balance
        self.normalization = normalization
        self.threshold = threshold
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y, speakers=None):
        tax = get_taxonomy(self.taxonomy)
        X = check_array(X, dtype=np.float64)
        labels = _labels_to_taxonomy(y, tax)
        if labels.shape[0] != X.shape[0]:
            raise ValueError("X and y have different lengths")
        missing = [c for c in tax.classes if c not in set(labels)]
        if missing:
            raise MissingClassError(f"training labels lack class(es): {', '.join(missing)}")
        if self.balance not in ("majority", "oaa", "none"):
            raise ValueError(f"unknown balance policy {self.balance!r}")
        spk = None if speakers is None else np.asarray(speakers, dtype=object)
        spk_set = set() if spk is None else set(spk.tolist())

        rng = np.random.RandomState(self.random_state)
        smote_seed, rfe_seed = rng.randint(2**31 - 1, size=2)
        class_seeds = rng.randint(2**31 - 1, size=len(tax.classes))

        self.normalizer_ = SpeakerNormalizer(policy=self.normalization).fit(X, speakers=spk)
        Z = self.normalizer_.transform(X, speakers=spk)
        self.fit_log_ = {"normalization": set(spk_set)}

        if self.balance == "majority":
            Zb, yb, _ = smote_balance(Z, labels, k=self.smote_k, random_state=smote_seed)
        else:
            Zb, yb = Z, labels
        self.fit_log_["smote"] = set(spk_set)

        n_features = X.shape[1]
        if self.rfe_k is None or self.rfe_k >= n_features:
            self.selection_ = FeatureSelection(tuple(range(n_features)), tuple(range(n_features)))
        else:
            self.selection_ = svm_rfe(
                Zb, yb, int(self.rfe_k), self.rfe_step, self.rfe_C, self.tol, random_state=rfe_seed
            )
        self.fit_log_["rfe"] = set(spk_set)
        self.selected_ = np.asarray(self.selection_.selected_indices, dtype=int)
        Zs = Zb[:, self.selected_]

        if self.gamma == "scale":
            var = Zs.var()
            self.gamma_ = 1.0 / (Zs.shape[1] * var) if var > 0 else 1.0
        else:
            self.gamma_ = float(self.gamma)

        fitted = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_one)(cls, Zs, yb, self.balance, self.smote_k, int(seed), self.C, self.gamma_, self.tol)
            for cls, seed in zip(tax.classes, class_seeds)
        )
        self.fit_log_["svm"] = set(spk_set)
        self.classes_ = np.asarray(tax.classes, dtype=object)
        self.estimators_ = [f[0] for f in fitted]
        self.platt_ = [f[1] for f in fitted]
        self.platt_info_ = [f[2] for f in fitted]
        self.n_features_in_ = n_features
        self.train_max_confidence_ = self.confidences(Z).max(axis=1)
        # callers with held-out confidences (see the eval package) may overwrite this
        self.calibration_confidence_ = self.train_max_confidence_
        self.config_ = {}
        return self

    def normalize(self, X, speakers=None):
        check_is_fitted(self, "estimators_")
        return self.normalizer_.transform(X, speakers=speakers)

    def confidences(self, Z) -> np.ndarray:
        """Per-class confidences of rows that are already speaker-normalised."""
        check_is_fitted(self, "estimators_")
        Z = check_array(Z, dtype=np.float64)
        if Z.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(f"expected {self.n_features_in_} features, got {Z.shape[1]}")
        Zs = Z[:, self.selected_]
        cols = [
            platt_probability(est.decision_function(Zs), a, b)
            for est, (a, b) in zip(self.estimators_, self.platt_)
        ]
        return np.column_stack(cols)

    def predict_confidence(self, X, speakers=None) -> np.ndarray:
        """Normalise raw feature rows and return the ``(n, n_classes)`` confidence matrix.

        Rows do not sum to one: each column is an independent one-vs-rest
        probability.
        """
        return self.confidences(self.normalize(X, speakers))

    def predict(self, X, speakers=None):
        idx, _, _ = fuse(self.predict_confidence(X, speakers))
        return self.classes_[idx]

    def predict_with_rejection(self, X, speakers=None, threshold=None):
        """Return ``(labels, rejected, confidences)``; rejected rows keep their argmax label."""
        thr = self.threshold if threshold is None else threshold
        conf = self.predict_confidence(X, speakers)
        idx, _, rejected = fuse(conf, thr)
        return self.classes_[idx], rejected, conf


def train_oaa_ensemble(X, emotions, taxonomy="emotion6", config=None, seed=None, speakers=None) -> OaaEnsemble:
    params = dict(config or {})
    params["taxonomy"] = taxonomy
    params["random_state"] = seed
    return OaaEnsemble(**params).fit(X, emotions, speakers=speakers)


def _result(ensemble, conf_row, threshold, utterance_id=""):
    idx, top, rej = fuse(conf_row[None, :], threshold)
    return ClassificationResult(
        utterance_id=utterance_id,
        confidences={str(c): float(v) for c, v in zip(ensemble.classes_, conf_row)},
        predicted=str(ensemble.classes_[idx[0]]),
        max_confidence=float(top[0]),
        rejected=bool(rej[0]),
    )


def classify(ensemble: OaaEnsemble, vector, utterance_id: str = "", stats: SpeakerStats | None = None) -> ClassificationResult:
    """Classify one feature vector without rejection.

    ``vector`` is taken as already speaker-normalised unless ``stats`` is given.
    """
    return classify_with_rejection(ensemble, vector, 0.0, utterance_id, stats)


def classify_with_rejection(
    ensemble: OaaEnsemble, vector, threshold: float, utterance_id: str = "", stats: SpeakerStats | None = None
) -> ClassificationResult:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    v = np.asarray(vector, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError("expected a single feature vector")
    if stats is not None:
        v = (v - stats.mean) / stats.std
    conf = ensemble.confidences(v[None, :])[0]
    return _result(ensemble, conf, threshold, utterance_id)


def classification_rows(ensemble: OaaEnsemble, utterance_ids, confidences, threshold: float):
    tax = get_taxonomy(ensemble.taxonomy)
    return [_result(ensemble, row, threshold, uid) for uid, row in zip(utterance_ids, confidences)], tax


def classification_csv(results, taxonomy) -> str:
    tax = get_taxonomy(taxonomy)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["utterance_id", "taxonomy", "predicted", "max_confidence", "rejected"] + [f"conf_{c}" for c in tax.classes])
    for r in results:
        w.writerow(
            [r.utterance_id, tax.name, r.predicted, repr(r.max_confidence), "true" if r.rejected else "false"]
            + [repr(r.confidences[c]) for c in tax.classes]
        )
    return buf.getvalue()


# ---------------------------------------------------------------- model files


def _arr(a):
    return np.asarray(a, dtype=np.float64).tolist()


def model_to_dict(ensemble: OaaEnsemble, config=None, seed=None) -> dict:
    check_is_fitted(ensemble, "estimators_")
    norm = ensemble.normalizer_
    models = []
    for cls, est, (a, b) in zip(ensemble.classes_, ensemble.estimators_, ensemble.platt_):
        models.append(
            {
                "class": str(cls),
                "kernel": est.kernel,
                "gamma": float(est.gamma_),
                "C": float(est.C),
                "support_vectors": _arr(est.support_vectors_),
                "dual_coef": _arr(est.dual_coef_),
                "bias": float(est.intercept_),
                "platt_a": float(a),
                "platt_b": float(b),
            }
        )
    params = ensemble.get_params()
    params.pop("n_jobs", None)
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "taxonomy": get_taxonomy(ensemble.taxonomy).name,
        "classes": [str(c) for c in ensemble.classes_],
        "params": params,
        "n_features": int(ensemble.n_features_in_),
        "gamma": float(ensemble.gamma_),
        "selected_indices": [int(i) for i in ensemble.selected_],
        "ranking": [int(i) for i in ensemble.selection_.ranking],
        "normalization": {
            "policy": norm.policy,
            "std_floor": float(norm.std_floor),
            "global_mean": _arr(norm.mean_),
            "global_std": _arr(norm.std_),
            "speakers": {
                str(s): {"mean": _arr(st.mean), "std": _arr(st.std)} for s, st in sorted(norm.stats_.items())
            },
        },
        "threshold": float(ensemble.threshold),
        "train_max_confidence": _arr(ensemble.train_max_confidence_),
        "calibration_confidence": _arr(ensemble.calibration_confidence_),
        "models": models,
        "config": config or {},
        "seed": seed,
    }


def model_from_dict(doc: dict) -> OaaEnsemble:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise FormatError(f"unsupported model format_version {doc.get('format_version')!r}")
    ens = OaaEnsemble(**doc["params"])
    norm_doc = doc["normalization"]
    norm = SpeakerNormalizer(policy=norm_doc["policy"], std_floor=norm_doc["std_floor"])
    norm.mean_ = np.asarray(norm_doc["global_mean"], dtype=np.float64)
    norm.std_ = np.asarray(norm_doc["global_std"], dtype=np.float64)
    norm.n_features_in_ = norm.mean_.size
    norm.stats_ = {
        s: SpeakerStats(s, np.asarray(v["mean"], dtype=np.float64), np.asarray(v["std"], dtype=np.float64))
        for s, v in norm_doc["speakers"].items()
    }
    ens.normalizer_ = norm
    ens.n_features_in_ = int(doc["n_features"])
    ens.gamma_ = float(doc["gamma"])
    ens.selected_ = np.asarray(doc["selected_indices"], dtype=int)
    ens.selection_ = FeatureSelection(tuple(doc["selected_indices"]), tuple(doc["ranking"]))
    ens.classes_ = np.asarray(doc["classes"], dtype=object)
    ens.estimators_ = []
    ens.platt_ = []
    for m in doc["models"]:
        est = BinarySVC(C=m["C"], kernel=m["kernel"], gamma=m["gamma"])
        est.gamma_ = float(m["gamma"])
        sv = np.asarray(m["support_vectors"], dtype=np.float64).reshape(-1, ens.selected_.size)
        est.support_vectors_ = sv
        est.dual_coef_ = np.asarray(m["dual_coef"], dtype=np.float64)
        est.intercept_ = float(m["bias"])
        est.classes_ = np.array([-1.0, 1.0])
        est.n_features_in_ = ens.selected_.size
        ens.estimators_.append(est)
        ens.platt_.append((float(m["platt_a"]), float(m["platt_b"])))
    ens.train_max_confidence_ = np.asarray(doc["train_max_confidence"], dtype=np.float64)
    ens.calibration_confidence_ = np.asarray(doc["calibration_confidence"], dtype=np.float64)
    ens.config_ = dict(doc.get("config") or {})
    return ens


def dumps_model(ensemble: OaaEnsemble, config=None, seed=None) -> str:
    return json.dumps(model_to_dict(ensemble, config, seed), sort_keys=True, indent=1) + "\n"


def save_model(ensemble: OaaEnsemble, path, config=None, seed=None) -> None:
    atomic_write_text(Path(path), dumps_model(ensemble, config, seed))


def load_model(path) -> OaaEnsemble:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not a model file ({exc})") from exc
    return model_from_dict(doc)
