import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emovox.corpus import EMOTIONS
from emovox.exceptions import DimensionMismatchError, EmptyInputError, FormatError, MissingClassError, ValidationError
from emovox.fusion import (
    OaaEnsemble,
    calibrate_threshold,
    classification_csv,
    classify,
    classify_with_rejection,
    dumps_model,
    fuse,
    get_taxonomy,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    train_oaa_ensemble,
)
from emovox.learn.normalize import fit_speaker_stats

# confidences on a 1/64 grid so that the transforms below cannot merge distinct values
conf_rows = arrays(np.float64, st.tuples(st.integers(1, 20), st.just(6)), elements=st.integers(0, 64).map(lambda k: k / 64))


def test_argmax_and_tie():
    idx, top, rej = fuse([0.9, 0.1, 0.1, 0.1, 0.1, 0.1])
    assert idx[0] == 0 and top[0] == 0.9 and not rej[0]
    assert fuse([0.2, 0.7, 0.7, 0.1, 0.0, 0.0])[0][0] == 1


def test_reject_rule_boundaries():
    assert fuse([0.4, 0.1], 0.5)[2][0]
    assert not fuse([1.0, 0.0], 1.0)[2][0]
    assert fuse([0.999999, 0.0], 1.0)[2][0]


@settings(max_examples=60, deadline=None)
@given(conf=conf_rows)
def test_monotone_transform_keeps_decision(conf):
    idx = fuse(conf)[0]
    for g in (np.sqrt, lambda v: np.exp(3 * v) - 7.0, lambda v: v**3):
        np.testing.assert_array_equal(fuse(g(conf))[0], idx)
    assert not fuse(conf, 0.0)[2].any()


@settings(max_examples=60, deadline=None)
@given(conf=conf_rows, t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_higher_threshold_classifies_a_subset(conf, t1, t2):
    lo, hi = sorted((t1, t2))
    kept_hi = ~fuse(conf, hi)[2]
    kept_lo = ~fuse(conf, lo)[2]
    assert np.all(kept_lo[kept_hi])


def test_calibrate_threshold_examples():
    c = [0.1, 0.2, 0.3, 0.4]
    assert calibrate_threshold(c, 0.5) == 0.3
    assert calibrate_threshold(c, 1.0) <= min(c)
    x = np.linspace(0.05, 0.95, 10)
    assert (x >= calibrate_threshold(x, 0.8)).sum() == 8
    with pytest.raises(EmptyInputError):
        calibrate_threshold([], 0.5)
    with pytest.raises(ValueError):
        calibrate_threshold(c, 0.0)


@settings(max_examples=60, deadline=None)
@given(conf=arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 1)), cov=st.floats(0.01, 1.0))
def test_calibrated_threshold_meets_coverage(conf, cov):
    kept = (conf >= calibrate_threshold(conf, cov)).mean()
    assert kept >= cov - 1e-12
    if np.unique(conf).size == conf.size:
        assert kept * conf.size == max(1, int(np.ceil(cov * conf.size - 1e-9)))


def test_taxonomies():
    assert get_taxonomy("apn").map(["happy", "sad", "neutral"]).tolist() == ["active", "passive", "neutral"]
    assert get_taxonomy("pnn").map(["positive"]).tolist() == ["positive"]
    with pytest.raises(ValidationError):
        get_taxonomy("emotion6").map(["joy"])
    with pytest.raises(ValueError):
        get_taxonomy("big5")


def test_ensemble_structure(fitted_ensemble):
    e = fitted_ensemble
    assert len(e.estimators_) == 6 and tuple(e.classes_) == EMOTIONS
    assert len(e.selected_) == 40 and e.n_features_in_ == 331
    assert all(p[0] < 0 for p in e.platt_)


@pytest.mark.parametrize("tax, n", [("apn", 3), ("pnn", 3)])
def test_dimensional_taxonomies(gauss_table, tax, n):
    t = gauss_table
    e = train_oaa_ensemble(t.X, t.emotions, tax, {"rfe_k": 20}, seed=1, speakers=t.speaker_ids)
    assert len(e.estimators_) == n


def test_missing_class(gauss_table):
    t = gauss_table
    keep = np.array(t.emotions) != "fear"
    with pytest.raises(MissingClassError, match="fear"):
        OaaEnsemble(rfe_k=10).fit(t.X[keep], np.array(t.emotions)[keep])


def test_dimension_mismatch(fitted_ensemble):
    with pytest.raises(DimensionMismatchError):
        fitted_ensemble.confidences(np.zeros((1, 330)))
    with pytest.raises(DimensionMismatchError):
        classify(fitted_ensemble, np.zeros((2, 331)))


def test_training_accuracy_and_speaker_stats(fitted_ensemble, gauss_table):
    t = gauss_table
    assert np.mean(fitted_ensemble.predict(t.X, t.speaker_ids) == np.array(t.emotions)) > 0.9
    stats = fit_speaker_stats(t.X, t.speaker_ids)["spk01"]
    i = t.speaker_ids.index("spk01")
    a = classify(fitted_ensemble, t.X[i], "x", stats=stats)
    b = classify(fitted_ensemble, fitted_ensemble.normalize(t.X[i : i + 1], ["spk01"])[0], "x")
    assert a == b


def test_classify_with_rejection_thresholds(fitted_ensemble, gauss_table):
    Z = fitted_ensemble.normalize(gauss_table.X, gauss_table.speaker_ids)
    none = [classify_with_rejection(fitted_ensemble, z, 0.0) for z in Z[:10]]
    assert not any(r.rejected for r in none)
    full = [classify_with_rejection(fitted_ensemble, z, 1.0) for z in Z[:10]]
    assert all(r.rejected == (r.max_confidence < 1.0) for r in full)
    with pytest.raises(ValueError):
        classify_with_rejection(fitted_ensemble, Z[0], 1.5)


def test_predict_with_rejection(fitted_ensemble, gauss_table):
    t = gauss_table
    labels, rejected, conf = fitted_ensemble.predict_with_rejection(t.X, t.speaker_ids, threshold=0.6)
    np.testing.assert_array_equal(rejected, conf.max(axis=1) < 0.6)
    np.testing.assert_array_equal(labels, fitted_ensemble.predict(t.X, t.speaker_ids))


def test_model_round_trip_is_exact(fitted_ensemble, gauss_table, tmp_path):
    save_model(fitted_ensemble, tmp_path / "m.json", config={"note": 1}, seed=0)
    back = load_model(tmp_path / "m.json")
    t = gauss_table
    a = fitted_ensemble.predict_confidence(t.X, t.speaker_ids)
    b = back.predict_confidence(t.X, t.speaker_ids)
    assert np.array_equal(a, b)
    assert dumps_model(back, config={"note": 1}, seed=0) == (tmp_path / "m.json").read_text()
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["format_version"] == 1 and len(doc["models"]) == 6
    assert set(doc["models"][0]) >= {"support_vectors", "dual_coef", "bias", "gamma", "C", "platt_a", "platt_b"}
    assert len(doc["selected_indices"]) == 40 and len(doc["ranking"]) == 331


def test_bad_model_files(fitted_ensemble, tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(FormatError):
        load_model(tmp_path / "bad.json")
    doc = model_to_dict(fitted_ensemble)
    doc["format_version"] = 99
    with pytest.raises(FormatError):
        model_from_dict(doc)


def test_csv_contract(fitted_ensemble, gauss_table):
    Z = fitted_ensemble.normalize(gauss_table.X[:3], gauss_table.speaker_ids[:3])
    res = [classify_with_rejection(fitted_ensemble, z, 0.5, f"u{i}") for i, z in enumerate(Z)]
    lines = classification_csv(res, "emotion6").splitlines()
    assert lines[0] == "utterance_id,taxonomy,predicted,max_confidence,rejected," + ",".join(f"conf_{c}" for c in EMOTIONS)
    fields = lines[1].split(",")
    assert fields[0] == "u0" and fields[1] == "emotion6" and fields[4] in ("true", "false")
    assert float(fields[3]) == res[0].max_confidence
    assert len(lines) == 4


def test_fit_is_seed_deterministic(gauss_table):
    t = gauss_table
    a = OaaEnsemble(rfe_k=20, random_state=4).fit(t.X, t.emotions, speakers=t.speaker_ids)
    b = OaaEnsemble(rfe_k=20, random_state=4, n_jobs=2).fit(t.X, t.emotions, speakers=t.speaker_ids)
    assert dumps_model(a) == dumps_model(b)


def test_balance_policies(gauss_table):
    t = gauss_table
    for balance in ("oaa", "none"):
        e = OaaEnsemble(rfe_k=20, balance=balance, random_state=0).fit(t.X, t.emotions, speakers=t.speaker_ids)
        assert np.mean(e.predict(t.X, t.speaker_ids) == np.array(t.emotions)) > 0.8


def test_coverage_product_rounding_does_not_add_a_sample():
    # 0.28 * 25 evaluates to 7.000000000000001 in binary floating point
    c = np.arange(25) / 25
    assert (c >= calibrate_threshold(c, 0.28)).sum() == 7
