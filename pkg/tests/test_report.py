import json

import numpy as np
import pytest

from emovox.config import RunConfig
from emovox.eval.human import human_report, parse_annotations
from emovox.eval.loso import run_loso
from emovox.eval.metrics import confusion_matrix
from emovox.eval.report import confusion_table, dumps_report, pct, render_table, render_text
from test_human import GENDERS, HEAD, MANIFEST


@pytest.fixture(scope="module")
def machine(gauss_table):
    return {"emotion6": run_loso(gauss_table, "emotion6", RunConfig(rfe_k=30, calibration="train"), seed=2)}


def test_pct_and_table():
    assert pct(0.9287) == "92.9" and pct(None) == "-"
    t = render_table(["a", "bb"], [["x", 1]], "T")
    assert t.splitlines()[0] == "T" and "| x |  1 |" in t


def test_confusion_layout():
    classes = ("anger", "disgust", "fear", "happy", "neutral", "sad")
    truths = ["anger"] * 14 + list(classes[1:])
    preds = ["anger"] * 13 + ["fear"] + list(classes[1:])
    text = confusion_table(confusion_matrix(preds, truths, classes), "Confusion")
    lines = text.splitlines()
    assert "Anger" in lines[2] and "Sad" in lines[2]
    assert lines[4].startswith("| Anger (GT)") and "92.9" in lines[4]
    assert len([l for l in lines if "(GT)" in l]) == 6


def test_text_and_json(machine):
    text = render_text(machine)
    assert "Confident (50.0%)" in text and "Unsure (20.0%)" in text
    assert "listeners" not in text.lower()
    doc = json.loads(dumps_report(machine))
    assert doc["human"] == {} and doc["format_version"] == 1
    rows = np.array(doc["machine"]["emotion6"]["confusion"]["percent"])
    np.testing.assert_allclose(rows.sum(axis=1), 100.0, atol=0.1)


def test_with_listeners(machine):
    rows = "w,u1,happy,active,positive,confident,female,22\nw,u2,anger,active,negative,unsure,female,22\n"
    human = {"emotion6": human_report(parse_annotations(HEAD + rows, MANIFEST), MANIFEST, "emotion6", GENDERS)}
    text = render_text(machine, human)
    assert "All listeners" in text and "Female listeners" in text
    assert "100.0 (50.0% confident)" in text
    assert "Responses by listener gender and age" in text
    assert json.loads(dumps_report(machine, human))["human"]["emotion6"]["overall"]["correct"] == 1
