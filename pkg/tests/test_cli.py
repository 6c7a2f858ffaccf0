import json
import subprocess
import sys

import pytest

from emovox import __version__
from emovox.cli import default_cache_path, main
from emovox.corpus import EMOTIONS
from emovox.features.cache import read_cache, write_cache


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, small_corpus, small_table):
    root, _ = small_corpus
    work = tmp_path_factory.mktemp("cli")
    cache = work / "features.csv"
    write_cache(small_table, cache)
    cfg = work / "fast.cfg"
    cfg.write_text("rfe_k = 30\ncalibration = train\n")
    return root, work, cache, cfg


def test_version():
    out = subprocess.run([sys.executable, "-m", "emovox", "--version"], capture_output=True, text=True, check=True)
    assert __version__ in out.stdout


def test_extract_is_reproducible(tmp_path, small_corpus):
    root, _ = small_corpus
    text = (root / "manifest.csv").read_text().splitlines()
    (tmp_path / "three.csv").write_text("\n".join(text[:4]).replace("wav/", f"{root}/wav/") + "\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["extract", "--manifest", str(tmp_path / "three.csv"), "--cache", str(a)]) == 0
    assert main(["extract", "--manifest", str(tmp_path / "three.csv"), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    t = read_cache(a)
    assert t.X.shape == (3, 331)
    assert (tmp_path / "a.csv.skipped.csv").read_text() == "utterance_id,reason\n"


def test_extract_missing_wav(tmp_path, capsys):
    (tmp_path / "m.csv").write_text("utterance_id,wav_path,speaker_id,emotion\nu,nowhere.wav,s,sad\n")
    assert main(["extract", "--manifest", str(tmp_path / "m.csv"), "--cache", str(tmp_path / "c.csv")]) == 1
    assert "nowhere.wav" in capsys.readouterr().err


def test_default_cache_location(monkeypatch, tmp_path):
    monkeypatch.setenv("EMOVOX_CACHE_DIR", str(tmp_path))
    assert default_cache_path("/data/corpus.csv") == tmp_path / "corpus.features.csv"


def test_train_and_classify(workspace, tmp_path, capsys):
    _, work, cache, cfg = workspace
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    for m in (m1, m2):
        assert main(["train", "--cache", str(cache), "--model", str(m), "--config", str(cfg), "--seed", "3"]) == 0
    assert m1.read_bytes() == m2.read_bytes()
    assert len(json.loads(m1.read_text())["models"]) == 6

    out0 = tmp_path / "t0.csv"
    assert main(["classify", "--model", str(m1), "--cache", str(cache), "--threshold", "0", "--out", str(out0)]) == 0
    lines = out0.read_text().splitlines()
    assert lines[0] == "utterance_id,taxonomy,predicted,max_confidence,rejected," + ",".join(f"conf_{c}" for c in EMOTIONS)
    assert len(lines) == 55 and all(l.split(",")[4] == "false" for l in lines[1:])

    assert main(["classify", "--model", str(m1), "--cache", str(cache), "--threshold", "1"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert all((r.split(",")[4] == "true") == (float(r.split(",")[3]) < 1.0) for r in rows)

    assert main(["classify", "--model", str(m1), "--cache", str(cache), "--coverage", "0.5"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert 0 < sum(r.split(",")[4] == "false" for r in rows) < len(rows)


def test_classify_wav(workspace, tmp_path, capsys):
    root, work, cache, cfg = workspace
    m = tmp_path / "m.json"
    assert main(["train", "--cache", str(cache), "--model", str(m), "--config", str(cfg), "--taxonomy", "apn"]) == 0
    wavs = sorted((root / "wav").glob("*.wav"))[:2]
    assert main(["classify", "--model", str(m), "--wav", *map(str, wavs)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].endswith("conf_active,conf_neutral,conf_passive") and len(lines) == 3


def test_train_missing_class(workspace, tmp_path, capsys):
    _, _, cache, cfg = workspace
    t = read_cache(cache)
    write_cache(t.subset([e != "fear" for e in t.emotions]), tmp_path / "nofear.csv")
    assert main(["train", "--cache", str(tmp_path / "nofear.csv"), "--model", str(tmp_path / "m.json"), "--config", str(cfg)]) == 1
    assert "fear" in capsys.readouterr().err
    assert not (tmp_path / "m.json").exists()


def test_evaluate(workspace, tmp_path, capsys):
    root, _, cache, cfg = workspace
    stem = tmp_path / "report"
    args = ["evaluate", "--cache", str(cache), "--config", str(cfg), "--taxonomy", "all", "--coverage", "0.5,0.8,1.0"]
    assert main(args + ["--speakers", str(root / "speakers.csv"), "--out", str(stem)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    shapes = {t: len(doc["machine"][t]["confusion"]["counts"]) for t in ("emotion6", "apn", "pnn")}
    assert shapes == {"emotion6": 6, "apn": 3, "pnn": 3}
    assert all(len(doc["machine"][t]["coverage_pooled"]) == 3 for t in shapes)
    assert doc["human"] == {}
    assert "listeners" not in (tmp_path / "report.txt").read_text().lower()
    assert main(args) == 0
    assert "Coverage-accuracy [pnn]" in capsys.readouterr().out


def test_usage_errors(workspace, capsys):
    _, _, cache, _ = workspace
    with pytest.raises(SystemExit) as info:
        main(["train", "--cache", str(cache)])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--cache", str(cache), "--coverage", "1.5"])
    assert info.value.code == 2
