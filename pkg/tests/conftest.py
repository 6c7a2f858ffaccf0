import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emovox.synth import generate_corpus  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """3 speakers x 6 emotions x 3 utterances of synthetic audio."""
    root = tmp_path_factory.mktemp("small_corpus")
    manifest = generate_corpus(root, n_speakers=3, n_per_class=3, seed=7, duration=0.8)
    return root, manifest


@pytest.fixture(scope="session")
def small_table(small_corpus):
    from emovox.features.cache import extract_table

    table, skipped = extract_table(small_corpus[1])
    assert not skipped
    return table


@pytest.fixture(scope="session")
def gauss_table():
    from emovox.synth import gaussian_feature_table

    return gaussian_feature_table(n_speakers=3, n_per_class=8, separation=4.0, seed=3)


@pytest.fixture(scope="session")
def fitted_ensemble(gauss_table):
    from emovox.fusion import OaaEnsemble

    t = gauss_table
    return OaaEnsemble(rfe_k=40, random_state=0).fit(t.X, t.emotions, speakers=t.speaker_ids)
