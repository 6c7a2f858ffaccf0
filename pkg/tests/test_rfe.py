import numpy as np
import pytest

from emovox.learn.rfe import SVMRFE, svm_rfe


def sign_problem(seed, n=40):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    return X, np.where(X[:, 0] > 0, 1, -1)


def test_picks_informative_feature_across_seeds():
    hits = sum(svm_rfe(*sign_problem(s), target_k=1, random_state=s).selected_indices == (0,) for s in range(100))
    assert hits >= 95


def test_identity_when_keeping_everything():
    X, y = sign_problem(0)
    sel = svm_rfe(X, y, target_k=2)
    assert sel.selected_indices == (0, 1)
    assert sel.history == ((0, 1),)


def test_size_ranking_and_nesting():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 23))
    y = np.where(X[:, 3] - X[:, 7] > 0, 1, -1)
    sel = svm_rfe(X, y, target_k=5, step=0.2, random_state=0)
    assert len(sel.selected_indices) == 5
    assert sorted(sel.ranking) == list(range(23))
    assert set(sel.ranking[-5:]) == set(sel.selected_indices)
    for before, after in zip(sel.history, sel.history[1:]):
        assert set(after) < set(before)
        assert len(before) - len(after) == min(int(np.ceil(0.2 * len(before))), len(before) - 5)
    assert {3, 7} <= set(sel.selected_indices)


def test_multiclass_sums_weights():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(90, 6))
    y = np.repeat(["a", "b", "c"], 30)
    X[y == "b", 4] += 4.0
    X[y == "c", 1] -= 4.0
    sel = svm_rfe(X, y, target_k=2, random_state=0)
    assert set(sel.selected_indices) == {1, 4}


def test_ties_drop_higher_index_first():
    X = np.array([[1.0, 5.0, 5.0], [-1.0, 5.0, 5.0], [2.0, 5.0, 5.0], [-2.0, 5.0, 5.0]])
    y = np.array([1, -1, 1, -1])
    sel = svm_rfe(X, y, target_k=2, step=0.1)
    assert sel.ranking[0] == 2
    assert sel.selected_indices == (0, 1)


def test_bad_arguments():
    X, y = sign_problem(0)
    with pytest.raises(ValueError):
        svm_rfe(X, y, target_k=3)
    with pytest.raises(ValueError):
        svm_rfe(X, y, target_k=1, step=0)


def test_selector_transformer():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 8))
    y = np.where(X[:, 2] > 0, 1, -1)
    t = SVMRFE(n_features_to_select=3, random_state=0).fit(X, y)
    assert t.transform(X).shape == (40, 3)
    assert t.get_support()[2]
