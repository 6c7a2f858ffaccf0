import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emovox.exceptions import DimensionMismatchError, NotConvergedError
from emovox.learn.svm import (
    BinarySVC,
    dual_objective,
    linear_kernel,
    rbf_kernel,
    smo_solve,
    svm_decision,
    train_binary_svm,
)
from oracles import svm_bias, svm_dual_pg


def random_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    d = int(rng.integers(1, 5))
    C = (0.5, 1.0, 10.0)[seed % 3]
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y[:2] = (1.0, -1.0)
    gamma = float(rng.uniform(0.3, 2.0))
    return X, y, C, gamma


@pytest.mark.parametrize("seed", range(0, 50, 7))
def test_smo_matches_projected_gradient_oracle(seed):
    X, y, C, gamma = random_problem(seed)
    K = rbf_kernel(X, X, gamma)
    ref = svm_dual_pg(K, y, C)
    res = smo_solve(K, y, C, tol=1e-8)
    ref_obj = dual_objective(ref, K, y)
    assert abs(res.dual_objective - ref_obj) <= 1e-6 * max(1.0, abs(ref_obj))
    f_smo = K @ (res.alpha * y) - res.rho
    f_ref = K @ (ref * y) + svm_bias(ref, K, y, C)
    np.testing.assert_allclose(f_smo, f_ref, atol=1e-5)


def test_default_tolerance_still_close_in_objective():
    X, y, C, gamma = random_problem(3)
    K = rbf_kernel(X, X, gamma)
    ref = svm_dual_pg(K, y, C)
    res = smo_solve(K, y, C)
    assert res.gap < 1e-3
    assert abs(res.dual_objective - dual_objective(ref, K, y)) < 1e-4


def test_symmetric_pair_decision_at_origin_is_zero():
    m = train_binary_svm(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), C=10, gamma=1.0)
    assert svm_decision(m, np.array([0.0])) == pytest.approx(0.0, abs=1e-6)


def test_far_point_decision_equals_bias():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 2))
    y = np.sign(X[:, 0] + 0.1)
    m = train_binary_svm(X, y, gamma=1.0, seed=0)
    assert svm_decision(m, np.array([1e3, -1e3])) == pytest.approx(m.intercept_, abs=1e-9)


def test_single_support_vector_kernel_identity():
    m = BinarySVC(gamma=0.7)
    m.gamma_ = 0.7
    m.support_vectors_ = np.array([[0.3, -0.2]])
    m.dual_coef_ = np.array([1.0])
    m.intercept_ = 0.0
    m.n_features_in_ = 2
    m.classes_ = np.array([-1.0, 1.0])
    assert svm_decision(m, np.array([0.3, -0.2])) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), C=st.sampled_from([0.1, 1.0, 5.0]))
def test_kkt_and_feasibility_of_fitted_models(seed, C):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=30) > 0, 1.0, -1.0)
    if abs(y.sum()) == 30:
        y[0] = -y[0]
    tol = 1e-3
    m = BinarySVC(C=C, gamma=0.5, tol=tol, random_state=seed).fit(X, y)
    alpha = m.alpha_
    ys = np.where(y == m.classes_[1], 1.0, -1.0)
    assert abs(np.dot(alpha, ys)) <= 1e-8
    assert np.all(alpha >= 0) and np.all(alpha <= C + 1e-9)
    stored = np.abs(m.dual_coef_)
    assert np.all(stored > 1e-10) and np.all(stored <= C + 1e-9)
    free = (alpha > 1e-8) & (alpha < C - 1e-8)
    margin = ys * m.decision_function(X)
    if free.any():
        np.testing.assert_allclose(margin[free], 1.0, atol=10 * tol)
    assert np.all(margin[alpha <= 1e-8] >= 1.0 - 10 * tol)
    assert np.all(margin[alpha >= C - 1e-8] <= 1.0 + 10 * tol)


def test_linear_kernel_coef_matches_dual_expansion():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(25, 4))
    y = np.sign(X @ np.array([1.0, -2.0, 0.0, 0.5]))
    m = BinarySVC(kernel="linear", C=1.0, random_state=0).fit(X, y)
    np.testing.assert_allclose(m.decision_function(X), X @ m.coef_ + m.intercept_, atol=1e-10)
    assert np.allclose(linear_kernel(X[:2], X[:3]), X[:2] @ X[:3].T)


def test_rbf_has_no_coef():
    m = BinarySVC().fit(np.array([[0.0], [1.0], [2.0], [3.0]]), [0, 0, 1, 1])
    with pytest.raises(AttributeError):
        m.coef_


def test_string_labels_and_predict():
    X = np.array([[0.0], [0.2], [2.0], [2.2]])
    m = BinarySVC(gamma=1.0).fit(X, ["no", "no", "yes", "yes"])
    assert list(m.predict(X)) == ["no", "no", "yes", "yes"]


def test_seed_controls_result_and_order_does_not_matter_much():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3))
    y = np.sign(X[:, 1])
    a = BinarySVC(random_state=1).fit(X, y).decision_function(X)
    b = BinarySVC(random_state=1).fit(X, y).decision_function(X)
    c = BinarySVC(random_state=2, tol=1e-8).fit(X, y).decision_function(X)
    d = BinarySVC(random_state=3, tol=1e-8).fit(X, y).decision_function(X)
    assert np.array_equal(a, b)
    np.testing.assert_allclose(c, d, atol=1e-5)


def test_dimension_mismatch():
    m = BinarySVC().fit(np.array([[0.0, 1.0], [1.0, 0.0]]), [-1, 1])
    with pytest.raises(DimensionMismatchError):
        m.decision_function(np.zeros((1, 3)))
    with pytest.raises(DimensionMismatchError):
        svm_decision(m, np.zeros((2, 2)))


def test_not_converged_carries_diagnostics():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 2))
    y = np.where(rng.random(60) < 0.5, -1.0, 1.0)
    with pytest.raises(NotConvergedError) as info:
        smo_solve(rbf_kernel(X, X, 1.0), y, 10.0, tol=1e-12, max_iter=5)
    assert info.value.diagnostics["iterations"] == 5
    assert info.value.diagnostics["gap"] > 1e-12


def test_invalid_parameters():
    X = np.array([[0.0], [1.0]])
    with pytest.raises(ValueError):
        BinarySVC(C=0).fit(X, [0, 1])
    with pytest.raises(ValueError):
        BinarySVC(gamma=-1.0).fit(X, [0, 1])
    with pytest.raises(ValueError):
        BinarySVC().fit(np.zeros((3, 1)), [0, 1, 2])


def test_clone_and_params():
    from sklearn.base import clone

    m = BinarySVC(C=3.0, gamma=0.2)
    assert clone(m).get_params()["C"] == 3.0
