import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import projected_gradient_dual
from texturekit.errors import DataValidationError, NumericalError
from texturekit.svm import (KernelSpec, SvmModel, dual_objective, fit_svm, kernel_eval, score,
                            train_svm)

KKT_TOL = 1e-3

XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([-1, -1, 1, 1])


def full_alpha(model: SvmModel, n: int) -> np.ndarray:
    a = np.zeros(n)
    a[model.sv_indices] = model.alphas
    return a


def assert_kkt(model: SvmModel, X, y, tol=KKT_TOL):
    """Box, equality and complementary-slackness conditions of the soft-margin dual."""
    y = np.asarray(y, dtype=float)
    a = full_alpha(model, len(y))
    C = model.C
    assert np.all(a >= 0) and np.all(a <= C + 1e-12)
    assert abs(a @ y) < 1e-9 * max(1.0, C)
    m = y * model.decision_function(X)
    for ai, mi in zip(a, m):
        if ai <= 0:
            assert mi >= 1 - tol
        elif ai >= C:
            assert mi <= 1 + tol
        else:
            assert abs(mi - 1) <= tol


def random_problem(seed, n, d, overlap):
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    X = rng.normal(size=(n, d)) + (1 - overlap) * 2 * y[:, None]
    return X, y


def test_kernel_examples():
    assert kernel_eval(KernelSpec.linear(), [1, 2], [3, 4]) == 11
    assert kernel_eval(KernelSpec.sigmoid(1, -9), [3, 0], [3, 5]) == pytest.approx(0)
    u = np.array([3.0, -2.0, 7.0])
    assert kernel_eval(KernelSpec.rbf(0.7), u, u) == 1
    assert kernel_eval(KernelSpec.rbf(40), [0.0], [40.0]) == pytest.approx(np.exp(-0.5))
    assert KernelSpec.parse("mlp") == KernelSpec.sigmoid(1, -9)
    assert KernelSpec.parse("rbf").sigma == 40


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_kernel_symmetry(u, v):
    for spec in (KernelSpec.linear(), KernelSpec.rbf(1.3), KernelSpec.sigmoid(0.5, -1)):
        assert kernel_eval(spec, u, v) == kernel_eval(spec, v, u)


def test_two_point_analytic():
    model = train_svm([[-1.0], [1.0]], [-1, 1], KernelSpec.linear(), C=10)
    for x in (-2.0, -0.3, 0.0, 0.5, 1.7):
        assert model.decision_value([x]) == pytest.approx(x, abs=1e-6)
    assert model.bias == pytest.approx(0, abs=1e-6)
    assert model.w_norm == pytest.approx(1, abs=1e-6)
    assert score(model, [0.5]) == pytest.approx(0.5, abs=1e-6)
    assert score(model, [0.0]) == pytest.approx(0, abs=1e-6)
    assert len(model.alphas) == 2
    assert_kkt(model, [[-1.0], [1.0]], [-1, 1])


def test_xor():
    rbf = train_svm(XOR_X, XOR_Y, KernelSpec.rbf(0.5), C=100)
    assert np.array_equal(rbf.predict(XOR_X), XOR_Y)
    assert_kkt(rbf, XOR_X, XOR_Y)
    lin = train_svm(XOR_X, XOR_Y, KernelSpec.linear(), C=100)
    assert np.mean(lin.predict(XOR_X) == XOR_Y) < 1.0


@pytest.mark.parametrize("kernel", [KernelSpec.linear(), KernelSpec.rbf(1.5), KernelSpec.rbf(40)])
@pytest.mark.parametrize("C", [0.1, 1.0, 10.0])
def test_kkt_suite(kernel, C):
    for seed in range(8):
        X, y = random_problem(seed, 24, 3, overlap=seed / 8)
        model = train_svm(X, y, kernel, C)
        assert_kkt(model, X, y)
        zmodel = fit_svm(X, y, kernel, C)
        assert_kkt(zmodel, X, y)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.sampled_from([0.5, 1.0, 5.0]),
       st.sampled_from(["linear", "rbf"]))
def test_dual_matches_projected_gradient(seed, n, C, kind):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    kernel = KernelSpec.linear() if kind == "linear" else KernelSpec.rbf(1.0)
    model = train_svm(X, y, kernel, C)
    K = kernel.matrix(X, X)
    ours = dual_objective(full_alpha(model, n), K, y)
    _, best = projected_gradient_dual(K, y, C)
    assert abs(ours - best) <= 1e-4


def test_linear_explicit_w(rng):
    X, y = random_problem(3, 30, 4, 0.5)
    model = train_svm(X, y, KernelSpec.linear(), 1.0)
    w = (model.alphas * model.sv_labels) @ model.support_vectors
    T = rng.normal(size=(20, 4))
    np.testing.assert_allclose(model.decision_function(T), T @ w + model.bias, atol=1e-9)
    assert model.w_norm == pytest.approx(np.linalg.norm(w), rel=1e-9)


def test_interior_duplicate_does_not_change_f(rng):
    X = np.array([[-2.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    y = np.array([-1, -1, 1, 1])
    base = train_svm(X, y, KernelSpec.linear(), 10)
    # (-3, 0) lies strictly outside the margin on the negative side.
    X2 = np.vstack([X, [[-3.0, 0.0]]])
    y2 = np.append(y, -1)
    dup = train_svm(X2, y2, KernelSpec.linear(), 10)
    T = rng.normal(size=(30, 2)) * 3
    np.testing.assert_allclose(dup.decision_function(T), base.decision_function(T), atol=1e-6)


def test_sign_preserved_across_C(rng):
    X, y = random_problem(9, 20, 2, 0.0)
    T = rng.normal(size=(50, 2))
    a = train_svm(X, y, KernelSpec.linear(), 1.0)
    b = train_svm(X, y, KernelSpec.linear(), 100.0)
    fa, fb = a.decision_function(T), b.decision_function(T)
    same = np.sign(fa) == np.sign(fb)
    np.testing.assert_array_equal(np.sign(a.scores(T))[same], np.sign(b.scores(T))[same])


def test_sigmoid_warning_flag():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 3)) * 3
    y = np.where(np.arange(12) % 2 == 0, 1, -1)
    model = train_svm(X, y, KernelSpec.sigmoid(1, -9), 1.0)
    assert any("positive semidefinite" in w for w in model.warnings)
    assert np.all(np.isfinite(model.decision_function(X)))


def test_training_errors():
    with pytest.raises(DataValidationError, match="single class"):
        train_svm([[0.0], [1.0]], [1, 1])
    with pytest.raises(DataValidationError):
        train_svm([[0.0], [1.0]], [1, 2])
    model = train_svm([[-1.0], [1.0]], [-1, 1], KernelSpec.linear())
    with pytest.raises(DataValidationError, match="dimension"):
        model.decision_function([[1.0, 2.0]])
    model.w_norm = 0.0
    with pytest.raises(NumericalError):
        model.scores([[0.0]])


def test_predict_zero_is_positive():
    model = train_svm([[-1.0], [1.0]], [-1, 1], KernelSpec.linear(), 10)
    assert model.predict([[0.0]])[0] == 1


def test_fit_svm_stores_training_statistics(rng):
    X = rng.normal(size=(20, 3)) * [1, 100, 1e-3] + [0, 50, 7]
    y = np.where(X[:, 0] > 0, 1, -1)
    if len(set(y)) < 2:
        y[0] = -y[0]
    model = fit_svm(X, y, KernelSpec.rbf(2.0), 1.0)
    np.testing.assert_allclose(model.feature_mean, X.mean(axis=0))
    np.testing.assert_allclose(model.feature_scale, X.std(axis=0))
    raw = train_svm((X - X.mean(0)) / X.std(0), y, KernelSpec.rbf(2.0), 1.0)
    np.testing.assert_allclose(model.decision_function(X), raw.decision_function((X - X.mean(0)) / X.std(0)))
