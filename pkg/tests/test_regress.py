import cvxpy as cp
import numpy as np
import pytest

from optstop.regress import (ApproxSpace, CustomBasis, FittedFunction, Indicator, Laguerre,
                             Monomials, ball_lstsq, design_matrix, empirical_objective, fit_l2,
                             vc_dimension)


def space(basis, H=1e6, **kw):
    return ApproxSpace(basis, H, **kw)


def test_design_matrix_examples():
    np.testing.assert_array_equal(design_matrix(space(Monomials(0)), [1.0, 5.0]), [[1.0], [1.0]])
    np.testing.assert_array_equal(design_matrix(space(Monomials(2)), [2.0]), [[1.0, 2.0, 4.0]])
    ind = Indicator(np.array([[0.0], [1.0], [2.0]]))
    np.testing.assert_array_equal(design_matrix(space(ind), [1.0]), [[0.0, 1.0, 0.0]])


def test_design_matrix_tensor_and_scaling():
    row = design_matrix(space(Monomials(1, dim=2)), np.array([[2.0, 3.0]]))[0]
    assert sorted(row) == [1.0, 2.0, 3.0, 6.0]
    scaled = design_matrix(space(Monomials(2, scale=10.0, center=5.0)), [25.0])[0]
    np.testing.assert_allclose(scaled, [1.0, 2.0, 4.0])
    lag = design_matrix(space(Laguerre(2)), [0.0])[0]
    np.testing.assert_allclose(lag, [1.0, 1.0, 1.0])


def test_design_matrix_dimension_mismatch():
    with pytest.raises(ValueError):
        design_matrix(space(Monomials(1, dim=2)), np.zeros((3, 3)))


def test_vc_dimension():
    assert vc_dimension(space(Monomials(2))) == 3
    assert vc_dimension(space(Indicator(np.arange(5.0)[:, None]))) == 5
    assert vc_dimension(space(Monomials(1, dim=2))) == 4
    with pytest.raises(NotImplementedError):
        vc_dimension(space(CustomBasis(lambda X: X)))
    assert vc_dimension(space(CustomBasis(lambda X: X, 1))) == 1


def test_constant_fit(rng):
    f = fit_l2(space(Monomials(0), H=10.0), rng.random(30), np.full(30, 3.5))
    np.testing.assert_allclose(f.predict(np.array([0.1, 9.0])), [3.5, 3.5])


def test_indicator_fit_is_group_mean(rng):
    states = np.arange(4.0)[:, None]
    X = states[rng.integers(0, 4, 500)]
    y = rng.normal(size=500)
    f = fit_l2(space(Indicator(states)), X, y)
    for s in range(4):
        assert f.predict(states[s:s + 1])[0] == pytest.approx(y[X[:, 0] == s].mean(), abs=1e-12)


def test_matches_pseudoinverse(rng):
    A = rng.normal(size=(20, 5))
    y = rng.normal(size=20)
    basis = CustomBasis(lambda X: X, 5, 5)
    f = fit_l2(space(basis), A, y)
    ref = np.linalg.pinv(A) @ y
    assert empirical_objective(f, A, y) == pytest.approx(np.mean((A @ ref - y) ** 2), rel=1e-8)


def test_erm_beats_random_probes(rng):
    sp = space(Monomials(3), H=1e6)
    X = rng.uniform(0, 2, 200)
    y = np.sin(3 * X) + rng.normal(scale=0.1, size=200)
    f = fit_l2(sp, X, y)
    best = empirical_objective(f, X, y)
    for _ in range(100):
        probe = FittedFunction(sp, f.coef + rng.normal(scale=0.1, size=4))
        assert empirical_objective(probe, X, y) >= best - 1e-12


def test_predict_examples():
    sp = space(Monomials(2), H=1.0)
    assert FittedFunction(sp, np.zeros(3)).predict([4.0])[0] == 0.0
    assert FittedFunction(sp, np.array([3.7, 0.0, 0.0])).predict([0.0])[0] == 1.0
    f = fit_l2(space(Monomials(2)), [0.0, 1.0, 2.0], [1.0, -1.0, 4.0])
    np.testing.assert_allclose(f.predict([0.0, 1.0, 2.0]), [1.0, -1.0, 4.0], atol=1e-12)


def test_fit_validation():
    sp = space(Monomials(1))
    with pytest.raises(ValueError):
        fit_l2(sp, np.zeros(0), np.zeros(0))
    with pytest.raises(ValueError):
        fit_l2(sp, [1.0, 2.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        fit_l2(sp, [1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        ApproxSpace(Monomials(1), 1.0, "ball")


def test_fit_is_scale_equivariant(rng):
    X = rng.random(50)
    y = rng.normal(size=50)
    sp = space(Monomials(2))
    a = fit_l2(sp, X, y).predict(X)
    b = fit_l2(sp, X, 3.0 * y).predict(X)
    np.testing.assert_allclose(b, 3.0 * a, atol=1e-10)


def test_fit_is_a_contraction(rng):
    # an L2 projection never increases the empirical norm of the targets
    X = rng.random(80)
    y = rng.normal(size=80)
    f = fit_l2(space(Monomials(3)), X, y)
    assert np.mean(f.predict(X) ** 2) <= np.mean(y**2) + 1e-12


def _cvx_ball(A, y, radius, w):
    c = cp.Variable(A.shape[1])
    cp.Problem(cp.Minimize(cp.sum(cp.multiply(w, cp.square(A @ c - y)))), [cp.norm(c, 2) <= radius]).solve()
    return c.value


@pytest.mark.parametrize("radius", [0.05, 0.5, 50.0])
def test_ball_lstsq_against_conic_solver(rng, radius):
    A = rng.normal(size=(40, 4))
    y = rng.normal(size=40) + A @ np.array([1.0, -2.0, 0.5, 0.0])
    w = rng.random(40)
    c = ball_lstsq(A, y, radius, w)
    ref = _cvx_ball(A, y, radius, w)
    assert np.linalg.norm(c) <= radius * (1 + 1e-12)
    obj = lambda v: float(w @ (A @ v - y) ** 2)
    assert obj(c) <= obj(ref) + 1e-6 * max(1.0, obj(ref))


def test_ball_lstsq_kkt(rng):
    A = rng.normal(size=(30, 3))
    y = rng.normal(size=30) * 5
    c = ball_lstsq(A, y, 0.1)
    assert np.linalg.norm(c) == pytest.approx(0.1, rel=1e-10)
    grad = A.T @ (A @ c - y)
    # the negative gradient points along c (stationarity with lambda >= 0)
    cos = -grad @ c / (np.linalg.norm(grad) * np.linalg.norm(c))
    assert cos == pytest.approx(1.0, abs=1e-9)


def test_ball_mode_fit_respects_radius(rng):
    sp = ApproxSpace(Monomials(2), 10.0, "ball", 0.3)
    assert sp.convex
    f = fit_l2(sp, rng.random(60), rng.normal(size=60) + 4)
    assert np.linalg.norm(f.coef) <= 0.3 * (1 + 1e-12)
