"""Scaled NMSE fitness: scaling algebra, clamping, constraint coupling."""

import numpy as np
import pytest

from shapesr import constraints as cn
from shapesr import fitness as fit
from shapesr.exprtree import Binary, Parameter, TreeModel, Unary, Variable
from shapesr.interval import Interval


def test_scale_recovers_affine_map():
    rng = np.random.default_rng(0)
    y = rng.normal(size=50)
    pred = 2.0 * y + 3.0
    a, b = fit.scale_coefficients(pred, y)
    assert b == pytest.approx(0.5)
    assert a == pytest.approx(-1.5)
    assert fit.nmse(a + b * pred, y) < 1e-28


def test_constant_prediction_scores_exactly_one():
    y = np.array([1.0, 2.0, 4.0, 8.0])
    m = TreeModel(Parameter(7.0))
    assert fit.evaluate(m, np.zeros((4, 1)), y) == 1.0
    a, b = fit.scale_coefficients(np.full(4, 7.0), y)
    assert (a, b) == (pytest.approx(np.mean(y)), 0.0)


def test_nmse_clamps_and_rejects_non_finite():
    y = np.array([0.0, 1.0, 2.0])
    assert fit.nmse(np.array([100.0, -50.0, 3.0]), y) == 1.0
    assert fit.nmse(np.array([0.0, np.nan, 2.0]), y) == 1.0
    assert fit.nmse(np.array([0.0, np.inf, 2.0]), y) == 1.0
    assert fit.nmse(y, y) == 0.0


def test_nmse_equals_one_minus_r_squared():
    rng = np.random.default_rng(42)
    for _ in range(200):
        y = rng.normal(size=60)
        pred = rng.normal(size=60)
        a, b = fit.scale_coefficients(pred, y)
        got = fit.nmse(a + b * pred, y)
        r = np.corrcoef(pred, y)[0, 1]
        assert got == pytest.approx(1.0 - r * r, abs=1e-10)


def test_scaled_model_transforms_bounds():
    m = fit.ScaledModel(TreeModel(Variable(0)), offset=1.0, scale=-2.0)
    X = np.array([[0.0], [1.0]])
    np.testing.assert_allclose(m.predict(X), [1.0, -1.0])
    box = (Interval(0, 1),)
    assert m.image_interval(box) == Interval(-1.0, 1.0)
    assert m.derivative_interval(box, 0) == Interval(-2.0, -2.0)
    np.testing.assert_allclose(m.derivative_values(X, 0), [-2.0, -2.0])


def test_evaluate_checks_constraints_on_scaled_model():
    # x0 fits a decreasing target perfectly, but only with a negative scale,
    # which flips the monotone direction and must be rejected.
    X = np.linspace(0, 1, 20).reshape(-1, 1)
    y = -X[:, 0]
    m = TreeModel(Variable(0))
    cset = cn.monotonicity_constraints((1,), [(0.0, 1.0)])
    assert fit.evaluate(m, X, y) == pytest.approx(0.0, abs=1e-28)
    assert fit.evaluate(m, X, y, cset) == 1.0
    # with the compatible direction the same model is feasible and perfect
    cset_down = cn.monotonicity_constraints((-1,), [(0.0, 1.0)])
    assert fit.evaluate(m, X, y, cset_down) == pytest.approx(0.0, abs=1e-28)


def test_evaluate_handles_nan_predictions():
    m = TreeModel(Unary("log", Variable(0)))
    X = np.array([[-1.0], [1.0]])
    y = np.array([0.0, 1.0])
    assert fit.evaluate(m, X, y) == 1.0


def test_scaling_invariance():
    rng = np.random.default_rng(9)
    X = rng.uniform(0.5, 2.0, size=(40, 1))
    y = np.sin(X[:, 0]) * 3.0 + 1.0
    base = TreeModel(Unary("sin", Variable(0)))
    shifted = TreeModel(
        Binary("add", Parameter(5.0), Binary("mul", Parameter(-7.0), Unary("sin", Variable(0))))
    )
    assert fit.evaluate(shifted, X, y) == pytest.approx(fit.evaluate(base, X, y), abs=1e-12)


def test_noise_floor_quarter_percent():
    rng = np.random.default_rng(77)
    clean = np.sin(rng.uniform(-2, 2, size=4000)) * 5.0 + 2.0
    sigma = float(np.std(clean))
    noisy = clean + rng.normal(0.0, 0.05 * sigma, size=clean.size)
    val = fit.nmse(*_rescaled(clean, noisy))
    assert 0.001 <= val <= 0.005


def _rescaled(pred, y):
    a, b = fit.scale_coefficients(pred, y)
    return a + b * pred, y
