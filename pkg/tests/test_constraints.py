"""Constraint construction, pessimistic certification, empirical audit."""

import math

import numpy as np
import pytest

from helpers import random_box
from shapesr import constraints as cn
from shapesr import exprtree as ex
from shapesr.constraints import ConstraintSet, ShapeConstraint
from shapesr.exprtree import Binary, Parameter, TreeModel, Unary, Variable


def _cs(directions, bounds, image=None):
    return cn.monotonicity_constraints(directions, bounds, image_bounds=image)


def test_monotonicity_tuple_expansion():
    cset = _cs((1, 1, -1), [(0.2, 2.0), (3e5, 7e5), (200.0, 400.0)])
    assert len(cset) == 3
    assert cset.constraints[0] == ShapeConstraint(sign=-1, threshold=0.0, var=0, order=1)
    assert cset.constraints[1] == ShapeConstraint(sign=-1, threshold=0.0, var=1, order=1)
    assert cset.constraints[2] == ShapeConstraint(sign=1, threshold=0.0, var=2, order=1)


def test_zero_directions_skipped_and_image_bounds_added():
    cset = _cs((0, -1), [(0, 1), (0, 1)], image=(0.0, 2.0))
    assert len(cset) == 3
    assert cset.constraints[0].var == 1
    img_hi, img_lo = cset.constraints[1], cset.constraints[2]
    assert img_hi == ShapeConstraint(sign=1, threshold=2.0)
    assert img_lo == ShapeConstraint(sign=-1, threshold=-0.0)


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        _cs((2,), [(0, 1)])
    with pytest.raises(ValueError):
        _cs((1, 1), [(0, 1)])
    with pytest.raises(ValueError):
        ShapeConstraint(sign=0, threshold=0.0)
    with pytest.raises(ValueError):
        ShapeConstraint(sign=1, threshold=0.0, var=None, order=1)
    with pytest.raises(ValueError):
        ShapeConstraint(sign=1, threshold=0.0, var=0, order=3)


def test_describe_is_readable():
    assert ShapeConstraint(sign=1, threshold=2.0).describe() == "f <= 2"
    assert ShapeConstraint(sign=-1, threshold=0.0, var=1, order=1).describe() == "df/dx1 >= -0"


# ---------------------------------------------------------- pessimistic


def test_identity_is_monotone():
    cset = _cs((1,), [(0.0, 1.0)])
    assert cn.check_pessimistic(TreeModel(Variable(0)), cset) == 0.0


def test_negated_identity_violates_by_one():
    m = TreeModel(Binary("mul", Parameter(-1.0), Variable(0)))
    cset = _cs((1,), [(0.0, 1.0)])
    assert cn.check_pessimistic(m, cset) == 1.0


def test_undefined_bound_is_infinite_violation():
    m = TreeModel(Unary("log", Variable(0)))
    cset = _cs((0,), [(-1.0, 1.0)], image=(-10.0, 10.0))
    assert cn.check_pessimistic(m, cset) == math.inf


def test_image_bound_excess_totals():
    m = TreeModel(Unary("square", Variable(0)))
    cset = _cs((0,), [(-2.0, 2.0)], image=(0.0, 1.0))
    # image interval is [0, 4]: upper bound exceeded by 3, lower bound tight
    assert cn.check_pessimistic(m, cset) == 3.0


def test_enlarging_box_never_shrinks_violation():
    m = TreeModel(Unary("square", Variable(0)))
    prev = 0.0
    for hi in (0.5, 1.0, 2.0, 4.0):
        cset = _cs((1,), [(-1.0, hi)], image=(0.0, 0.5))
        v = cn.check_pessimistic(m, cset)
        assert v >= prev
        prev = v


# ------------------------------------------------------------- empirical


def test_audit_counts_sign_flips():
    m = TreeModel(Unary("square", Variable(0)))
    cset = _cs((1,), [(-1.0, 1.0)])
    rep = cn.audit_empirical(m, cset, n_samples=100_000, seed=3)
    assert rep.n_samples == 100_000
    frac = rep.counts[0] / rep.n_samples
    assert abs(frac - 0.5) < 0.01
    assert not rep.feasible and rep.total == rep.counts[0]


def test_audit_feasible_model_is_clean():
    m = TreeModel(Unary("tanh", Variable(0)))
    cset = _cs((1,), [(-3.0, 3.0)], image=(-1.0, 1.0))
    rep = cn.audit_empirical(m, cset, n_samples=50_000, seed=4)
    assert rep.feasible


def test_audit_flags_non_finite_points():
    # log is undefined on half the box; those points count as violations
    m = TreeModel(Unary("log", Variable(0)))
    cset = _cs((1,), [(-1.0, 1.0)])
    rep = cn.audit_empirical(m, cset, n_samples=20_000, seed=5)
    assert rep.counts[0] >= 9000


def test_pessimism_witness_sound_but_incomplete():
    # f(x) = x + (-1)*x is identically zero; the interval image over [0, 1]
    # is [-1, 1], so the certifier rejects image bounds the sampler accepts.
    f = Binary("add", Variable(0), Binary("mul", Parameter(-1.0), Variable(0)))
    m = TreeModel(f)
    cset = _cs((0,), [(0.0, 1.0)], image=(-0.1, 0.1))
    assert cn.check_pessimistic(m, cset) > 0.0
    assert cn.audit_empirical(m, cset, n_samples=20_000, seed=6).feasible


def test_soundness_fuzz_certified_models_pass_audit():
    rng = np.random.default_rng(321)
    dim = 2
    certified = 0
    for _ in range(400):
        e = ex.ptc2_random(rng, dim, max_length=14, max_depth=6)
        pairs = random_box(rng, dim, lo_range=(-2.0, 2.0), width_range=(0.3, 2.0))
        dirs = tuple(int(d) for d in rng.integers(-1, 2, size=dim))
        cset = cn.monotonicity_constraints(dirs, pairs)
        if not len(cset):
            continue
        m = TreeModel(e)
        if cn.check_pessimistic(m, cset) > 0.0:
            continue
        rep = cn.audit_empirical(m, cset, n_samples=4000, seed=int(rng.integers(2**31)))
        assert rep.feasible, (ex.to_text(e), pairs, dirs, rep)
        certified += 1
    assert certified >= 20
