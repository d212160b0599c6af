"""Error measurement with implicit linear scaling.

Candidates are compared by normalized mean squared error after an optimal
affine adjustment a + b*f(x) fitted on the training targets, so the search
never wastes effort on offset and magnitude.  NMSE is clamped to [0, 1]:
1 is the error of the best constant predictor, and any candidate producing
non-finite values or violating its constraints is pinned there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import interval as ia
from .constraints import ConstraintSet, check_pessimistic

_VAR_EPS = 1e-12


@dataclass
class ScaledModel:
    """a + b * inner(x); bounds and derivatives transform affinely."""

    inner: object
    offset: float
    scale: float

    def predict(self, X):
        return self.offset + self.scale * self.inner.predict(X)

    def image_interval(self, box):
        scaled = ia.mul(ia.point(self.scale), self.inner.image_interval(box))
        return ia.add(ia.point(self.offset), scaled)

    def derivative_interval(self, box, var, order=1):
        return ia.mul(
            ia.point(self.scale), self.inner.derivative_interval(box, var, order)
        )

    def derivative_values(self, X, var, order=1):
        return self.scale * self.inner.derivative_values(X, var, order)


def scale_coefficients(pred, y):
    """Least-squares (offset, scale) for y ~ a + b*pred.

    Near-constant predictions collapse to the mean predictor (b = 0) rather
    than amplifying numeric noise.
    """
    with np.errstate(all="ignore"):  # huge finite predictions may overflow
        pm = float(np.mean(pred))
        var = float(np.mean((pred - pm) ** 2))
        ym = float(np.mean(y))
        if not np.isfinite(var) or var < _VAR_EPS:
            return ym, 0.0
        cov = float(np.mean((pred - pm) * (y - ym)))
        b = cov / var
    if not np.isfinite(b):
        return ym, 0.0
    return ym - b * pm, b


def linear_scale(model, X, y) -> ScaledModel:
    a, b = scale_coefficients(model.predict(X), y)
    return ScaledModel(model, a, b)


def nmse(pred, y) -> float:
    """min(||pred - y||^2 / ||y - mean(y)||^2, 1); non-finite inputs give 1."""
    pred = np.asarray(pred, dtype=float)
    if not np.all(np.isfinite(pred)):
        return 1.0
    with np.errstate(all="ignore"):
        denom = float(np.sum((y - np.mean(y)) ** 2))
        sse = float(np.sum((pred - y) ** 2))
    if denom <= 0.0:
        return 0.0 if sse == 0.0 else 1.0
    ratio = sse / denom
    if not np.isfinite(ratio):
        return 1.0
    return min(ratio, 1.0)


def evaluate(model, X, y, constraints: ConstraintSet | None = None) -> float:
    """Scaled NMSE of a model, or 1.0 if it cannot be certified feasible.

    The constraint check runs on the scaled model: the affine adjustment is
    part of the candidate, and a negative scale flips every monotonicity.
    """
    pred = model.predict(X)
    if not np.all(np.isfinite(pred)):
        return 1.0
    a, b = scale_coefficients(pred, y)
    if constraints is not None and len(constraints):
        if check_pessimistic(ScaledModel(model, a, b), constraints) > 0.0:
            return 1.0
    return nmse(a + b * pred, y)
