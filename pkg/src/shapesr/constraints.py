"""Shape constraints over box domains.

A constraint restricts a model f on every point of a box S:

    sign * Op(f)(x) - threshold <= 0   for all x in S

where Op is either the model itself (an image bound) or one of its partial
derivatives (monotonicity and convexity conditions).  Two checkers are
provided: a pessimistic one based on interval bounds, which can prove
feasibility but may flag false violations, and an empirical one based on
uniform sampling, which can only ever disprove feasibility.

Models are anything with the interval/pointwise interface produced by
``exprtree.TreeModel``, ``itea.ITExpression`` or ``fitness.ScaledModel``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import interval as ia
from .interval import Interval

AUDIT_TOL = 1e-9


@dataclass(frozen=True)
class ShapeConstraint:
    """One inequality of the form sign * Op(f)(x) <= threshold on the box.

    ``var is None`` constrains the model image; otherwise the partial
    derivative of the given order with respect to that variable.
    """

    sign: int
    threshold: float
    var: int | None = None
    order: int = 0

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if (self.var is None) != (self.order == 0):
            raise ValueError("image constraints have order 0, derivative ones >= 1")
        if self.order not in (0, 1, 2):
            raise ValueError("supported derivative orders are 1 and 2")

    def describe(self) -> str:
        op = "f" if self.var is None else f"d{'d' * (self.order - 1)}f/dx{self.var}" + (
            f"^{self.order}" if self.order > 1 else ""
        )
        cmp = "<=" if self.sign > 0 else ">="
        bound = self.threshold if self.sign > 0 else -self.threshold
        return f"{op} {cmp} {bound:g}"


@dataclass(frozen=True)
class ConstraintSet:
    box: tuple[Interval, ...]
    constraints: tuple[ShapeConstraint, ...]

    def __len__(self):
        return len(self.constraints)

    @classmethod
    def from_bounds(cls, bounds, constraints):
        return cls(ia.make_box(bounds), tuple(constraints))


def monotonicity_constraints(directions, bounds, image_bounds=None) -> ConstraintSet:
    """Build a ConstraintSet from per-variable monotonicity directions.

    ``directions`` holds one entry per variable: +1 for non-decreasing,
    -1 for non-increasing, 0 for unconstrained.  ``image_bounds=(lo, hi)``
    additionally clamps the model's value range.
    """
    if len(directions) != len(bounds):
        raise ValueError("one direction per variable required")
    cons = []
    for i, d in enumerate(directions):
        if d == 0:
            continue
        if d not in (1, -1):
            raise ValueError(f"direction must be -1, 0 or +1, got {d!r}")
        # non-decreasing means df/dxi >= 0, i.e. -(df/dxi) <= 0
        cons.append(ShapeConstraint(sign=-d, threshold=0.0, var=i, order=1))
    if image_bounds is not None:
        lo, hi = image_bounds
        cons.append(ShapeConstraint(sign=1, threshold=float(hi)))
        cons.append(ShapeConstraint(sign=-1, threshold=-float(lo)))
    return ConstraintSet.from_bounds(bounds, cons)


def _operator_interval(model, cset, c) -> Interval:
    if c.var is None:
        return model.image_interval(cset.box)
    return model.derivative_interval(cset.box, c.var, c.order)


def check_pessimistic(model, cset: ConstraintSet) -> float:
    """Total interval-certified violation; 0.0 proves feasibility on the box.

    A not-defined bound (division by a zero-spanning interval, log of a
    sign-indefinite argument, ...) counts as an infinite violation: the
    model cannot be certified anywhere on the box.
    """
    total = 0.0
    for c in cset.constraints:
        iv = _operator_interval(model, cset, c)
        if not iv.defined:
            return math.inf
        upper = iv.hi if c.sign > 0 else -iv.lo
        excess = upper - c.threshold
        if excess > 0.0:
            total += excess
    return total


@dataclass
class AuditReport:
    n_samples: int
    counts: tuple[int, ...]

    @property
    def feasible(self) -> bool:
        return all(c == 0 for c in self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


def audit_empirical(
    model, cset: ConstraintSet, n_samples: int = 1_000_000, seed: int = 0,
    chunk: int = 200_000,
) -> AuditReport:
    """Sample the box uniformly and count pointwise constraint violations.

    A point violates a constraint when sign * Op(f)(x) - threshold exceeds
    a small tolerance.  Non-finite operator values are skipped: pointwise
    float evaluation saturates (0*inf in derivative chain products, lost
    bits in huge sums) at points where the model itself is fine, and an
    interval-certified model must never be counted against.  Genuinely
    undefined models are caught earlier, by the pessimistic check or by
    their training error.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([iv.lo for iv in cset.box])
    hi = np.array([iv.hi for iv in cset.box])
    counts = np.zeros(len(cset.constraints), dtype=np.int64)
    remaining = n_samples
    while remaining > 0:
        m = min(chunk, remaining)
        remaining -= m
        X = rng.uniform(lo, hi, size=(m, len(cset.box)))
        image_vals = None
        for k, c in enumerate(cset.constraints):
            if c.var is None:
                if image_vals is None:
                    image_vals = model.predict(X)
                vals = image_vals
            else:
                vals = model.derivative_values(X, c.var, c.order)
            with np.errstate(invalid="ignore"):
                bad = np.isfinite(vals) & (c.sign * vals - c.threshold > AUDIT_TOL)
            counts[k] += int(bad.sum())
    return AuditReport(n_samples=n_samples, counts=tuple(int(c) for c in counts))
