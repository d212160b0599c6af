"""Closed-interval arithmetic with an explicit definedness flag.

An Interval tracks a superset of the values an expression can take over a
box-shaped input region.  Operations are pessimistic: the result interval
contains every pointwise result, but may be wider than the true image
(classically, ``x - x`` over [a, b] yields [a-b, b-a], not [0, 0]).

Partial operations (division by a zero-spanning interval, log/sqrt/log1p on
inputs extending past their domain boundary, negative integer powers of
zero-spanning intervals) return a "not defined" interval instead of raising.
Not-defined propagates through every operation.

Endpoints are IEEE doubles computed without directed rounding; downstream
checks allow for a tiny relative slack instead.  Infinite endpoints are
legal and arise naturally from overflow (e.g. exp of a huge interval).
"""

from __future__ import annotations

import math

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi
_EXP_MAX = 709.782712893384  # largest x with exp(x) finite in double precision


class Interval:
    """A closed interval [lo, hi], or the distinguished not-defined value.

    Treat instances as immutable values.  When ``defined`` is False the
    endpoints are meaningless and compare equal to any other not-defined
    interval.
    """

    __slots__ = ("lo", "hi", "defined")

    def __init__(self, lo: float, hi: float, defined: bool = True):
        if defined:
            # NaN endpoints can only come from indeterminate float algebra
            # (inf - inf and friends); widen to keep containment sound.
            if math.isnan(lo):
                lo = -math.inf
            if math.isnan(hi):
                hi = math.inf
            if lo > hi:
                raise ValueError(f"interval endpoints out of order: [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        self.defined = defined

    def __repr__(self):
        if not self.defined:
            return "Interval(not defined)"
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        if not self.defined or not other.defined:
            return self.defined == other.defined
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        if not self.defined:
            return hash(False)
        return hash((self.lo, self.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, rel_slack: float = 0.0) -> bool:
        """True if x lies in the interval, allowing a relative tolerance.

        The tolerance is ``rel_slack * max(1, |lo|, |hi|)`` so that slack
        behaves sensibly for both tiny and huge intervals.
        """
        if not self.defined or math.isnan(x):
            return False
        tol = rel_slack * max(1.0, abs(self.lo), abs(self.hi))
        if math.isinf(tol):  # infinite endpoint: slack irrelevant on that side
            tol = 0.0
        return self.lo - tol <= x <= self.hi + tol


_UNDEF = Interval(math.nan, math.nan, defined=False)


def undefined() -> Interval:
    return _UNDEF


def point(x: float) -> Interval:
    """Degenerate interval containing the single value x."""
    return Interval(x, x)


def make_box(bounds) -> tuple[Interval, ...]:
    """Convert a sequence of (lo, hi) pairs into a box of intervals."""
    return tuple(Interval(float(lo), float(hi)) for lo, hi in bounds)


def add(a: Interval, b: Interval) -> Interval:
    if not (a.defined and b.defined):
        return _UNDEF
    return Interval(a.lo + b.lo, a.hi + b.hi)


def sub(a: Interval, b: Interval) -> Interval:
    if not (a.defined and b.defined):
        return _UNDEF
    return Interval(a.lo - b.hi, a.hi - b.lo)


def neg(a: Interval) -> Interval:
    if not a.defined:
        return _UNDEF
    return Interval(-a.hi, -a.lo)


def _prod(x: float, y: float) -> float:
    # 0 * inf is indeterminate as a float but the exact product set is {0}.
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y


def mul(a: Interval, b: Interval) -> Interval:
    if not (a.defined and b.defined):
        return _UNDEF
    p1 = _prod(a.lo, b.lo)
    p2 = _prod(a.lo, b.hi)
    p3 = _prod(a.hi, b.lo)
    p4 = _prod(a.hi, b.hi)
    return Interval(min(p1, p2, p3, p4), max(p1, p2, p3, p4))


def _quot(x: float, y: float) -> float:
    # y is never zero here; x/y may still overflow the double range.
    if x == 0.0:
        return 0.0
    try:
        return x / y
    except OverflowError:
        return math.copysign(math.inf, x) * math.copysign(1.0, y)


def div(a: Interval, b: Interval) -> Interval:
    """Interval division; not defined when the divisor spans zero."""
    if not (a.defined and b.defined):
        return _UNDEF
    if b.lo <= 0.0 <= b.hi:
        return _UNDEF
    q1 = _quot(a.lo, b.lo)
    q2 = _quot(a.lo, b.hi)
    q3 = _quot(a.hi, b.lo)
    q4 = _quot(a.hi, b.hi)
    return Interval(min(q1, q2, q3, q4), max(q1, q2, q3, q4))


def _exp(x: float) -> float:
    if x > _EXP_MAX:
        return math.inf
    return math.exp(x)


def _sin_range(lo: float, hi: float, max_phase: float, min_phase: float):
    # Shared machinery for sin and cos: endpoint values plus a check for
    # interior critical points at phase + 2*pi*k.
    if hi - lo >= _TWO_PI or math.isinf(lo) or math.isinf(hi):
        return -1.0, 1.0
    f = math.sin if max_phase == _HALF_PI else math.cos
    vlo, vhi = f(lo), f(hi)
    out_lo, out_hi = min(vlo, vhi), max(vlo, vhi)
    k = math.ceil((lo - max_phase) / _TWO_PI)
    if max_phase + _TWO_PI * k <= hi:
        out_hi = 1.0
    k = math.ceil((lo - min_phase) / _TWO_PI)
    if min_phase + _TWO_PI * k <= hi:
        out_lo = -1.0
    # Guard against float noise pushing endpoint values outside [-1, 1].
    return max(out_lo, -1.0), min(out_hi, 1.0)


def _sin(a: Interval) -> Interval:
    lo, hi = _sin_range(a.lo, a.hi, _HALF_PI, -_HALF_PI)
    return Interval(lo, hi)


def _cos(a: Interval) -> Interval:
    lo, hi = _sin_range(a.lo, a.hi, 0.0, math.pi)
    return Interval(lo, hi)


def _square(a: Interval) -> Interval:
    if a.lo >= 0.0:
        return Interval(_prod(a.lo, a.lo), _prod(a.hi, a.hi))
    if a.hi <= 0.0:
        return Interval(_prod(a.hi, a.hi), _prod(a.lo, a.lo))
    return Interval(0.0, max(_prod(a.lo, a.lo), _prod(a.hi, a.hi)))


def _log(a: Interval) -> Interval:
    if a.lo <= 0.0:
        return _UNDEF
    return Interval(math.log(a.lo), math.log(a.hi))


def _log1p(a: Interval) -> Interval:
    if a.lo <= -1.0:
        return _UNDEF
    return Interval(math.log1p(a.lo), math.log1p(a.hi))


def _sqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        return _UNDEF
    return Interval(math.sqrt(a.lo), math.sqrt(a.hi))


_UNARY = {
    "id": lambda a: a,
    "log": _log,
    "log1p": _log1p,
    "exp": lambda a: Interval(_exp(a.lo), _exp(a.hi)),
    "sin": _sin,
    "cos": _cos,
    "tanh": lambda a: Interval(math.tanh(a.lo), math.tanh(a.hi)),
    "square": _square,
    "sqrt": _sqrt,
}

UNARY_TAGS = frozenset(_UNARY)


def unary(tag: str, a: Interval) -> Interval:
    """Apply a named elementwise function to an interval.

    Unknown tags are a programming error and raise immediately.
    """
    try:
        f = _UNARY[tag]
    except KeyError:
        raise ValueError(f"unknown unary function tag: {tag!r}") from None
    if not a.defined:
        return _UNDEF
    return f(a)


def _ipow(x: float, k: int) -> float:
    try:
        return float(x) ** k
    except OverflowError:
        if x > 0 or k % 2 == 0:
            return math.inf
        return -math.inf


def pow_int(a: Interval, k: int) -> Interval:
    """Integer power of an interval.

    Negative exponents of zero-spanning intervals are not defined; even
    positive powers fold the sign as square does.
    """
    if not a.defined:
        return _UNDEF
    if k == 0:
        return Interval(1.0, 1.0)
    if k < 0:
        if a.lo <= 0.0 <= a.hi:
            return _UNDEF
        return div(Interval(1.0, 1.0), pow_int(a, -k))
    if k % 2 == 1:
        return Interval(_ipow(a.lo, k), _ipow(a.hi, k))
    if a.lo >= 0.0:
        return Interval(_ipow(a.lo, k), _ipow(a.hi, k))
    if a.hi <= 0.0:
        return Interval(_ipow(a.hi, k), _ipow(a.lo, k))
    return Interval(0.0, max(_ipow(a.lo, k), _ipow(a.hi, k)))
