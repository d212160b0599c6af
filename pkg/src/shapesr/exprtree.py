"""Expression trees for symbolic regression.

Trees are built from four node kinds: parameters (tunable constants),
variables (column references), unary function applications, and binary
operators.  Division is protected: whenever the denominator magnitude falls
below 1e-12 the quotient evaluates to 1.  Nodes are immutable values; every
structural edit builds a new tree, sharing untouched subtrees.

Each node caches its subtree size and height so that length and depth limits
can be enforced in O(1) during crossover and mutation.
"""

from __future__ import annotations

import re

import numpy as np

from . import interval as ia
from .interval import Interval

PDIV_EPS = 1e-12

UNARY_TAGS = ("log", "exp", "sin", "cos", "tanh", "square", "sqrt")
BINARY_TAGS = ("add", "mul", "div")

_BINARY_SYMBOL = {"add": "+", "mul": "*", "div": "%"}
_SYMBOL_BINARY = {v: k for k, v in _BINARY_SYMBOL.items()}


class Parameter:
    """A numeric leaf subject to local optimisation."""

    __slots__ = ("value", "size", "height")

    def __init__(self, value: float):
        self.value = float(value)
        self.size = 1
        self.height = 1

    def __repr__(self):
        return f"Parameter({self.value!r})"

    def __eq__(self, other):
        return type(other) is Parameter and other.value == self.value


class Variable:
    """A leaf referencing input column ``index``."""

    __slots__ = ("index", "size", "height")

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("variable index must be non-negative")
        self.index = int(index)
        self.size = 1
        self.height = 1

    def __repr__(self):
        return f"Variable({self.index})"

    def __eq__(self, other):
        return type(other) is Variable and other.index == self.index


class Unary:
    __slots__ = ("tag", "child", "size", "height")

    def __init__(self, tag: str, child):
        if tag not in UNARY_TAGS:
            raise ValueError(f"unknown unary tag: {tag!r}")
        self.tag = tag
        self.child = child
        self.size = 1 + child.size
        self.height = 1 + child.height

    def __repr__(self):
        return f"Unary({self.tag!r}, {self.child!r})"

    def __eq__(self, other):
        return (
            type(other) is Unary and other.tag == self.tag and other.child == self.child
        )


class Binary:
    __slots__ = ("tag", "left", "right", "size", "height")

    def __init__(self, tag: str, left, right):
        if tag not in BINARY_TAGS:
            raise ValueError(f"unknown binary tag: {tag!r}")
        self.tag = tag
        self.left = left
        self.right = right
        self.size = 1 + left.size + right.size
        self.height = 1 + max(left.height, right.height)

    def __repr__(self):
        return f"Binary({self.tag!r}, {self.left!r}, {self.right!r})"

    def __eq__(self, other):
        return (
            type(other) is Binary
            and other.tag == self.tag
            and other.left == self.left
            and other.right == self.right
        )


_NP_UNARY = {
    "log": np.log,
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "square": np.square,
    "sqrt": np.sqrt,
}


def _ev(e, X, guard):
    t = type(e)
    if t is Variable:
        return X[:, e.index]
    if t is Parameter:
        return e.value
    if t is Unary:
        return _NP_UNARY[e.tag](_ev(e.child, X, guard))
    a = _ev(e.left, X, guard)
    b = _ev(e.right, X, guard)
    tag = e.tag
    if tag == "add":
        return a + b
    if tag == "mul":
        return a * b
    small = np.abs(b) < PDIV_EPS
    if guard is not None:
        guard |= small
    return np.where(small, 1.0, a / b)


def evaluate(e, X) -> np.ndarray:
    """Evaluate a tree over the rows of X, returning one value per row."""
    with np.errstate(all="ignore"):
        out = _ev(e, X, None)
    if isinstance(out, np.ndarray) and out.ndim == 1:
        return out
    return np.full(X.shape[0], float(out))


def evaluate_with_guard(e, X):
    """Like evaluate, additionally reporting rows where protected division
    replaced the quotient with 1."""
    guard = np.zeros(X.shape[0], dtype=bool)
    with np.errstate(all="ignore"):
        out = _ev(e, X, guard)
    if not (isinstance(out, np.ndarray) and out.ndim == 1):
        out = np.full(X.shape[0], float(out))
    return out, guard


def eval_interval(e, box) -> Interval:
    """Pessimistic bound on a tree's values over a box of intervals."""
    t = type(e)
    if t is Variable:
        return box[e.index]
    if t is Parameter:
        return ia.point(e.value)
    if t is Unary:
        return ia.unary(e.tag, eval_interval(e.child, box))
    a = eval_interval(e.left, box)
    b = eval_interval(e.right, box)
    if e.tag == "add":
        return ia.add(a, b)
    if e.tag == "mul":
        return ia.mul(a, b)
    return ia.div(a, b)


# ------------------------------------------------------------ derivatives
#
# Smart constructors fold parameter-only identities (u+0, u*1, u*0) so that
# derivative trees stay a manageable size; no other simplification happens.


def _is_param(e, value=None):
    return type(e) is Parameter and (value is None or e.value == value)


def _d_add(a, b):
    if _is_param(a, 0.0):
        return b
    if _is_param(b, 0.0):
        return a
    if _is_param(a) and _is_param(b):
        return Parameter(a.value + b.value)
    return Binary("add", a, b)


def _d_mul(a, b):
    if _is_param(a, 0.0) or _is_param(b, 0.0):
        return Parameter(0.0)
    if _is_param(a, 1.0):
        return b
    if _is_param(b, 1.0):
        return a
    if _is_param(a) and _is_param(b):
        return Parameter(a.value * b.value)
    return Binary("mul", a, b)


def _d_sub(a, b):
    if _is_param(b, 0.0):
        return a
    return _d_add(a, _d_mul(Parameter(-1.0), b))


def _d_div(num, den):
    if _is_param(num, 0.0):
        return Parameter(0.0)
    return Binary("div", num, den)


def _diff(e, var: int):
    t = type(e)
    if t is Parameter:
        return Parameter(0.0)
    if t is Variable:
        return Parameter(1.0 if e.index == var else 0.0)
    if t is Binary:
        da = _diff(e.left, var)
        db = _diff(e.right, var)
        if e.tag == "add":
            return _d_add(da, db)
        if e.tag == "mul":
            return _d_add(_d_mul(da, e.right), _d_mul(e.left, db))
        # protected division differentiates as the ordinary quotient rule
        return _d_div(
            _d_sub(_d_mul(da, e.right), _d_mul(e.left, db)),
            Unary("square", e.right),
        )
    u, du = e.child, _diff(e.child, var)
    tag = e.tag
    if tag == "log":
        return _d_div(du, u)
    if tag == "exp":
        return _d_mul(Unary("exp", u), du)
    if tag == "sin":
        return _d_mul(Unary("cos", u), du)
    if tag == "cos":
        return _d_mul(_d_mul(Parameter(-1.0), Unary("sin", u)), du)
    if tag == "tanh":
        return _d_mul(_d_sub(Parameter(1.0), Unary("square", Unary("tanh", u))), du)
    if tag == "square":
        return _d_mul(_d_mul(Parameter(2.0), u), du)
    # sqrt
    return _d_div(du, _d_mul(Parameter(2.0), Unary("sqrt", u)))


def differentiate(e, var: int, order: int = 1):
    """Symbolic partial derivative with respect to variable ``var``."""
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    for _ in range(order):
        e = _diff(e, var)
    return e


# ------------------------------------------------------------- structure


def iter_nodes(e):
    """Yield every node in pre-order (node before its children)."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        t = type(n)
        if t is Unary:
            stack.append(n.child)
        elif t is Binary:
            stack.append(n.right)
            stack.append(n.left)


def annotated_positions(e):
    """List of (node, depth) in pre-order; the root has depth 1."""
    out = []
    stack = [(e, 1)]
    while stack:
        n, d = stack.pop()
        out.append((n, d))
        t = type(n)
        if t is Unary:
            stack.append((n.child, d + 1))
        elif t is Binary:
            stack.append((n.right, d + 1))
            stack.append((n.left, d + 1))
    return out


def subtree_at(e, pos: int):
    for i, n in enumerate(iter_nodes(e)):
        if i == pos:
            return n
    raise IndexError(pos)


def replace_at(e, pos: int, replacement):
    """Return a copy of ``e`` with the pre-order position ``pos`` swapped out."""
    counter = [0]

    def walk(n):
        i = counter[0]
        counter[0] += 1
        if i == pos:
            _skip(n, counter)
            return replacement
        t = type(n)
        if t is Unary:
            return Unary(n.tag, walk(n.child))
        if t is Binary:
            left = walk(n.left)
            return Binary(n.tag, left, walk(n.right))
        return n

    out = walk(e)
    if counter[0] <= pos:
        raise IndexError(pos)
    return out


def _skip(n, counter):
    counter[0] += n.size - 1


def extract_params(e) -> list[float]:
    """Parameter values in pre-order."""
    return [n.value for n in iter_nodes(e) if type(n) is Parameter]


def update_params(e, values):
    """Rebuild the tree with parameter values replaced in pre-order."""
    it = iter(values)

    def walk(n):
        t = type(n)
        if t is Parameter:
            return Parameter(next(it))
        if t is Unary:
            return Unary(n.tag, walk(n.child))
        if t is Binary:
            left = walk(n.left)
            return Binary(n.tag, left, walk(n.right))
        return n

    try:
        out = walk(e)
    except StopIteration:
        raise ValueError("not enough parameter values") from None
    leftover = sum(1 for _ in it)
    if leftover:
        raise ValueError("too many parameter values")
    return out


# ------------------------------------------------------------- generation

_FUNCTION_SYMBOLS = tuple(BINARY_TAGS) + tuple(UNARY_TAGS)


class _Slot:
    __slots__ = ("tag", "children")

    def __init__(self, tag, arity):
        self.tag = tag
        self.children = [None] * arity


def _freeze(n):
    if isinstance(n, _Slot):
        kids = [_freeze(c) for c in n.children]
        if len(kids) == 1:
            return Unary(n.tag, kids[0])
        return Binary(n.tag, kids[0], kids[1])
    return n


def _random_leaf(rng, dim):
    if rng.random() < 0.5:
        return Variable(int(rng.integers(dim)))
    return Parameter(rng.normal())


def ptc2_random(rng, dim: int, max_length: int = 50, max_depth: int = 20):
    """Grow a random tree whose length is close to a uniform draw in
    [1, max_length], never exceeding either limit (PTC2-style expansion)."""
    target = int(rng.integers(1, max_length + 1))
    if target == 1 or max_depth == 1:
        return _random_leaf(rng, dim)
    tag = _FUNCTION_SYMBOLS[rng.integers(len(_FUNCTION_SYMBOLS))]
    root = _Slot(tag, 2 if tag in BINARY_TAGS else 1)
    open_slots = [(root, i, 2) for i in range(len(root.children))]
    size = 1
    while open_slots and size + len(open_slots) < target:
        j = int(rng.integers(len(open_slots)))
        parent, idx, depth = open_slots.pop(j)
        if depth >= max_depth:
            parent.children[idx] = _random_leaf(rng, dim)
        else:
            # a binary node grows size+slots by 2; with one budget unit left
            # it would overshoot the target, so restrict to unary symbols
            if size + len(open_slots) + 3 > target:
                tag = UNARY_TAGS[rng.integers(len(UNARY_TAGS))]
            else:
                tag = _FUNCTION_SYMBOLS[rng.integers(len(_FUNCTION_SYMBOLS))]
            node = _Slot(tag, 2 if tag in BINARY_TAGS else 1)
            parent.children[idx] = node
            open_slots.extend((node, i, depth + 1) for i in range(len(node.children)))
        size += 1
    for parent, idx, _ in open_slots:
        parent.children[idx] = _random_leaf(rng, dim)
    return _freeze(root)


# ---------------------------------------------------------- serialization

_TOKEN_RE = re.compile(
    r"\s*("
    r"[()]"
    r"|[+*%]"
    r"|-?(?:\d+\.?\d*|\.\d+|inf|nan)(?:[eE][-+]?\d+)?"
    r"|[A-Za-z_][A-Za-z0-9_]*"
    r")"
)

_VAR_RE = re.compile(r"x(\d+)$")


def to_text(e) -> str:
    """Serialize to parenthesized infix; parse_text inverts this exactly."""
    t = type(e)
    if t is Parameter:
        return repr(e.value)
    if t is Variable:
        return f"x{e.index}"
    if t is Unary:
        return f"{e.tag}({to_text(e.child)})"
    return f"({to_text(e.left)} {_BINARY_SYMBOL[e.tag]} {to_text(e.right)})"


class ParseError(ValueError):
    pass


def _tokenize(s):
    out, pos = [], 0
    while pos < len(s):
        m = _TOKEN_RE.match(s, pos)
        if not m:
            if s[pos:].strip():
                raise ParseError(f"bad token at offset {pos}: {s[pos:pos + 10]!r}")
            break
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, tok):
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def expr(self):
        tok = self.next()
        if tok == "(":
            left = self.expr()
            op = self.next()
            if op not in _SYMBOL_BINARY:
                raise ParseError(f"expected binary operator, got {op!r}")
            right = self.expr()
            self.expect(")")
            return Binary(_SYMBOL_BINARY[op], left, right)
        if tok in UNARY_TAGS:
            self.expect("(")
            child = self.expr()
            self.expect(")")
            return Unary(tok, child)
        m = _VAR_RE.match(tok)
        if m:
            return Variable(int(m.group(1)))
        try:
            return Parameter(float(tok))
        except ValueError:
            raise ParseError(f"unrecognized token {tok!r}") from None


def parse_text(s: str):
    p = _Parser(_tokenize(s))
    e = p.expr()
    if p.peek() is not None:
        raise ParseError(f"trailing input: {p.peek()!r}")
    return e


# --------------------------------------------------------------- wrapper


class TreeModel:
    """Adapter giving a tree the model interface used by constraint checks:
    prediction plus interval and pointwise views of its partial derivatives.
    Derivative trees are built once per (variable, order) and cached."""

    __slots__ = ("expr", "_derivs")

    def __init__(self, expr):
        self.expr = expr
        self._derivs = {}

    def _derivative(self, var, order):
        key = (var, order)
        d = self._derivs.get(key)
        if d is None:
            d = differentiate(self.expr, var, order)
            self._derivs[key] = d
        return d

    def predict(self, X):
        return evaluate(self.expr, X)

    def image_interval(self, box):
        return eval_interval(self.expr, box)

    def derivative_interval(self, box, var, order=1):
        return eval_interval(self._derivative(var, order), box)

    def derivative_values(self, X, var, order=1):
        return evaluate(self._derivative(var, order), X)
