"""Interaction-transformation evolution.

Models are affine combinations of transformed monomials:

    f(x) = w0 + sum_i w_i * t_i( prod_j x_j ^ k_ij )

with integer strengths k_ij and a unary transform t_i per term.  Structure
is evolved by mutation only; the weights (and the intercept) are refit by
ordinary least squares after every structural edit, and the internal
fitness is the training RMSE of that fit.

The representation makes interval analysis cheap and tight: the image of a
monomial is a product of integer interval powers, and its partial
derivatives are again monomials (with one strength decremented) times the
transform's derivative, so no expression-level differentiation is needed.

Two drivers live here: a plain mutate-and-select loop, and a two-population
variant for constrained problems that evolves feasible candidates (ranked
by RMSE) and infeasible ones (ranked by total constraint violation) side by
side, migrating children to whichever population their feasibility check
assigns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import interval as ia
from .constraints import ConstraintSet, check_pessimistic
from .interval import Interval
from .runlog import ConvergenceRow

TRANSFORMS = ("id", "sin", "cos", "tanh", "sqrt", "log", "log1p", "exp")

_T_NP = {
    "id": lambda v: v,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "log": np.log,
    "log1p": np.log1p,
    "exp": np.exp,
}

# first derivatives of the transforms, pointwise
_T1_NP = {
    "id": lambda v: np.ones_like(v),
    "sin": np.cos,
    "cos": lambda v: -np.sin(v),
    "tanh": lambda v: 1.0 - np.tanh(v) ** 2,
    "sqrt": lambda v: 0.5 / np.sqrt(v),
    "log": lambda v: 1.0 / v,
    "log1p": lambda v: 1.0 / (1.0 + v),
    "exp": np.exp,
}

# second derivatives, pointwise
_T2_NP = {
    "id": lambda v: np.zeros_like(v),
    "sin": lambda v: -np.sin(v),
    "cos": lambda v: -np.cos(v),
    "tanh": lambda v: -2.0 * np.tanh(v) * (1.0 - np.tanh(v) ** 2),
    "sqrt": lambda v: -0.25 / np.sqrt(v) ** 3,
    "log": lambda v: -1.0 / v**2,
    "log1p": lambda v: -1.0 / (1.0 + v) ** 2,
    "exp": np.exp,
}

_ONE = Interval(1.0, 1.0)


def _t1_interval(tag: str, p: Interval) -> Interval:
    if tag == "id":
        return _ONE
    if tag == "sin":
        return ia.unary("cos", p)
    if tag == "cos":
        return ia.neg(ia.unary("sin", p))
    if tag == "tanh":
        t = ia.unary("tanh", p)
        return ia.sub(_ONE, ia.unary("square", t))
    if tag == "sqrt":
        return ia.div(_ONE, ia.mul(ia.point(2.0), ia.unary("sqrt", p)))
    if tag == "log":
        return ia.div(_ONE, p)
    if tag == "log1p":
        return ia.div(_ONE, ia.add(p, _ONE))
    return ia.unary("exp", p)


def _t2_interval(tag: str, p: Interval) -> Interval:
    if tag == "id":
        return Interval(0.0, 0.0)
    if tag == "sin":
        return ia.neg(ia.unary("sin", p))
    if tag == "cos":
        return ia.neg(ia.unary("cos", p))
    if tag == "tanh":
        t = ia.unary("tanh", p)
        return ia.mul(ia.point(-2.0), ia.mul(t, ia.sub(_ONE, ia.unary("square", t))))
    if tag == "sqrt":
        root = ia.unary("sqrt", p)
        return ia.div(ia.point(-1.0), ia.mul(ia.point(4.0), ia.mul(p, root)))
    if tag == "log":
        return ia.div(ia.point(-1.0), ia.unary("square", p))
    if tag == "log1p":
        return ia.div(ia.point(-1.0), ia.unary("square", ia.add(p, _ONE)))
    return ia.unary("exp", p)


@dataclass(frozen=True)
class ITTerm:
    """One transformed monomial: transform(prod_j x_j ^ strengths[j])."""

    strengths: tuple[int, ...]
    transform: str

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform: {self.transform!r}")
        object.__setattr__(self, "strengths", tuple(int(k) for k in self.strengths))


def _monomial(term: ITTerm, X):
    col = None
    for j, k in enumerate(term.strengths):
        if k == 0:
            continue
        part = X[:, j] ** k
        col = part if col is None else col * part
    if col is None:
        return np.ones(X.shape[0])
    return col


def _features(terms, X):
    if not terms:
        return np.empty((X.shape[0], 0))
    with np.errstate(all="ignore"):
        return np.column_stack([_T_NP[t.transform](_monomial(t, X)) for t in terms])


def _monomial_interval(strengths, box) -> Interval:
    out = _ONE
    for j, k in enumerate(strengths):
        if k == 0:
            continue
        out = ia.mul(out, ia.pow_int(box[j], k))
        if not out.defined:
            return out
    return out


class ITExpression:
    """A fitted interaction-transformation model."""

    __slots__ = ("terms", "weights", "intercept")

    def __init__(self, terms, weights, intercept: float):
        self.terms = tuple(terms)
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (len(self.terms),):
            raise ValueError("one weight per term required")
        self.intercept = float(intercept)

    @property
    def n_vars(self) -> int:
        return len(self.terms[0].strengths) if self.terms else 0

    def __repr__(self):
        return f"ITExpression({len(self.terms)} terms, intercept={self.intercept:g})"

    def predict(self, X):
        if not self.terms:
            return np.full(X.shape[0], self.intercept)
        return self.intercept + _features(self.terms, X) @ self.weights

    def image_interval(self, box) -> Interval:
        out = ia.point(self.intercept)
        for w, term in zip(self.weights, self.terms):
            p = _monomial_interval(term.strengths, box)
            out = ia.add(out, ia.mul(ia.point(float(w)), ia.unary(term.transform, p)))
            if not out.defined:
                return out
        return out

    def derivative_interval(self, box, var: int, order: int = 1) -> Interval:
        if order not in (1, 2):
            raise ValueError("supported derivative orders are 1 and 2")
        out = Interval(0.0, 0.0)
        for w, term in zip(self.weights, self.terms):
            k = term.strengths[var]
            if k == 0:
                continue
            p = _monomial_interval(term.strengths, box)
            down1 = list(term.strengths)
            down1[var] -= 1
            p1 = _monomial_interval(down1, box)
            inner = ia.mul(ia.point(float(k)), p1)  # d(monomial)/dx_var
            if order == 1:
                contrib = ia.mul(_t1_interval(term.transform, p), inner)
            else:
                first = ia.mul(_t2_interval(term.transform, p), ia.unary("square", inner))
                down2 = list(down1)
                down2[var] -= 1
                p2 = _monomial_interval(down2, box)
                second = ia.mul(
                    _t1_interval(term.transform, p),
                    ia.mul(ia.point(float(k * (k - 1))), p2),
                )
                contrib = ia.add(first, second)
            out = ia.add(out, ia.mul(ia.point(float(w)), contrib))
            if not out.defined:
                return out
        return out

    def derivative_values(self, X, var: int, order: int = 1):
        if order not in (1, 2):
            raise ValueError("supported derivative orders are 1 and 2")
        out = np.zeros(X.shape[0])
        with np.errstate(all="ignore"):
            for w, term in zip(self.weights, self.terms):
                k = term.strengths[var]
                if k == 0:
                    continue
                p = _monomial(term, X)
                down1 = list(term.strengths)
                down1[var] -= 1
                p1 = _monomial(ITTerm(down1, "id"), X)
                inner = k * p1
                if order == 1:
                    out += w * _T1_NP[term.transform](p) * inner
                else:
                    down2 = list(down1)
                    down2[var] -= 1
                    p2 = _monomial(ITTerm(down2, "id"), X)
                    out += w * (
                        _T2_NP[term.transform](p) * inner**2
                        + _T1_NP[term.transform](p) * (k * (k - 1)) * p2
                    )
        return out

    def to_dict(self):
        return {
            "intercept": self.intercept,
            "terms": [
                {
                    "strengths": list(t.strengths),
                    "transform": t.transform,
                    "weight": float(w),
                }
                for t, w in zip(self.terms, self.weights)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        terms = [ITTerm(tuple(t["strengths"]), t["transform"]) for t in d["terms"]]
        weights = [t["weight"] for t in d["terms"]]
        return cls(terms, weights, d["intercept"])


def fit_weights_ols(terms, X, y):
    """Least-squares weights and intercept for a term list.

    Returns (ITExpression, rmse), or None when the design matrix contains
    non-finite entries (a term undefined somewhere on the data).  Exact
    collinearity is resolved by the minimum-norm solution.
    """
    terms = tuple(terms)
    F = _features(terms, X)
    if not np.all(np.isfinite(F)):
        return None
    A = np.column_stack([F, np.ones(X.shape[0])]) if terms else np.ones((X.shape[0], 1))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    rmse = float(np.sqrt(np.mean((pred - y) ** 2)))
    if not math.isfinite(rmse):
        return None
    return ITExpression(terms, coef[:-1], float(coef[-1])), rmse


# ------------------------------------------------------------- generation


def random_term(rng, dim, strength_range=(-4, 4), term_length=(2, 6)) -> ITTerm:
    lo = min(term_length[0], dim)
    hi = min(term_length[1], dim)
    n_active = int(rng.integers(lo, hi + 1))
    idx = rng.choice(dim, size=n_active, replace=False)
    strengths = [0] * dim
    klo, khi = strength_range
    for j in idx:
        k = 0
        while k == 0:
            k = int(rng.integers(klo, khi + 1))
        strengths[j] = k
    return ITTerm(tuple(strengths), TRANSFORMS[int(rng.integers(len(TRANSFORMS)))])


def interact(a: ITTerm, b: ITTerm, sign: int) -> ITTerm:
    """Elementwise strength combination of two terms.

    The positive interaction adds b's strengths to a's, the negative one
    subtracts them; a's transform is kept.  The two are exact inverses:
    interact(interact(a, b, +1), b, -1) == a.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    merged = tuple(x + sign * z for x, z in zip(a.strengths, b.strengths))
    return ITTerm(merged, a.transform)


def _dedupe(terms):
    seen = {}
    for t in terms:
        seen.setdefault((t.strengths, t.transform), t)
    return tuple(seen.values())


def random_terms(rng, dim, max_terms=4, strength_range=(-4, 4), term_length=(2, 6)):
    n = int(rng.integers(1, max_terms + 1))
    return _dedupe(random_term(rng, dim, strength_range, term_length) for _ in range(n))


def mutate_terms(terms, rng, dim, strength_range=(-4, 4), term_length=(2, 6)):
    """One of five structural edits, falling back to add-term when the drawn
    action does not apply (removing or interacting needs enough terms):

    drop a term / add a fresh term / redraw one term's strengths /
    positive interaction (add another term's strengths elementwise) /
    negative interaction (subtract them).
    """
    terms = list(terms)
    action = int(rng.integers(5))
    if action == 0 and len(terms) < 2:
        action = 1
    if action in (3, 4) and len(terms) < 2:
        action = 1

    if action == 0:
        del terms[int(rng.integers(len(terms)))]
    elif action == 1:
        terms.append(random_term(rng, dim, strength_range, term_length))
    elif action == 2:
        i = int(rng.integers(len(terms)))
        fresh = random_term(rng, dim, strength_range, term_length)
        terms[i] = ITTerm(fresh.strengths, terms[i].transform)
    else:
        i = int(rng.integers(len(terms)))
        j = int(rng.integers(len(terms) - 1))
        if j >= i:
            j += 1
        terms[i] = interact(terms[i], terms[j], 1 if action == 3 else -1)
    return _dedupe(terms)


# ---------------------------------------------------------------- drivers


@dataclass
class ITEAConfig:
    population_size: int = 200
    iterations: int = 500
    max_terms_init: int = 4
    strength_range: tuple[int, int] = (-4, 4)
    term_length: tuple[int, int] = (2, 6)
    seed: int = 0


@dataclass
class ITEAResult:
    expr: ITExpression | None
    rmse: float
    log: list[ConvergenceRow] = field(default_factory=list)
    evaluations: int = 0

    @property
    def found(self) -> bool:
        return self.expr is not None


def _rmse_to_nmse(rmse, var_y):
    if not math.isfinite(rmse) or var_y <= 0:
        return 1.0
    return min(rmse * rmse / var_y, 1.0)


def _spawn(cfg, rng, dim, X, y, attempts=30):
    for _ in range(attempts):
        terms = random_terms(
            rng, dim, cfg.max_terms_init, cfg.strength_range, cfg.term_length
        )
        fitted = fit_weights_ols(terms, X, y)
        if fitted is not None:
            return fitted
    # give up on a sensible draw; an intercept-only model always fits
    return fit_weights_ols((), X, y)


def run_itea(cfg: ITEAConfig, X, y) -> ITEAResult:
    rng = np.random.default_rng(cfg.seed)
    dim = X.shape[1]
    var_y = float(np.mean((y - np.mean(y)) ** 2))
    pop = [_spawn(cfg, rng, dim, X, y) for _ in range(cfg.population_size)]
    evaluations = cfg.population_size
    log = [_it_row(0, evaluations, [r for _, r in pop], var_y)]
    for it in range(1, cfg.iterations + 1):
        nxt = []
        for expr, rmse in pop:
            child_terms = mutate_terms(
                expr.terms, rng, dim, cfg.strength_range, cfg.term_length
            )
            fitted = fit_weights_ols(child_terms, X, y)
            evaluations += 1
            if fitted is not None and fitted[1] < rmse:
                nxt.append(fitted)
            else:
                nxt.append((expr, rmse))
        pop = nxt
        log.append(_it_row(it, evaluations, [r for _, r in pop], var_y))
    best_expr, best_rmse = min(pop, key=lambda p: p[1])
    return ITEAResult(expr=best_expr, rmse=best_rmse, log=log, evaluations=evaluations)


def _it_row(it, evals, rmses, var_y):
    nm = sorted(_rmse_to_nmse(r, var_y) for r in rmses)
    best = nm[0] if nm else 1.0
    med = float(np.median(nm)) if nm else 1.0
    return ConvergenceRow(generation=it, evaluations=evals, best_nmse=best, median_nmse=med)


@dataclass
class _Scored:
    expr: ITExpression
    rmse: float
    violation: float


def run_fi2pop(cfg: ITEAConfig, X, y, constraints: ConstraintSet) -> ITEAResult:
    """Feasible-infeasible two-population search.

    Children of both populations are routed by the pessimistic feasibility
    check; each population is truncated to the configured size, feasible by
    RMSE, infeasible by violation total.  With no feasible model found the
    result carries expr=None, which callers must treat as a failed search,
    not an error.
    """
    if constraints is None or not len(constraints):
        raise ValueError("run_fi2pop requires a non-empty constraint set")
    rng = np.random.default_rng(cfg.seed)
    dim = X.shape[1]
    var_y = float(np.mean((y - np.mean(y)) ** 2))
    N = cfg.population_size

    def score(fitted):
        expr, rmse = fitted
        return _Scored(expr, rmse, check_pessimistic(expr, constraints))

    feas: list[_Scored] = []
    infeas: list[_Scored] = []

    def route(s: _Scored):
        (feas if s.violation == 0.0 else infeas).append(s)

    for _ in range(N):
        route(score(_spawn(cfg, rng, dim, X, y)))
    evaluations = N
    log = [_it_row(0, evaluations, [s.rmse for s in feas], var_y)]

    for it in range(1, cfg.iterations + 1):
        parents = feas + infeas
        for p in parents:
            child_terms = mutate_terms(
                p.expr.terms, rng, dim, cfg.strength_range, cfg.term_length
            )
            fitted = fit_weights_ols(child_terms, X, y)
            evaluations += 1
            if fitted is not None:
                route(score(fitted))
        feas.sort(key=lambda s: s.rmse)
        del feas[N:]
        infeas.sort(key=lambda s: s.violation)
        del infeas[N:]
        log.append(_it_row(it, evaluations, [s.rmse for s in feas], var_y))

    if not feas:
        return ITEAResult(expr=None, rmse=math.inf, log=log, evaluations=evaluations)
    best = feas[0]
    return ITEAResult(expr=best.expr, rmse=best.rmse, log=log, evaluations=evaluations)
