"""Levenberg-Marquardt tuning of tree parameters.

Trees expose their parameters in pre-order; here they are treated as the
free vector of a nonlinear least-squares problem against the training
targets.  The Jacobian comes from the tree's own differentiation machinery:
parameter positions are rewritten as extra input columns, and the tree is
differentiated with respect to those.  A forward-difference Jacobian is
available as a fallback for comparison.

Steps are accepted only when they reduce the sum of squared residuals, so a
tuned tree is never worse on the training data than the tree it came from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exprtree as ex


@dataclass
class LMConfig:
    max_iterations: int = 10
    damping_init: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 0.1
    gradient_tol: float = 1e-8
    jacobian: str = "symbolic"  # "symbolic" | "fd"


def _augment(e, dim):
    """Rewrite parameter positions as variables dim, dim+1, ... in pre-order."""
    counter = [dim]

    def walk(n):
        t = type(n)
        if t is ex.Parameter:
            v = ex.Variable(counter[0])
            counter[0] += 1
            return v
        if t is ex.Unary:
            return ex.Unary(n.tag, walk(n.child))
        if t is ex.Binary:
            left = walk(n.left)
            return ex.Binary(n.tag, left, walk(n.right))
        return n

    return walk(e), counter[0] - dim


def optimize(expr, X, y, config: LMConfig | None = None):
    """Return a copy of ``expr`` with locally optimised parameters.

    The tree structure is untouched; only parameter values change.  If the
    initial predictions are not finite, or there is nothing to tune, the
    input tree is returned as is.
    """
    cfg = config or LMConfig()
    theta = np.array(ex.extract_params(expr), dtype=float)
    m = theta.size
    if m == 0 or cfg.max_iterations <= 0:
        return expr
    n, dim = X.shape
    aug, m2 = _augment(expr, dim)
    assert m2 == m
    Xa = np.empty((n, dim + m))
    Xa[:, :dim] = X

    def residuals(th):
        Xa[:, dim:] = th
        return ex.evaluate(aug, Xa) - y

    if cfg.jacobian == "symbolic":
        dcols = [ex.differentiate(aug, dim + j) for j in range(m)]

        def jacobian(th, r):
            Xa[:, dim:] = th
            return np.column_stack([ex.evaluate(dc, Xa) for dc in dcols])

    else:

        def jacobian(th, r):
            cols = []
            for j in range(m):
                h = 1e-7 * max(1.0, abs(th[j]))
                tp = th.copy()
                tp[j] += h
                cols.append((residuals(tp) - r) / h)
            return np.column_stack(cols)

    r = residuals(theta)
    if not np.all(np.isfinite(r)):
        return expr
    sse = float(r @ r)
    initial_sse = sse
    lam = cfg.damping_init
    eye = np.eye(m)
    need_linearization = True
    g = JTJ = None
    for _ in range(cfg.max_iterations):
        if need_linearization:
            J = jacobian(theta, r)
            if not np.all(np.isfinite(J)):
                break
            g = J.T @ r
            if float(np.max(np.abs(g))) < cfg.gradient_tol:
                break
            JTJ = J.T @ J
            need_linearization = False
        try:
            delta = np.linalg.solve(JTJ + lam * eye, -g)
        except np.linalg.LinAlgError:
            lam *= cfg.damping_up
            continue
        trial = theta + delta
        r_new = residuals(trial)
        with np.errstate(over="ignore"):
            sse_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
        if sse_new < sse:
            theta, r, sse = trial, r_new, sse_new
            lam *= cfg.damping_down
            need_linearization = True
        else:
            lam *= cfg.damping_up
    if sse >= initial_sse:
        return expr
    return ex.update_params(expr, theta.tolist())
