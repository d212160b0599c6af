"""Generational tree GP with tournament selection and a single elite.

Every generation keeps the best individual unchanged (and does not re-score
it) and fills the remaining slots with tournament-selected parents combined
by subtree crossover, followed by mutation at a fixed rate and, in the
memetic variant (n_opt > 0), a few Levenberg-Marquardt iterations on the
child's parameters.  Candidates violating their constraint set score the
worst possible error, so the constrained search is pure death-penalty.

Length and depth limits hold for every individual ever created: crossover
only considers donor subtrees that fit, and mutation budgets its branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exprtree as ex
from . import fitness
from .constraints import ConstraintSet
from .exprtree import TreeModel
from .localopt import LMConfig, optimize
from .runlog import ConvergenceRow


@dataclass
class GPConfig:
    population_size: int = 1000
    generations: int = 200
    tournament_size: int = 5
    crossover_rate: float = 1.0
    mutation_rate: float = 0.15
    max_length: int = 50
    max_depth: int = 20
    n_opt: int = 0  # LM iterations per child; 0 disables the memetic step
    seed: int = 0


@dataclass
class GPResult:
    expr: object
    error: float
    scaled: fitness.ScaledModel
    log: list[ConvergenceRow] = field(default_factory=list)
    evaluations: int = 0


def tournament_select(errors, rng, size):
    idx = rng.integers(0, len(errors), size=size)
    return int(idx[np.argmin(errors[idx])])


def subtree_crossover(p1, p2, rng, max_length=50, max_depth=20):
    """Replace a random position of p1 with a fitting random subtree of p2.

    Donor subtrees that would break the length or depth cap are excluded
    up front; if nothing fits, p1 survives unchanged.
    """
    positions = ex.annotated_positions(p1)
    cut = int(rng.integers(len(positions)))
    node, depth = positions[cut]
    len_budget = max_length - (p1.size - node.size)
    height_budget = max_depth - depth + 1
    donors = [
        n
        for n, _ in ex.annotated_positions(p2)
        if n.size <= len_budget and n.height <= height_budget
    ]
    if not donors:
        return p1
    return ex.replace_at(p1, cut, donors[int(rng.integers(len(donors)))])


def mutate(e, rng, dim, max_length=50, max_depth=20):
    """One of four edits: subtree regrowth, a Gaussian bump on all parameters
    or on one parameter, or swapping a function symbol for another of the
    same arity.  Inapplicable choices fall back to subtree regrowth."""
    action = int(rng.integers(4))
    params = ex.extract_params(e)
    if action in (1, 2) and not params:
        action = 0
    positions = ex.annotated_positions(e)
    func_positions = [
        i for i, (n, _) in enumerate(positions) if type(n) in (ex.Unary, ex.Binary)
    ]
    if action == 3 and not func_positions:
        action = 0

    if action == 0:
        cut = int(rng.integers(len(positions)))
        node, depth = positions[cut]
        len_budget = max(1, max_length - (e.size - node.size))
        height_budget = max(1, max_depth - depth + 1)
        branch = ex.ptc2_random(rng, dim, len_budget, height_budget)
        return ex.replace_at(e, cut, branch)
    if action == 1:
        bumped = [v + rng.normal() for v in params]
        return ex.update_params(e, bumped)
    if action == 2:
        j = int(rng.integers(len(params)))
        params[j] += rng.normal()
        return ex.update_params(e, params)
    pos = func_positions[int(rng.integers(len(func_positions)))]
    node = positions[pos][0]
    if type(node) is ex.Unary:
        tags = [t for t in ex.UNARY_TAGS if t != node.tag]
        repl = ex.Unary(tags[int(rng.integers(len(tags)))], node.child)
    else:
        tags = [t for t in ex.BINARY_TAGS if t != node.tag]
        repl = ex.Binary(tags[int(rng.integers(len(tags)))], node.left, node.right)
    return ex.replace_at(e, pos, repl)


def run(cfg: GPConfig, X, y, constraints: ConstraintSet | None = None) -> GPResult:
    rng = np.random.default_rng(cfg.seed)
    N = cfg.population_size
    dim = X.shape[1]
    lm_cfg = LMConfig(max_iterations=cfg.n_opt) if cfg.n_opt > 0 else None

    def score(e):
        return fitness.evaluate(TreeModel(e), X, y, constraints)

    pop = [ex.ptc2_random(rng, dim, cfg.max_length, cfg.max_depth) for _ in range(N)]
    errors = np.array([score(e) for e in pop])
    evaluations = N
    log = [_row(0, evaluations, errors)]

    for g in range(1, cfg.generations + 1):
        elite = int(np.argmin(errors))
        next_pop = [pop[elite]]
        next_err = np.empty(N)
        next_err[0] = errors[elite]
        for i in range(1, N):
            p1 = pop[tournament_select(errors, rng, cfg.tournament_size)]
            p2 = pop[tournament_select(errors, rng, cfg.tournament_size)]
            if rng.random() < cfg.crossover_rate:
                child = subtree_crossover(p1, p2, rng, cfg.max_length, cfg.max_depth)
            else:
                child = p1
            if rng.random() < cfg.mutation_rate:
                child = mutate(child, rng, dim, cfg.max_length, cfg.max_depth)
            if lm_cfg is not None:
                child = optimize(child, X, y, lm_cfg)
            next_pop.append(child)
            next_err[i] = score(child)
        pop, errors = next_pop, next_err
        # the log counts one evaluation slot per surviving individual, the
        # carried elite included
        evaluations += N
        log.append(_row(g, evaluations, errors))

    best = int(np.argmin(errors))
    scaled = fitness.linear_scale(TreeModel(pop[best]), X, y)
    return GPResult(
        expr=pop[best],
        error=float(errors[best]),
        scaled=scaled,
        log=log,
        evaluations=evaluations,
    )


def _row(gen, evals, errors):
    return ConvergenceRow(
        generation=gen,
        evaluations=evals,
        best_nmse=float(np.min(errors)),
        median_nmse=float(np.median(errors)),
    )
