"""Symbolic regression under shape constraints.

Models come in two representations: expression trees evolved by genetic
programming and weighted sums of transformed monomials evolved by a
mutation-only algorithm with least-squares weight fitting.  Both support
interval bound propagation, which turns requirements on a model's image or
partial derivatives over a box into a conservative feasibility check.
"""

__version__ = "0.1.0"

from . import (
    cli,
    constraints,
    experiment,
    exprtree,
    fitness,
    gp,
    interval,
    itea,
    localopt,
    modelfile,
    problems,
    runlog,
)
from .constraints import ConstraintSet, ShapeConstraint, monotonicity_constraints
from .gp import GPConfig
from .itea import ITEAConfig, ITExpression
from .problems import ProblemSpec, builtin_registry

__all__ = [
    "cli",
    "constraints",
    "experiment",
    "exprtree",
    "fitness",
    "gp",
    "interval",
    "itea",
    "localopt",
    "modelfile",
    "problems",
    "runlog",
    "ConstraintSet",
    "ShapeConstraint",
    "monotonicity_constraints",
    "GPConfig",
    "ITEAConfig",
    "ITExpression",
    "ProblemSpec",
    "builtin_registry",
    "__version__",
]
