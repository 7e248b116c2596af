"""Manifold sampling for composite nonsmooth minimization of ``h(F(x))``.

``F`` is a smooth black box that is only evaluated, never differentiated;
``h`` is a continuous selection whose pieces ``h_j`` and their gradients are
known. The solver builds linear models of ``F`` and samples the manifolds
of ``h`` near the current point to form descent directions.
"""

from .driver import IterationRecord, Problem, SolveOutcome, SolverConfig, msg_iteration, solve
from .errors import (
    BudgetExhausted,
    ContractViolation,
    EvaluationFault,
    ManifoldSamplingError,
    ModelBuildFault,
    PairSearchExhausted,
    RhoUndefined,
)
from .minnorm import ProjectionResult, project_origin, verify_projection
from .models import ComponentModelSet, MasterModel, build_models
from .oracle import (
    ActivityQuery,
    BlackBoxMap,
    ContinuousSelection,
    MaxAffine,
    PiecewiseQuadratic,
    SelectionOracle,
    abs_value,
    active_indices,
    l1_norm,
    sum_of_squares,
)
from .problems import load_problem
from .sampling import MSG1, MSG2, find_pair, grid_search_pair, bisection_search_pair
from .trstep import fallback_step, solve_subproblem, solve_trust_region, sufficient_decrease_ok

__all__ = [
    "MSG1", "MSG2", "ActivityQuery", "BlackBoxMap", "BudgetExhausted", "ComponentModelSet",
    "ContinuousSelection", "ContractViolation", "EvaluationFault", "IterationRecord",
    "ManifoldSamplingError", "MasterModel", "MaxAffine", "ModelBuildFault", "PairSearchExhausted",
    "PiecewiseQuadratic", "Problem", "ProjectionResult", "RhoUndefined", "SelectionOracle",
    "SolveOutcome", "SolverConfig", "abs_value", "active_indices", "bisection_search_pair",
    "build_models", "fallback_step", "find_pair", "grid_search_pair", "l1_norm", "load_problem",
    "msg_iteration", "project_origin", "solve", "solve_subproblem", "solve_trust_region",
    "sufficient_decrease_ok", "sum_of_squares", "verify_projection",
]
