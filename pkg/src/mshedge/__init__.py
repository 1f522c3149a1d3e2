"""Solvers for multi-stage stochastic variational inequalities.

Discrete scenario spaces, nonanticipativity projections, progressive
hedging with anchoring/relaxation/inertia and inexact subproblem solves,
the companion proximal-point iteration, seeded instance generators, and a
benchmark CLI.

The hot inner loop prefers a compiled kernel (``mshedge._prg``) and falls
back to pure numpy; ``mshedge._backend.BACKEND`` reports which one is
active, and ``MSHEDGE_PURE_PYTHON=1`` forces the fallback.
"""

from ._backend import BACKEND
from .scenario import (
    Filtration,
    ScenarioSpace,
    StageLayout,
    conditional_expectation,
    expectation,
    inner_product,
    norm,
    project_complement,
    project_nonanticipative,
    rescale,
    rescale_inv,
    validate_field,
)
from .problem import (
    AffineMapping,
    BoxConstraint,
    MsviInstance,
    evaluate,
    load_instance,
    natural_residual,
    project_box,
    residual_err,
    save_instance,
)
from .inner import InnerConfig, InnerResult, InnerSolveError, solve_subproblem
from .pha import (
    ParamSchedule,
    RunReport,
    SolverError,
    Variant,
    builtin_schedule,
    initial_points,
    run_solver,
    step,
    theta_hat,
)
from .ppa import (
    AffineOperator,
    PpaParams,
    ResolventOracle,
    builtin_ppa_params,
    equivalence_check,
    hedging_resolvent,
    partial_inverse_pair,
    project_onto_zero_set,
    resolvent_affine,
    run_ppa,
    step_halpern_ppa,
)
from .generators import (
    ControlConfig,
    TwoStageConfig,
    control_walk,
    gen_control,
    gen_two_stage,
)
from .bench import BenchCell, BenchPlan, run_bench

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # scenario geometry
    "ScenarioSpace",
    "StageLayout",
    "Filtration",
    "validate_field",
    "inner_product",
    "norm",
    "expectation",
    "conditional_expectation",
    "project_nonanticipative",
    "project_complement",
    "rescale",
    "rescale_inv",
    # problem data
    "AffineMapping",
    "BoxConstraint",
    "MsviInstance",
    "evaluate",
    "project_box",
    "residual_err",
    "natural_residual",
    "save_instance",
    "load_instance",
    # inner solver
    "InnerConfig",
    "InnerResult",
    "InnerSolveError",
    "solve_subproblem",
    # outer loops
    "Variant",
    "ParamSchedule",
    "RunReport",
    "SolverError",
    "builtin_schedule",
    "initial_points",
    "theta_hat",
    "step",
    "run_solver",
    # proximal machinery
    "AffineOperator",
    "ResolventOracle",
    "PpaParams",
    "resolvent_affine",
    "builtin_ppa_params",
    "step_halpern_ppa",
    "run_ppa",
    "hedging_resolvent",
    "partial_inverse_pair",
    "project_onto_zero_set",
    "equivalence_check",
    # generators and bench
    "TwoStageConfig",
    "ControlConfig",
    "control_walk",
    "gen_two_stage",
    "gen_control",
    "BenchCell",
    "BenchPlan",
    "run_bench",
]
