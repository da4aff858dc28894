"""Local symbolic approximation of implicit first-order ODEs ``F(x, y, y') = 0``.

Typical use::

    from implicit_ode import parse, check_base_point, implicit_jet
    from implicit_ode import build_normal_form, solve_normal_form

    F = parse("2*p - q")                      # p stands for y, q for y'
    base = check_base_point(F, (0, 1, 2), "q")
    sol = solve_normal_form(build_normal_form(implicit_jet(F, base, (1, 1))))
    sol.to_expr()                              # exp(2 * x)
"""

from .errors import (
    Degenerate,
    DiniPreconditionError,
    DomainViolation,
    EvaluationError,
    ImplicitODEError,
    IntervalMismatch,
    NoRealBranch,
    NoRealRoot,
    NoRootFound,
    NoZeroCrossing,
    ParseError,
    ResidualTooLarge,
    RootLost,
    SolverError,
    StepTooLarge,
    UnboundVariable,
    UnderDetermined,
    UnknownIdentifier,
    MalformedExponent,
    WrongMode,
)
from .expr import Expr, differentiate, evaluate, lambdify, simplify, substitute, to_text, total_derivative
from .jet import (
    BasePoint,
    ImplicitJet,
    Mode,
    check_base_point,
    implicit_jet,
    jet_closed_form_check,
    solve_missing_coordinate,
)
from .local import (
    ClosedFormSolution,
    LocalODE,
    NormalForm,
    PsiForm,
    build_normal_form,
    build_psi_form,
    collapse_time,
    solve_normal_form,
    solve_psi_form,
)
from .numeric import (
    ExprCurve,
    Trajectory,
    ValidationReport,
    compare_trajectories,
    finite_difference_jet,
    integrate_bubble,
    integrate_explicit,
    residual_profile,
)
from .parser import parse, parse_constant
from .series import compare_with_implicit, expand_residual, solve_branches
from .taylor import TruncatedPoly, taylor_coefficients
from .worked import ExampleConfig, run_example

__version__ = "0.1.0"

__all__ = [
    "Degenerate",
    "DiniPreconditionError",
    "DomainViolation",
    "EvaluationError",
    "ImplicitODEError",
    "IntervalMismatch",
    "NoRealBranch",
    "NoRealRoot",
    "NoRootFound",
    "NoZeroCrossing",
    "ParseError",
    "ResidualTooLarge",
    "RootLost",
    "SolverError",
    "StepTooLarge",
    "UnboundVariable",
    "UnderDetermined",
    "UnknownIdentifier",
    "MalformedExponent",
    "WrongMode",
    "Expr",
    "differentiate",
    "evaluate",
    "lambdify",
    "simplify",
    "substitute",
    "to_text",
    "total_derivative",
    "BasePoint",
    "ImplicitJet",
    "Mode",
    "check_base_point",
    "implicit_jet",
    "jet_closed_form_check",
    "solve_missing_coordinate",
    "ClosedFormSolution",
    "LocalODE",
    "NormalForm",
    "PsiForm",
    "build_normal_form",
    "build_psi_form",
    "collapse_time",
    "solve_normal_form",
    "solve_psi_form",
    "ExprCurve",
    "Trajectory",
    "ValidationReport",
    "compare_trajectories",
    "finite_difference_jet",
    "integrate_bubble",
    "integrate_explicit",
    "residual_profile",
    "parse",
    "parse_constant",
    "compare_with_implicit",
    "expand_residual",
    "solve_branches",
    "TruncatedPoly",
    "taylor_coefficients",
    "ExampleConfig",
    "run_example",
]
