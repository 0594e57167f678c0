"""Abs-normal forms, the LIKQ constraint qualification and its transversality characterization."""

__version__ = "0.1.0"

from .absnormal import (
    AbsNormalProblem,
    SwitchingFunction,
    SwitchingSolution,
    evaluate_procedure,
    make_problem,
    residual,
    solve_switching,
    validate,
)
from .analysis import active_sets, check_likq, first_order, jz_fd_oracle, numerical_rank
from .errors import (
    DomainError,
    IncompatibleSignatureError,
    InfeasibleError,
    LikqError,
    NotInStratifiedSetError,
    OracleInapplicableError,
    ParseError,
    ProbeError,
    ProblemFileError,
    SwitchingError,
    ValidationError,
)
from .explore import (
    Segment,
    distinct_points,
    draw_perturbation,
    genericity_experiment,
    locate_kinks,
    perturb,
    sample_feasible,
    survey,
)
from .expr import Point, eval_dual, eval_expr, fd_grad_oracle, format_expr, grad_expr, parse_expr
from .generate import random_problem
from .problemfile import dump_problem, load_problem, parse_problem
from .strata import (
    build_pi,
    check_transversality,
    jet,
    likq_transversality_agree,
    structured_transversality,
    structured_transversality_agree,
    tangent_basis,
    whitney_refinement_check,
)
from .verify import verify_problem
