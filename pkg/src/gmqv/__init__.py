"""Gauss-Markov semimartingales via covariance factors: kernel evaluation,
closed-form quadratic-variation laws, exact path simulation and Monte Carlo
verification."""

from .exprfn import DomainError, ParseError, parse, evaluate, to_source
from .process_model import (
    Block,
    PiecewiseFn,
    ProcessSpec,
    Segment,
    Side,
    SidedTime,
    SpecError,
    at,
    check_markov_oracle,
    eval_kernel,
    extract_factors,
    left,
    psd_quadratic_form,
    validate,
    variance,
)
from .quadvar import (
    JumpSpec,
    QuadVarLaw,
    build_law,
    event_times,
    jump_covariance,
    jump_second_moment,
    law_mean,
    law_variance,
    sample_law,
)
from .realized import (
    ConvergenceRow,
    convergence_study,
    expected_realized_qv,
    realized_qv,
    verify_level,
)
from .simulate import (
    PathSample,
    SimGrid,
    make_grid,
    sample_path,
    sample_paths,
    transition_params,
)
from .specfile import SpecFileError, SpecValidationError, bundled_path, load_spec
from .stieltjes import RSRequest, RSResult, rs_integral, rs_sum

__version__ = "0.1.0"

__all__ = [
    "Block",
    "ConvergenceRow",
    "DomainError",
    "JumpSpec",
    "ParseError",
    "PathSample",
    "PiecewiseFn",
    "ProcessSpec",
    "QuadVarLaw",
    "RSRequest",
    "RSResult",
    "Segment",
    "Side",
    "SidedTime",
    "SimGrid",
    "SpecError",
    "SpecFileError",
    "SpecValidationError",
    "at",
    "build_law",
    "bundled_path",
    "check_markov_oracle",
    "convergence_study",
    "eval_kernel",
    "evaluate",
    "event_times",
    "expected_realized_qv",
    "extract_factors",
    "jump_covariance",
    "jump_second_moment",
    "law_mean",
    "law_variance",
    "left",
    "load_spec",
    "make_grid",
    "parse",
    "psd_quadratic_form",
    "realized_qv",
    "rs_integral",
    "rs_sum",
    "sample_law",
    "sample_path",
    "sample_paths",
    "to_source",
    "transition_params",
    "validate",
    "variance",
    "verify_level",
]
