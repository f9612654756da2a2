"""One-pass bolt tightening plans for circular flange joints."""

from .bench import BenchModel, BenchState, LoadHistory, run_sequence
from .eicm import (
    ConvergenceError,
    InfeasibleTargetError,
    InteractionMatrix,
    build_sh,
    compute_A,
    iterative_eicm,
    run_eicm,
    solve_initial_loads,
)
from .metrics import (
    LoadStats,
    avg_relative_error,
    load_stats,
    matrix_max_abs_diff,
    yield_check,
)
from .model import (
    TAM_MU02,
    TAM_MU03,
    AssemblyPlan,
    ComputationError,
    JointSpec,
    LoadVector,
    TamCoefficients,
    ValidationError,
    validate_spec,
)
from .pattern import TighteningPattern, make_pattern, order_index, ring_distance
from .tam import (
    TwoStepProtocol,
    assemble_A,
    design_protocol,
    execute_protocol,
    extract_coefficients,
    run_tam,
)

__version__ = "0.1.0"

__all__ = [
    "BenchModel",
    "BenchState",
    "LoadHistory",
    "run_sequence",
    "ConvergenceError",
    "InfeasibleTargetError",
    "InteractionMatrix",
    "build_sh",
    "compute_A",
    "iterative_eicm",
    "run_eicm",
    "solve_initial_loads",
    "LoadStats",
    "avg_relative_error",
    "load_stats",
    "matrix_max_abs_diff",
    "yield_check",
    "TAM_MU02",
    "TAM_MU03",
    "AssemblyPlan",
    "ComputationError",
    "JointSpec",
    "LoadVector",
    "TamCoefficients",
    "ValidationError",
    "validate_spec",
    "TighteningPattern",
    "make_pattern",
    "order_index",
    "ring_distance",
    "TwoStepProtocol",
    "assemble_A",
    "design_protocol",
    "execute_protocol",
    "extract_coefficients",
    "run_tam",
]
