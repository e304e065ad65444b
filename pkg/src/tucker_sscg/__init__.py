"""Subspace steepest descent and conjugate gradients for Tucker-format linear systems.

The public API covers Tucker tensors and their rounding, Kronecker-sum
operators, the outer solvers, exponential-sum preconditioners and the
finite-difference benchmark problems.
"""
from .errors import CapacityError, DefinitenessError, ParameterError, ShapeError
from .operator import (DirectionOperator, KronSumOperator, apply_rounded, assemble_dense,
                       project_operator, project_rhs)
from .preconditioners import (EigPreconditioner, ExponentialSumParams, FFTPreconditioner,
                              InnerOuterPreconditioner, dst1, idst1, p_eig_apply, p_fft_apply)
from .problems import Grid1D, build_example, default_rhs
from .reduced import PrecisionPolicy, ReducedProblem, solve_reduced
from .solvers import SolveReport, SolverConfig, phi, solve
from .tucker import (TruncationPolicy, TuckerTensor, inner, norm, rounding_sum, st_hosvd,
                     ten_blk_diag, to_dense, ttm)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "DefinitenessError", "ParameterError", "ShapeError",
    "DirectionOperator", "KronSumOperator", "apply_rounded", "assemble_dense",
    "project_operator", "project_rhs",
    "EigPreconditioner", "ExponentialSumParams", "FFTPreconditioner",
    "InnerOuterPreconditioner", "dst1", "idst1", "p_eig_apply", "p_fft_apply",
    "Grid1D", "build_example", "default_rhs",
    "PrecisionPolicy", "ReducedProblem", "solve_reduced",
    "SolveReport", "SolverConfig", "phi", "solve",
    "TruncationPolicy", "TuckerTensor", "inner", "norm", "rounding_sum", "st_hosvd",
    "ten_blk_diag", "to_dense", "ttm",
]
