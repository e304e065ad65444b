"""Small projected systems for the step coefficients.

At every outer iteration the operator is projected onto the current
direction space, ``H = P^T A P``, and two systems share it: one for the step
``alpha`` (right-hand side ``P^T r``) and, for the conjugate-gradient variant,
one for ``beta`` (right-hand side ``-P^T A r_next``).

Systems with at most :data:`DIRECT_SOLVE_LIMIT` unknowns are assembled and
Cholesky-factored once; larger ones run Jacobi-preconditioned CG on the
vectorized system, applying the operator through its mode-1 matricization.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
import scipy.linalg

from .errors import DefinitenessError, ParameterError, ShapeError
from .operator import (DirectionOperator, KronSumOperator, apply_rounded, assemble_dense,
                       project_operator, project_rhs)
from .tucker import TruncationPolicy, TuckerTensor

DIRECT_SOLVE_LIMIT = 4096

_PRECISIONS = ("full", "reduced")


@dataclass(frozen=True)
class PrecisionPolicy:
    """Which subtasks run in single precision (results are widened to float64)."""

    reduced_solve: str = "full"
    precond_apply: str = "full"

    def __post_init__(self):
        for name in ("reduced_solve", "precond_apply"):
            if getattr(self, name) not in _PRECISIONS:
                raise ParameterError(f"{name} must be one of {_PRECISIONS}")

    @classmethod
    def mixed(cls) -> "PrecisionPolicy":
        return cls("reduced", "reduced")

    @property
    def solve_dtype(self):
        return np.float32 if self.reduced_solve == "reduced" else np.float64

    @property
    def precond_dtype(self):
        return np.float32 if self.precond_apply == "reduced" else np.float64


@dataclass(frozen=True)
class ReducedProblem:
    op: KronSumOperator
    rhs: np.ndarray
    tol: float = 1e-2
    maxit: int = 100

    def __post_init__(self):
        if np.shape(self.rhs) != self.op.in_shape:
            raise ShapeError(f"rhs shape {np.shape(self.rhs)} does not match {self.op.in_shape}")


@dataclass
class InnerStats:
    iterations: int = 0
    converged: bool = True
    relres: float = 0.0
    method: str = "direct"


class ReducedSystem:
    """A projected operator with its solver state, shared by the alpha and beta solves."""

    def __init__(self, op: KronSumOperator, precision: PrecisionPolicy = PrecisionPolicy()):
        if not op.symmetric:
            raise DefinitenessError("reduced solves require an operator flagged symmetric")
        self.op = op
        self.precision = precision
        self.size = int(np.prod(op.in_shape))

    @property
    def direct(self) -> bool:
        return self.size <= DIRECT_SOLVE_LIMIT

    @cached_property
    def _cholesky(self):
        H = assemble_dense(self.op, cap=DIRECT_SOLVE_LIMIT).astype(self.precision.solve_dtype)
        H = 0.5 * (H + H.T)
        try:
            return scipy.linalg.cho_factor(H, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise DefinitenessError(f"reduced operator is not positive definite: {exc}") from exc

    @cached_property
    def _matricized(self):
        # left factor per term, plus the explicitly stored Kronecker product of modes 2..d
        dtype = self.precision.solve_dtype
        left, right = [], []
        for term in self.op.terms:
            left.append(np.asarray(term[0], dtype=dtype))
            rest = [np.asarray(M, dtype=dtype) for M in reversed(term[1:])]
            right.append(reduce(np.kron, rest) if rest else np.ones((1, 1), dtype=dtype))
        diag = sum(np.kron(np.diag(R), np.diag(L)) for L, R in zip(left, right))
        if np.any(diag <= 0):
            raise DefinitenessError("reduced operator has a nonpositive diagonal entry")
        return left, right, diag

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply the operator to a vectorized (mode-1 fastest) tensor."""
        left, right, _ = self._matricized
        s1 = left[0].shape[0]
        X = v.reshape(s1, -1, order="F")
        Y = sum(L @ X @ R.T for L, R in zip(left, right))
        return Y.reshape(-1, order="F")

    def solve(self, rhs: np.ndarray, tol: float = 1e-2, maxit: int = 100):
        """Solve ``op(x) = rhs``; returns ``(x, InnerStats)`` with ``x`` in float64."""
        rhs = np.asarray(rhs)
        if rhs.shape != self.op.in_shape:
            raise ShapeError(f"rhs shape {rhs.shape} does not match {self.op.in_shape}")
        dtype = self.precision.solve_dtype
        b = rhs.reshape(-1, order="F").astype(dtype)
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return np.zeros(rhs.shape), InnerStats(method="direct" if self.direct else "pcg")
        if self.direct:
            x = scipy.linalg.cho_solve(self._cholesky, b, check_finite=False)
            x = x.astype(np.float64)
            return x.reshape(rhs.shape, order="F"), InnerStats()
        x, stats = self._pcg(b, tol, maxit)
        return x.astype(np.float64).reshape(rhs.shape, order="F"), stats

    def _pcg(self, b, tol, maxit):
        diag = self._matricized[2]
        nb = np.linalg.norm(b)
        x = np.zeros_like(b)
        r = b.copy()
        z = r / diag
        p = z.copy()
        rz = r @ z
        best, best_res = x.copy(), 1.0
        for it in range(1, maxit + 1):
            q = self.matvec(p)
            curv = p @ q
            if curv <= 0:
                raise DefinitenessError("negative curvature in the reduced CG solve")
            a = rz / curv
            x += a * p
            r -= a * q
            res = np.linalg.norm(r) / nb
            if res < best_res:
                best, best_res = x.copy(), res
            if res <= tol:
                return best, InnerStats(it, True, float(res), "pcg")
            z = r / diag
            rz, rz_old = r @ z, rz
            p = z + (rz / rz_old) * p
        warnings.warn("reduced CG solve hit maxit before reaching its tolerance",
                      RuntimeWarning, stacklevel=3)
        return best, InnerStats(maxit, False, float(best_res), "pcg")


def solve_reduced(p: ReducedProblem, policy: PrecisionPolicy = PrecisionPolicy()):
    """Solve a single reduced problem; returns ``(x, InnerStats)``."""
    return ReducedSystem(p.op, policy).solve(p.rhs, p.tol, p.maxit)


@dataclass
class ReducedConfig:
    """Settings shared by the alpha and beta solves of one outer iteration."""

    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    precision: PrecisionPolicy = field(default_factory=PrecisionPolicy)
    tol: float = 1e-2
    maxit: int = 100


def reduce_system(A: KronSumOperator, P: DirectionOperator, cfg: ReducedConfig) -> ReducedSystem:
    return ReducedSystem(project_operator(A, P), cfg.precision)


def solve_alpha(A, P: DirectionOperator, r: TuckerTensor, cfg: ReducedConfig,
                system: ReducedSystem | None = None):
    """Step coefficients from ``P^T A P alpha = P^T r``."""
    if system is None:
        system = reduce_system(A, P, cfg)
    return system.solve(project_rhs(P, r), cfg.tol, cfg.maxit)


def solve_beta(A, P: DirectionOperator, r_next: TuckerTensor, cfg: ReducedConfig,
               system: ReducedSystem | None = None):
    """Conjugation coefficients from ``P^T A P beta = -P^T A r_next``."""
    if system is None:
        system = reduce_system(A, P, cfg)
    Ar = apply_rounded(A, r_next, cfg.policy)
    return system.solve(-project_rhs(P, Ar), cfg.tol, cfg.maxit)
