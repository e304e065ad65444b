"""Subspace steepest descent and conjugate gradients in Tucker format.

Each iteration replaces the scalar step of the classical methods by a small
coefficient tensor.  With directions ``P_k`` (orthonormal factor matrices
taken from the current search tensor), the update is

    x_{k+1} = x_k + P_k alpha_k,   (P_k^T A P_k) alpha_k = P_k^T r_k,

and the next search tensor is ``r_{k+1}`` (steepest descent) or
``r_{k+1} + P_k beta_k`` with ``(P_k^T A P_k) beta_k = -P_k^T A r_{k+1}``
(conjugate gradients).  All tensors are rounded after every sum and operator
application, and the residual is recomputed from scratch as ``c - A x``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from types import SimpleNamespace
from typing import Callable

import numpy as np

from .errors import ParameterError
from .operator import DirectionOperator, KronSumOperator, apply_rounded
from .reduced import PrecisionPolicy, ReducedConfig, reduce_system, solve_alpha, solve_beta
from .tucker import TruncationPolicy, TuckerTensor, inner, norm, rounding_sum

log = logging.getLogger(__name__)

_METHODS = {
    "sd": "sd", "steepest_descent": "sd",
    "cg": "cg", "conjugate_gradient": "cg",
}


@dataclass
class SolverConfig:
    method: str = "cg"
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    tol: float = 1e-3
    maxit: int = 300
    precision: PrecisionPolicy = field(default_factory=PrecisionPolicy)
    precond: object = None
    inner_maxit: int = 100
    truncate_all_modes: bool = False
    stagnation_window: int = 10
    stagnation_factor: float = 1e-3
    fft_single_precision_min_tol: float = 1e-3

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        self.method = _METHODS[self.method]
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.maxit < 1:
            raise ParameterError(f"maxit must be at least 1, got {self.maxit}")


@dataclass
class SolveReport:
    converged: bool = False
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    rank_history: list = field(default_factory=list)
    inner_stats: list = field(default_factory=list)
    wall_time_seconds: float = 0.0
    stagnated: bool = False
    precision_fallback: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def phi(A: KronSumOperator, x: TuckerTensor, c: TuckerTensor) -> float:
    """Energy functional ``0.5 <x, A x> - <x, c>`` with an untruncated product."""
    Ax = apply_rounded(A, x, TruncationPolicy.lossless())
    return 0.5 * inner(x, Ax) - inner(x, c)


def _residual(A, x, c, cfg):
    y = apply_rounded(A, x, cfg.policy, cfg.truncate_all_modes)
    return rounding_sum(c, -y, cfg.policy)


def _stagnating(history, window, factor):
    if len(history) <= window:
        return False
    return history[-1] > (1.0 - factor) * history[-1 - window]


def solve(A: KronSumOperator, c: TuckerTensor, x0: TuckerTensor | None = None,
          cfg: SolverConfig | None = None, callback: Callable | None = None):
    """Solve ``A(x) = c`` for a symmetric positive definite ``A``.

    Parameters
    ----------
    A : KronSumOperator
        Operator, flagged symmetric.
    c : TuckerTensor
        Right-hand side.
    x0 : TuckerTensor, optional
        Initial guess; the zero tensor by default.
    cfg : SolverConfig, optional
    callback : callable, optional
        Called after each update with a namespace holding ``k``, ``x``, ``r``
        (the new residual), ``r_prev``, ``P``, ``alpha``, ``beta``, ``g`` and
        ``system`` (the reduced system shared by the alpha and beta solves).

    Returns
    -------
    x : TuckerTensor
    report : SolveReport
    """
    cfg = cfg or SolverConfig()
    if not A.symmetric:
        raise ParameterError("the solvers require an operator flagged symmetric")
    if A.in_shape != c.shape:
        raise ParameterError(f"operator shape {A.in_shape} does not match rhs {c.shape}")
    start = time.perf_counter()
    policy = cfg.policy
    x = TuckerTensor.zeros(c.shape) if x0 is None else x0
    precond = cfg.precond
    pdtype = cfg.precision.precond_dtype
    report = SolveReport()
    if precond is not None and getattr(precond, "name", "") == "fft" and pdtype != np.float64 \
            and cfg.tol < cfg.fft_single_precision_min_tol:
        # single-precision sine-basis application stagnates near tight tolerances
        pdtype = np.float64
        report.precision_fallback = True

    def precondition(t):
        return t if precond is None else precond.apply(t, policy, pdtype)

    cnorm = norm(c)
    if cnorm == 0.0:
        report.converged = True
        report.residual_history = [0.0]
        report.rank_history = [{"x": list(x.ranks), "r": [1] * c.ndim}]
        return TuckerTensor.zeros(c.shape), report

    r = _residual(A, x, c, cfg)
    r0norm = norm(r)
    res = [norm(r) / cnorm]
    best = (x, res[0])
    report.rank_history.append({"x": list(x.ranks), "r": list(r.ranks)})
    P = DirectionOperator.from_tensor(precondition(r), policy)
    rcfg = ReducedConfig(policy=policy, precision=cfg.precision, maxit=cfg.inner_maxit)

    for k in range(cfg.maxit):
        rcfg.tol = min(1e-2, norm(r) / r0norm) if r0norm > 0 else 1e-2
        system = reduce_system(A, P, rcfg)
        alpha, astats = solve_alpha(A, P, r, rcfg, system)
        x = rounding_sum(x, P.expand(alpha), policy)
        r_prev, r = r, _residual(A, x, c, cfg)
        res.append(norm(r) / cnorm)
        if res[-1] < best[1]:
            best = (x, res[-1])
        report.rank_history.append({"x": list(x.ranks), "r": list(r.ranks),
                                    "p": list(P.ranks)})
        stats = {"alpha": astats.iterations}
        report.iterations = k + 1
        log.debug("iter %d  relres %.3e  ranks x=%s r=%s", k + 1, res[-1], x.ranks, r.ranks)

        beta = None
        done = res[-1] <= cfg.tol
        if done:
            g = None
        elif cfg.method == "sd":
            g = r
        else:
            beta, bstats = solve_beta(A, P, r, rcfg, system)
            stats["beta"] = bstats.iterations
            g = rounding_sum(r, P.expand(beta), policy)
        report.inner_stats.append(stats)
        if callback is not None:
            callback(SimpleNamespace(k=k, x=x, r=r, r_prev=r_prev, P=P, alpha=alpha,
                                     beta=beta, g=g, system=system))
        if done:
            report.converged = True
            break
        if not report.stagnated and _stagnating(res, cfg.stagnation_window,
                                                cfg.stagnation_factor):
            report.stagnated = True
            log.warning("relative residual stagnating at %.3e after %d iterations", res[-1], k + 1)
        P = DirectionOperator.from_tensor(precondition(g), policy)

    if not report.converged:
        x = best[0]
    report.residual_history = [float(v) for v in res]
    report.wall_time_seconds = time.perf_counter() - start
    return x, report
