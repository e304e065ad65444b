"""Finite-difference benchmark operators on the unit cube.

Every mode uses ``n`` interior unknowns with zero Dirichlet boundary values,
so the grid step is ``h = 1/(n+1)`` and node ``i`` (1-based) sits at
``x_i = i h``.  Operators are returned in their symmetric positive definite
sign convention (``-div(a grad u)``).

Operator terms list one matrix per mode, mode 1 being the ``x`` direction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError
from .operator import KronSumOperator
from .tucker import TuckerTensor


@dataclass(frozen=True)
class Grid1D:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"grid needs n >= 1 interior points, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.h * (np.arange(self.n + 1) + 0.5)


def _jump(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= 0.25) & (x <= 0.75), 1e-2, 10.0)


#: coefficient functions selectable by name from configuration
COEFFICIENTS: dict[str, Callable] = {
    "one": lambda x: np.ones_like(np.asarray(x, dtype=float)),
    "x_plus_1": lambda x: np.asarray(x, dtype=float) + 1.0,
    "jump_1e-2_10": _jump,
}


def coefficient(a) -> Callable:
    if callable(a):
        return a
    try:
        return COEFFICIENTS[a]
    except KeyError:
        raise ParameterError(f"unknown coefficient {a!r}; known: {sorted(COEFFICIENTS)}") from None


def laplace1d(g: Grid1D) -> sp.csr_matrix:
    """``(1/h^2) tridiag(-1, 2, -1)`` of size ``n``."""
    e = np.ones(g.n)
    return sp.diags([-e[1:], 2 * e, -e[1:]], [-1, 0, 1], format="csr") / g.h**2


def difference_stencil(g: Grid1D) -> sp.csr_matrix:
    """``R`` of shape ``n x (n+1)`` with ``R[i, i] = 1`` and ``R[i, i+1] = -1``."""
    e = np.ones(g.n)
    return sp.diags([e, -e], [0, 1], shape=(g.n, g.n + 1), format="csr")


def diffusion1d(a, g: Grid1D) -> sp.csr_matrix:
    """``(1/h^2) R D R^T`` with ``D`` the coefficient sampled at cell midpoints."""
    vals = np.asarray(coefficient(a)(g.midpoints), dtype=float)
    if np.any(vals <= 0):
        warnings.warn("diffusion coefficient is not positive; operator is not definite",
                      RuntimeWarning, stacklevel=2)
    R = difference_stencil(g)
    return (R @ sp.diags(vals) @ R.T).tocsr() / g.h**2


def diag_coeff(a, g: Grid1D) -> sp.csr_matrix:
    """Diagonal matrix of the coefficient at the interior nodes."""
    return sp.diags(np.asarray(coefficient(a)(g.nodes), dtype=float), format="csr")


def default_rhs(g: Grid1D, d: int = 3) -> TuckerTensor:
    """Rank-one forcing: normalized ones along mode 1, first unit vector elsewhere."""
    vecs = [np.ones(g.n) / np.sqrt(g.n)]
    for _ in range(d - 1):
        e = np.zeros(g.n)
        e[0] = 1.0
        vecs.append(e)
    return TuckerTensor.rank_one(vecs)


def poisson_operator(g: Grid1D, mu: float = 1.0) -> KronSumOperator:
    L = mu * laplace1d(g)
    I = sp.identity(g.n, format="csr")
    return KronSumOperator([[L, I, I], [I, L, I], [I, I, L]])


def build_example(example: int, g: Grid1D, mu: float = 1.0, reaction: float = 1e3):
    """Operator and right-hand side of benchmark ``example`` (1 to 4).

    1. Laplacian.
    2. ``-div((x+1)(y+1) grad u)``.
    3. ``-mu Laplacian + reaction * diag(x+1) (x) I (x) diag(z+1)``, the
       reaction term acting on modes 1 and 3.
    4. ``-div(a(x)a(y)a(z) grad u)`` with ``a`` equal to ``1e-2`` on
       ``[1/4, 3/4]`` and ``10`` elsewhere.
    """
    I = sp.identity(g.n, format="csr")
    if example == 1:
        A = poisson_operator(g)
    elif example == 2:
        Rx = diffusion1d("x_plus_1", g)
        D = diag_coeff("x_plus_1", g)
        L = laplace1d(g)
        A = KronSumOperator([[Rx, D, I], [D, Rx, I], [D, D, L]])
    elif example == 3:
        L = mu * laplace1d(g)
        Dx = reaction * diag_coeff("x_plus_1", g)
        Dz = diag_coeff("x_plus_1", g)
        A = KronSumOperator([[L, I, I], [I, L, I], [I, I, L], [Dx, I, Dz]])
    elif example == 4:
        K = diffusion1d("jump_1e-2_10", g)
        N = diag_coeff("jump_1e-2_10", g)
        A = KronSumOperator([[K, N, N], [N, K, N], [N, N, K]])
    else:
        raise ParameterError(f"unknown example {example!r}; expected 1, 2, 3 or 4")
    return A, default_rhs(g)
