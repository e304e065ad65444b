r"""Approximate inverses used to precondition the outer iteration.

The Laplacian-based preconditioners approximate the inverse of the Kronecker
sum ``Delta_d`` of ``d`` copies of ``Delta_1 = scale * tridiag(-1, 2, -1)`` by
sinc quadrature of ``1/lam = int_0^inf exp(-t lam) dt``:

.. math::
    M = \frac{1}{\mathrm{scale}} \sum_{h=-q}^{q} c_h
        \exp(-t_h T) \otimes \cdots \otimes \exp(-t_h T),
    \qquad t_h = e^{h\eta},\; c_h = \eta t_h,\; \eta = \pi/\sqrt{q},

with ``T = tridiag(-1, 2, -1)``.  Two application routes realize the same
``M``: :func:`p_eig_apply` forms the matrix exponentials from a numerical
eigendecomposition and applies them with :func:`~tucker_sscg.operator.apply_rounded`;
:func:`p_fft_apply` works in the sine basis, where every exponential is
diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import ParameterError, ShapeError
from .operator import KronSumOperator, apply_rounded
from .tucker import TruncationPolicy, TuckerTensor, multi_ttm, st_hosvd

#: sizes up to this use an explicit sine matrix, larger ones scipy's FFT-based DST
DST_MATRIX_LIMIT = 512

#: relative pivot cutoff for the column-pivoted QR in :func:`p_fft_apply`
QR_PIVOT_CUTOFF = 1e-12


def laplace_eigenvalues(n: int, scale: float = 1.0) -> np.ndarray:
    """Eigenvalues ``scale * (2 - 2 cos(i pi / (n+1)))``, ``i = 1..n``, ascending."""
    i = np.arange(1, n + 1)
    return scale * (2.0 - 2.0 * np.cos(i * np.pi / (n + 1)))


@lru_cache(maxsize=8)
def _sine_matrix(n: int) -> np.ndarray:
    i = np.arange(1, n + 1)
    S = np.sin(np.outer(i, i) * np.pi / (n + 1))
    S.setflags(write=False)
    return S


def dst1(M: np.ndarray, n: int | None = None) -> np.ndarray:
    """Column-wise DST-I, ``S @ M`` with ``S[i, j] = sin(i j pi / (n+1))``."""
    M = np.asarray(M)
    if n is not None and M.shape[0] != n:
        raise ShapeError(f"expected {n} rows, got {M.shape[0]}")
    if M.shape[0] <= DST_MATRIX_LIMIT:
        return _sine_matrix(M.shape[0]).astype(M.dtype, copy=False) @ M
    return 0.5 * scipy.fft.dst(M, type=1, axis=0)


def idst1(M: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`dst1`; ``S @ S = (n+1)/2 I``."""
    M = np.asarray(M)
    return (2.0 / (M.shape[0] + 1)) * dst1(M, n)


def _ortho_dst(M):
    # symmetric orthogonal sine transform, its own inverse
    return np.sqrt(2.0 / (M.shape[0] + 1)) * dst1(M)


@dataclass(frozen=True)
class ExponentialSumParams:
    """Quadrature for ``Delta_d^{-1}`` on an ``n`` point grid with ``Delta_1 = scale * T``."""

    n: int
    q: int = 1
    scale: float = 1.0

    def __post_init__(self):
        if self.q < 1 or int(self.q) != self.q:
            raise ParameterError(f"q must be a positive integer, got {self.q}")
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")
        if self.scale <= 0:
            raise ParameterError(f"scale must be positive, got {self.scale}")

    @classmethod
    def for_grid(cls, n: int, q: int = 1) -> "ExponentialSumParams":
        """Unit-interval grid with ``n`` interior points, ``scale = (n+1)^2``."""
        return cls(n=n, q=q, scale=float(n + 1) ** 2)

    @property
    def eta(self) -> float:
        return np.pi / np.sqrt(self.q)

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(np.arange(-self.q, self.q + 1) * self.eta)

    @property
    def weights(self) -> np.ndarray:
        return self.eta * self.nodes

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Spectrum of the unscaled ``T``."""
        return laplace_eigenvalues(self.n)


def _check_cubic(params, x):
    if any(n != params.n for n in x.shape):
        raise ShapeError(f"preconditioner built for n={params.n} cannot act on shape {x.shape}")


@lru_cache(maxsize=16)
def exponential_operator(params: ExponentialSumParams, d: int = 3) -> KronSumOperator:
    """``M`` as a ``2q+1``-term Kronecker operator built from ``eigh`` of ``T``.

    Only the symmetry of ``T`` is used; the analytic spectrum is not.
    """
    n = params.n
    e = np.ones(n - 1)
    T = np.diag(2.0 * np.ones(n)) - np.diag(e, 1) - np.diag(e, -1)
    lam, V = scipy.linalg.eigh(T)
    terms = []
    for t, c in zip(params.nodes, params.weights):
        E = (V * np.exp(-t * lam)) @ V.T
        E = 0.5 * (E + E.T)
        terms.append([(c / params.scale) * E] + [E] * (d - 1))
    return KronSumOperator(terms, symmetric=True)


def p_eig_apply(params: ExponentialSumParams, x: TuckerTensor, policy: TruncationPolicy,
                dtype=np.float64) -> TuckerTensor:
    """Apply ``M`` through explicitly formed matrix exponentials."""
    _check_cubic(params, x)
    M = exponential_operator(params, x.ndim)
    if dtype != np.float64:
        M = M.astype(dtype)
        x = x.astype(dtype)
    return apply_rounded(M, x, policy).astype(np.float64)


def _pivoted_qr(E):
    Q, R, piv = scipy.linalg.qr(E, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    p = max(1, int(np.count_nonzero(diag > QR_PIVOT_CUTOFF * diag[0]))) if diag[0] > 0 else 1
    Rfull = np.empty_like(R[:p])
    Rfull[:, piv] = R[:p]
    return Q[:, :p], Rfull


def p_fft_apply(params: ExponentialSumParams, x: TuckerTensor, policy: TruncationPolicy,
                dtype=np.float64) -> TuckerTensor:
    """Apply ``M`` in the sine basis.

    Each factor is transformed, ``Uh_j = V^T U_j``, and scaled by every
    diagonal exponential ``D_h = diag(exp(-t_h lam))``.  A pivoted QR of
    ``E_j = [D_{-q} Uh_j, ..., D_q Uh_j]`` gives an orthonormal basis ``Q_j``
    and blocks ``R_{j,h}``; the new core is ``sum_h c_h`` times the core of
    ``x`` multiplied by ``R_{j,h}`` along every mode.  After an ST-HOSVD of that
    core, the output factors are ``V Q_j L_j``.
    """
    _check_cubic(params, x)
    d = x.ndim
    x = x.astype(dtype)
    lam = params.eigenvalues.astype(dtype)
    D = [np.exp(-t * lam).astype(dtype) for t in params.nodes]
    bases, blocks = [], []
    for U in x.factors:
        Uh = _ortho_dst(U)
        r = U.shape[1]
        Q, R = _pivoted_qr(np.hstack([Dh[:, None] * Uh for Dh in D]))
        bases.append(Q)
        blocks.append([R[:, k * r:(k + 1) * r] for k in range(len(D))])
    core = sum(c * multi_ttm(x.core, [blocks[j][k] for j in range(d)])
               for k, c in enumerate((params.weights / params.scale).astype(dtype)))
    t = st_hosvd(core, policy)
    factors = tuple(_ortho_dst(Q @ L) for Q, L in zip(bases, t.factors))
    return TuckerTensor(t.core, factors).astype(np.float64)


def inner_outer_apply(A: KronSumOperator, r: TuckerTensor, inner_cfg) -> TuckerTensor:
    """A few steepest-descent iterations on ``A z = r`` from ``z = 0``."""
    from .solvers import solve

    z, _ = solve(A, r, None, inner_cfg)
    return z


class Preconditioner:
    """Common interface: ``apply(r, policy, dtype)`` returns an approximation of ``A^{-1} r``."""

    name = "none"

    def apply(self, r: TuckerTensor, policy: TruncationPolicy, dtype=np.float64) -> TuckerTensor:
        raise NotImplementedError


class EigPreconditioner(Preconditioner):
    name = "eig"

    def __init__(self, params: ExponentialSumParams):
        self.params = params

    def apply(self, r, policy, dtype=np.float64):
        return p_eig_apply(self.params, r, policy, dtype)


class FFTPreconditioner(Preconditioner):
    name = "fft"

    def __init__(self, params: ExponentialSumParams):
        self.params = params

    def apply(self, r, policy, dtype=np.float64):
        return p_fft_apply(self.params, r, policy, dtype)


class InnerOuterPreconditioner(Preconditioner):
    """Inner steepest descent with tolerance 0.1 and at most 4 iterations."""

    name = "innout"

    def __init__(self, A: KronSumOperator, tol: float = 1e-1, maxit: int = 4):
        self.A = A
        self.tol = tol
        self.maxit = maxit

    def inner_config(self, policy):
        from .solvers import SolverConfig

        return SolverConfig(method="sd", policy=policy, tol=self.tol, maxit=self.maxit)

    def apply(self, r, policy, dtype=np.float64):
        return inner_outer_apply(self.A, r, self.inner_config(policy))
