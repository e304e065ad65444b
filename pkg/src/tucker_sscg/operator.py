"""Kronecker-structured multilinear operators acting on Tucker tensors.

An operator is stored as ``l`` terms, each a list of ``d`` matrices
``[A_1, ..., A_d]`` with ``A_j`` acting on mode ``j``.  Under the mode-1-fastest
vectorization used throughout the package, one term assembles to the dense
matrix ``kron(A_d, ..., A_1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ShapeError
from .tucker import TruncationPolicy, TuckerTensor, multi_ttm, st_hosvd, ten_blk_diag, ttm

#: largest assembled dimension the dense oracles accept
ASSEMBLY_CAP = 4096


def _dense(M) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M)


@dataclass(frozen=True, eq=False)
class KronSumOperator:
    """``sum_h A_{1,h} (x) ... (x) A_{d,h}`` with a declared symmetry flag."""

    terms: tuple
    symmetric: bool = True

    def __post_init__(self):
        terms = tuple(tuple(term) for term in self.terms)
        if not terms:
            raise ShapeError("an operator needs at least one term")
        shapes = [tuple(M.shape for M in term) for term in terms]
        if any(s != shapes[0] for s in shapes):
            raise ShapeError("all terms must share the same per-mode shapes")
        object.__setattr__(self, "terms", terms)

    @property
    def ndim(self) -> int:
        return len(self.terms[0])

    @property
    def nterms(self) -> int:
        return len(self.terms)

    @property
    def in_shape(self) -> tuple:
        return tuple(M.shape[1] for M in self.terms[0])

    @property
    def out_shape(self) -> tuple:
        return tuple(M.shape[0] for M in self.terms[0])

    def astype(self, dtype) -> "KronSumOperator":
        terms = [[M.astype(dtype) for M in term] for term in self.terms]
        return KronSumOperator(terms, self.symmetric)

    def apply_dense(self, x: np.ndarray) -> np.ndarray:
        """Exact action on a small dense tensor (used for reduced problems)."""
        x = np.asarray(x)
        if x.shape != self.in_shape:
            raise ShapeError(f"operator expects shape {self.in_shape}, got {x.shape}")
        return sum(multi_ttm(x, term) for term in self.terms)


@dataclass(frozen=True, eq=False)
class DirectionOperator:
    """``P = U_1 (x) ... (x) U_d`` with orthonormal ``U_j``; no core."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(np.asarray(U) for U in self.factors))

    @classmethod
    def from_tensor(cls, g: TuckerTensor, policy: TruncationPolicy) -> "DirectionOperator":
        """Factor matrices of a truncated ST-HOSVD of ``g``; the core is dropped."""
        return cls(st_hosvd(g, policy).factors)

    @property
    def ranks(self) -> tuple:
        return tuple(U.shape[1] for U in self.factors)

    @property
    def shape(self) -> tuple:
        return tuple(U.shape[0] for U in self.factors)

    def expand(self, coeff: np.ndarray) -> TuckerTensor:
        """``P coeff`` as a Tucker tensor with core ``coeff``."""
        return TuckerTensor(np.asarray(coeff), self.factors)


def _svd_compress(G, core, j, policy, cap=False):
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    t = policy.select_rank(s, cap=cap)
    return U[:, :t], ttm(core, s[:t, None] * Vt[:t], j)


def apply_rounded(A: KronSumOperator, x: TuckerTensor, policy: TruncationPolicy,
                  truncate_all_modes: bool = False) -> TuckerTensor:
    """Truncated product ``A x`` in Tucker format.

    Term ``h`` contributes the Tucker tensor with factors ``A_{j,h} F_j`` and
    the core of ``x``.  Terms are accumulated one at a time: the core grows by
    block-diagonal concatenation and, for every mode except the first, the
    stacked factor is compressed by a thresholded SVD right away.  The first
    mode is only compressed after the last term unless ``truncate_all_modes``
    is set.  A final :func:`st_hosvd` of the core applies ``policy``.
    """
    if A.in_shape != x.shape:
        raise ShapeError(f"operator expects shape {A.in_shape}, got {x.shape}")
    d = x.ndim
    eager = range(d) if truncate_all_modes else range(1, d)
    core = x.core
    G = [None] * d
    for h, term in enumerate(A.terms):
        AF = [np.asarray(M @ F) for M, F in zip(term, x.factors)]
        if h == 0:
            G = AF
        else:
            core = ten_blk_diag(core, x.core)
            G = [np.hstack([Gj, AFj]) for Gj, AFj in zip(G, AF)]
        for j in eager:
            G[j], core = _svd_compress(G[j], core, j, policy)
    if not truncate_all_modes:
        G[0], core = _svd_compress(G[0], core, 0, policy)
    t = st_hosvd(core, policy)
    return TuckerTensor(t.core, tuple(Gj @ L for Gj, L in zip(G, t.factors)))


def project_operator(A: KronSumOperator, P: DirectionOperator) -> KronSumOperator:
    """Reduced operator with terms ``U_j^T A_{j,h} U_j``."""
    if A.in_shape != P.shape or A.out_shape != P.shape:
        raise ShapeError(f"operator shape {A.in_shape} does not match directions {P.shape}")
    terms = [[U.T @ np.asarray(M @ U) for M, U in zip(term, P.factors)] for term in A.terms]
    return KronSumOperator(terms, A.symmetric)


def project_rhs(P: DirectionOperator, r: TuckerTensor) -> np.ndarray:
    """Dense tensor ``P^T r`` of shape ``P.ranks``."""
    if P.shape != r.shape:
        raise ShapeError(f"direction shape {P.shape} does not match tensor shape {r.shape}")
    return multi_ttm(r.core, [U.T @ F for U, F in zip(P.factors, r.factors)])


def assemble_dense(A: KronSumOperator, cap: int = ASSEMBLY_CAP) -> np.ndarray:
    """Dense matrix ``sum_h kron(A_{d,h}, ..., A_{1,h})``."""
    m, n = np.prod(A.out_shape), np.prod(A.in_shape)
    if max(m, n) > cap:
        raise CapacityError(f"assembled dimension {max(m, n)} exceeds the cap of {cap}")
    out = np.zeros((m, n), dtype=np.result_type(*[M.dtype for M in A.terms[0]]))
    for term in A.terms:
        out += reduce(np.kron, [_dense(M) for M in reversed(term)])
    return out


def kron_matrix(factors) -> np.ndarray:
    """``mat(P) = kron(U_d, ..., U_1)``, matching the vectorization convention."""
    return reduce(np.kron, [np.asarray(U) for U in reversed(factors)])
