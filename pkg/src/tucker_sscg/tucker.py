r"""Tucker-format tensors and truncated arithmetic.

A full (dense) tensor is a plain :class:`numpy.ndarray` of shape
``(n_1, ..., n_d)``.  Its vectorization runs mode 1 fastest, i.e.
``vec(x) = x.ravel(order="F")``.

A :class:`TuckerTensor` stores a core tensor of shape ``(r_1, ..., r_d)``
and ``d`` factor matrices ``U_j`` of shape ``n_j x r_j``; it represents

.. math::
    x = c \times_1 U_1 \times_2 U_2 \cdots \times_d U_d .

Modes are numbered from 0 in all function arguments.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ParameterError, ShapeError

#: default cap on the number of entries of a densified tensor
DENSE_ENTRY_CAP = 2**24


@dataclass(frozen=True)
class TruncationPolicy:
    """Rank cap and relative singular-value threshold used by all roundings.

    A singular value ``s_i`` of a vector ``s`` is kept when
    ``s_i > delta * sum(s)``; at most ``maxrank`` values are kept per mode and
    at least one is always kept.
    """

    maxrank: int = 10
    delta: float = 1e-12

    def __post_init__(self):
        if int(self.maxrank) != self.maxrank or self.maxrank < 1:
            raise ParameterError(f"maxrank must be a positive integer, got {self.maxrank}")
        if not 0.0 <= self.delta < 1.0:
            raise ParameterError(f"delta must lie in [0, 1), got {self.delta}")

    @classmethod
    def lossless(cls) -> "TruncationPolicy":
        """No rank cap and no thresholding beyond exact zeros."""
        return cls(maxrank=sys.maxsize, delta=0.0)

    def select_rank(self, s: np.ndarray, cap: bool = True) -> int:
        """Number of leading singular values of ``s`` to retain."""
        if s.size == 0:
            return 1
        t = int(np.count_nonzero(s > self.delta * np.sum(s)))
        if cap:
            t = min(t, self.maxrank)
        return max(t, 1)


@dataclass(frozen=True, eq=False)
class TuckerTensor:
    """Core tensor plus one factor matrix per mode."""

    core: np.ndarray
    factors: tuple

    def __post_init__(self):
        core = np.asarray(self.core)
        factors = tuple(np.asarray(U) for U in self.factors)
        if core.ndim != len(factors):
            raise ShapeError(f"core has order {core.ndim} but {len(factors)} factors were given")
        for j, U in enumerate(factors):
            if U.ndim != 2 or U.shape[1] != core.shape[j]:
                raise ShapeError(
                    f"factor {j} has shape {U.shape}, core needs {core.shape[j]} columns")
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "factors", factors)

    @classmethod
    def zeros(cls, shape: Sequence[int], dtype=np.float64) -> "TuckerTensor":
        """The zero tensor, stored with rank (1, ..., 1) and a zero core."""
        factors = []
        for n in shape:
            e = np.zeros((n, 1), dtype=dtype)
            e[0, 0] = 1.0
            factors.append(e)
        return cls(np.zeros((1,) * len(shape), dtype=dtype), tuple(factors))

    @classmethod
    def rank_one(cls, vectors: Sequence[np.ndarray], scale: float = 1.0) -> "TuckerTensor":
        """``scale * v_1 o v_2 o ... o v_d`` with normalized factor columns."""
        factors = []
        for v in vectors:
            v = np.asarray(v, dtype=np.float64).reshape(-1)
            nv = np.linalg.norm(v)
            if nv == 0.0:
                return cls.zeros([len(u) for u in vectors])
            scale *= nv
            factors.append((v / nv)[:, None])
        return cls(np.full((1,) * len(factors), scale), tuple(factors))

    @property
    def ndim(self) -> int:
        return self.core.ndim

    @property
    def shape(self) -> tuple:
        return tuple(U.shape[0] for U in self.factors)

    @property
    def ranks(self) -> tuple:
        return self.core.shape

    @property
    def dtype(self):
        return np.result_type(self.core, *self.factors)

    def __neg__(self) -> "TuckerTensor":
        return TuckerTensor(-self.core, self.factors)

    def scaled(self, a: float) -> "TuckerTensor":
        return TuckerTensor(a * self.core, self.factors)

    def astype(self, dtype) -> "TuckerTensor":
        return TuckerTensor(self.core.astype(dtype), tuple(U.astype(dtype) for U in self.factors))

    def to_dense(self, cap: int = DENSE_ENTRY_CAP) -> np.ndarray:
        return to_dense(self, cap)

    def norm(self) -> float:
        return norm(self)


def ttm(x: np.ndarray, M, mode: int) -> np.ndarray:
    """Mode-``mode`` product ``x \\times_mode M``.

    ``y[i_1, .., i_k, .., i_d] = sum_j M[i_k, j] x[i_1, .., j, .., i_d]``.
    ``M`` may be a dense array or a scipy sparse matrix.
    """
    x = np.asarray(x)
    if not 0 <= mode < x.ndim:
        raise ShapeError(f"mode {mode} out of range for an order-{x.ndim} tensor")
    if M.shape[1] != x.shape[mode]:
        raise ShapeError(
            f"matrix with {M.shape[1]} columns cannot act on mode {mode} of size {x.shape[mode]}")
    xk = np.moveaxis(x, mode, 0)
    rest = xk.shape[1:]
    y = M @ xk.reshape(xk.shape[0], -1)
    y = np.asarray(y).reshape((M.shape[0],) + rest)
    return np.moveaxis(y, 0, mode)


def multi_ttm(x: np.ndarray, matrices, modes=None) -> np.ndarray:
    """Apply ``ttm`` along several modes; ``None`` entries are skipped."""
    if modes is None:
        modes = range(len(matrices))
    for M, k in zip(matrices, modes):
        if M is not None:
            x = ttm(x, M, k)
    return x


def unfold(x: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` matricization, remaining modes in increasing order."""
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1)


def fold(M: np.ndarray, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold` for a target ``shape``."""
    shape = list(shape)
    lead = [shape[mode]] + shape[:mode] + shape[mode + 1:]
    return np.moveaxis(M.reshape(lead), 0, mode)


def to_dense(x: TuckerTensor, cap: int = DENSE_ENTRY_CAP) -> np.ndarray:
    """Multiply the core along every mode by its factor."""
    if isinstance(x, np.ndarray):
        return x
    if np.prod(x.shape, dtype=float) > cap:
        raise CapacityError(f"densifying shape {x.shape} exceeds the cap of {cap} entries")
    return multi_ttm(x.core, x.factors)


def inner(x, y) -> float:
    """Euclidean inner product ``sum_i x(i) y(i)``.

    Tucker operands are contracted through the factor Gram matrices and never
    densified.  A dense and a Tucker operand may be mixed.
    """
    if x.shape != y.shape:
        raise ShapeError(f"shapes {x.shape} and {y.shape} differ")
    xt, yt = isinstance(x, TuckerTensor), isinstance(y, TuckerTensor)
    if xt and yt:
        grams = [F.T @ G for F, G in zip(x.factors, y.factors)]
        return float(np.vdot(x.core, multi_ttm(y.core, grams)))
    if xt or yt:
        t, dense = (x, y) if xt else (y, x)
        return float(np.vdot(t.core, multi_ttm(dense, [U.T for U in t.factors])))
    return float(np.vdot(x, y))


def norm(x) -> float:
    """Frobenius norm."""
    if isinstance(x, TuckerTensor):
        return float(np.sqrt(max(inner(x, x), 0.0)))
    return float(np.linalg.norm(np.ravel(x)))


def _thin_svd(M):
    return np.linalg.svd(M, full_matrices=False)


def st_hosvd(x, policy: TruncationPolicy) -> TuckerTensor:
    """Sequentially truncated HOSVD.

    Modes are processed in increasing order.  The rank of mode ``j`` is
    ``policy.select_rank`` applied to the singular values of the mode-``j``
    unfolding of the partially compressed tensor.

    A :class:`TuckerTensor` input is recompressed: its factors are first
    orthonormalized, the core is compressed, and the factors are updated.
    """
    if isinstance(x, TuckerTensor):
        core = x.core
        bases = []
        for j, U in enumerate(x.factors):
            Q, R = np.linalg.qr(U)
            core = ttm(core, R, j)
            bases.append(Q)
        t = st_hosvd(core, policy)
        return TuckerTensor(t.core, tuple(Q @ L for Q, L in zip(bases, t.factors)))

    core = np.asarray(x)
    factors = []
    for j in range(core.ndim):
        U, s, Vt = _thin_svd(unfold(core, j))
        t = policy.select_rank(s)
        factors.append(U[:, :t])
        shape = list(core.shape)
        shape[j] = t
        core = fold(s[:t, None] * Vt[:t], j, shape)
    return TuckerTensor(core, tuple(factors))


def ten_blk_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Block-diagonal concatenation of two cores of equal order."""
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != b.ndim:
        raise ShapeError(f"cannot concatenate tensors of order {a.ndim} and {b.ndim}")
    out = np.zeros(tuple(p + q for p, q in zip(a.shape, b.shape)), dtype=np.result_type(a, b))
    out[tuple(slice(0, p) for p in a.shape)] = a
    out[tuple(slice(p, None) for p in a.shape)] = b
    return out


def rounding_sum(x: TuckerTensor, y: TuckerTensor, policy: TruncationPolicy) -> TuckerTensor:
    """Truncated Tucker sum ``x + y``.

    The cores are concatenated block-diagonally and the factors side by side.
    Each concatenated factor is replaced by its thresholded left singular
    vectors, pushing the remaining ``Sigma V^T`` into the core; the core is
    then recompressed by :func:`st_hosvd` under ``policy``.
    """
    if x.shape != y.shape:
        raise ShapeError(f"shapes {x.shape} and {y.shape} differ")
    core = ten_blk_diag(x.core, y.core)
    bases = []
    for j in range(x.ndim):
        U, s, Vt = _thin_svd(np.hstack([x.factors[j], y.factors[j]]))
        t = policy.select_rank(s, cap=False)
        bases.append(U[:, :t])
        core = ttm(core, s[:t, None] * Vt[:t], j)
    t = st_hosvd(core, policy)
    return TuckerTensor(t.core, tuple(U @ L for U, L in zip(bases, t.factors)))


def orthonormality_defect(U: np.ndarray) -> float:
    """``||U^T U - I||_F``."""
    return float(np.linalg.norm(U.T @ U - np.eye(U.shape[1])))
