"""Dense reference computations for verification at small sizes.

Everything here materializes full tensors or assembled matrices and is
guarded by hard size caps, so it cannot be run at production scale by
accident.  None of it shares code with the Tucker-format paths it checks
beyond :func:`~tucker_sscg.operator.assemble_dense`.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import CapacityError, DefinitenessError, ShapeError
from .operator import ASSEMBLY_CAP, KronSumOperator, assemble_dense
from .tucker import DENSE_ENTRY_CAP


def _guard(n, cap, what):
    if n > cap:
        raise CapacityError(f"{what} of size {n} exceeds the oracle cap of {cap}")


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).ravel(order="F")


def unvec(v: np.ndarray, shape) -> np.ndarray:
    return np.asarray(v).reshape(shape, order="F")


def dense_apply(A: KronSumOperator, x: np.ndarray) -> np.ndarray:
    """``A x`` through the assembled matrix."""
    x = np.asarray(x)
    if x.shape != A.in_shape:
        raise ShapeError(f"operator expects shape {A.in_shape}, got {x.shape}")
    return unvec(assemble_dense(A) @ vec(x), A.out_shape)


def dense_solve(A: KronSumOperator, c: np.ndarray) -> np.ndarray:
    """Solve ``assemble_dense(A) vec(x) = vec(c)`` by Cholesky factorization."""
    c = np.asarray(c)
    if c.shape != A.out_shape:
        raise ShapeError(f"operator expects shape {A.out_shape}, got {c.shape}")
    M = assemble_dense(A)
    try:
        f = scipy.linalg.cho_factor(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(f"assembled operator is not positive definite: {exc}") from exc
    return unvec(scipy.linalg.cho_solve(f, vec(c)), A.in_shape)


def dense_inner(x: np.ndarray, y: np.ndarray) -> float:
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ShapeError(f"shapes {x.shape} and {y.shape} differ")
    _guard(x.size, DENSE_ENTRY_CAP, "tensor")
    total = 0.0
    for a, b in zip(x.flat, y.flat):
        total += a * b
    return total


def dense_ttm(x: np.ndarray, M: np.ndarray, mode: int) -> np.ndarray:
    """Mode product by explicit index summation (einsum over the contracted index)."""
    x, M = np.asarray(x), np.asarray(M)
    letters = "abcdefghijklmnop"[:x.ndim]
    out = letters.replace(letters[mode], "z")
    return np.einsum(f"z{letters[mode]},{letters}->{out}", M, x)


def dense_hosvd(x: np.ndarray, ranks) -> tuple:
    """Sequentially truncated HOSVD with fixed ranks, via full mode unfoldings.

    Returns ``(core, factors, reconstruction)``.
    """
    x = np.asarray(x)
    _guard(x.size, DENSE_ENTRY_CAP, "tensor")
    core = x
    factors = []
    for j, r in enumerate(ranks):
        unf = np.moveaxis(core, j, 0).reshape(core.shape[j], -1)
        U = np.linalg.svd(unf)[0][:, :r]
        factors.append(U)
        core = dense_ttm(core, U.T, j)
    rec = core
    for j, U in enumerate(factors):
        rec = dense_ttm(rec, U, j)
    return core, factors, rec


def kron_sum_matrix(mats) -> np.ndarray:
    """``sum_j I (x) .. (x) M_j (x) .. (x) I`` for square ``M_j`` (mode 1 fastest)."""
    sizes = [m.shape[0] for m in mats]
    _guard(int(np.prod(sizes)), ASSEMBLY_CAP, "assembled dimension")
    out = 0
    for j, M in enumerate(mats):
        blocks = [np.eye(n) for n in sizes]
        blocks[j] = np.asarray(M)
        term = blocks[-1]
        for B in reversed(blocks[:-1]):
            term = np.kron(term, B)
        out = out + term
    return out
