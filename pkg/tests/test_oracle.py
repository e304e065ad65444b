import numpy as np
import pytest
import scipy.sparse as sp

from tucker_sscg.errors import CapacityError, DefinitenessError, ShapeError
from tucker_sscg.operator import KronSumOperator
from tucker_sscg.oracle import (dense_apply, dense_hosvd, dense_inner, dense_solve,
                                kron_sum_matrix, unvec, vec)
from tucker_sscg.problems import Grid1D, build_example
from tucker_sscg.solvers import SolverConfig, solve
from tucker_sscg.tucker import TruncationPolicy, to_dense

from conftest import rel_err


def test_identity_solve(rng):
    I = np.eye(3)
    c = rng.standard_normal((3, 3, 3))
    np.testing.assert_allclose(dense_solve(KronSumOperator([[I, I, I]]), c), c)


def test_round_trip():
    A, c = build_example(1, Grid1D(5))
    cd = to_dense(c)
    x = dense_solve(A, cd)
    assert rel_err(dense_apply(A, x), cd) <= 1e-12


def test_agrees_with_tucker_solver():
    A, c = build_example(1, Grid1D(8))
    x, rep = solve(A, c, cfg=SolverConfig(policy=TruncationPolicy(8, 0.0), tol=1e-6))
    assert rep.converged
    assert rel_err(to_dense(x), dense_solve(A, to_dense(c))) <= 1e-5


def test_singular_raises():
    Z = np.diag([1.0, 0.0])
    with pytest.raises(DefinitenessError):
        dense_solve(KronSumOperator([[Z, np.eye(2)]]), np.ones((2, 2)))


def test_caps():
    I = sp.identity(17)
    A = KronSumOperator([[I, I, I]])
    with pytest.raises(CapacityError):
        dense_solve(A, np.zeros((17, 17, 17)))
    with pytest.raises(CapacityError):
        kron_sum_matrix([np.eye(17)] * 3)
    with pytest.raises(CapacityError):
        dense_hosvd(np.zeros((300, 300, 300)), (1, 1, 1))


def test_shape_checks():
    A, _ = build_example(1, Grid1D(3))
    with pytest.raises(ShapeError):
        dense_apply(A, np.zeros((3, 3, 4)))
    with pytest.raises(ShapeError):
        dense_solve(A, np.zeros((3, 3, 4)))
    with pytest.raises(ShapeError):
        dense_inner(np.zeros(3), np.zeros(4))


def test_vec_roundtrip(rng):
    x = rng.standard_normal((2, 3, 4))
    assert vec(x)[1] == x[1, 0, 0]
    np.testing.assert_array_equal(unvec(vec(x), x.shape), x)


def test_dense_hosvd_full_rank_exact(rng):
    x = rng.standard_normal((3, 4, 2))
    core, factors, rec = dense_hosvd(x, x.shape)
    np.testing.assert_allclose(rec, x, atol=1e-13)
    assert dense_inner(x, x) == pytest.approx(np.sum(x * x))
