import numpy as np
import pytest
import scipy.linalg

from tucker_sscg.errors import ParameterError, ShapeError
from tucker_sscg.operator import assemble_dense
from tucker_sscg.oracle import kron_sum_matrix, unvec, vec
from tucker_sscg.preconditioners import (EigPreconditioner, ExponentialSumParams,
                                         FFTPreconditioner, InnerOuterPreconditioner, dst1,
                                         exponential_operator, idst1, laplace_eigenvalues,
                                         p_eig_apply, p_fft_apply)
from tucker_sscg.problems import Grid1D, build_example, laplace1d
from tucker_sscg.tucker import TruncationPolicy, TuckerTensor, norm, to_dense

from conftest import random_tucker, rel_err


def tridiag(n):
    return 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


@pytest.mark.parametrize("n", [1, 7, 64, 513, 600])
def test_dst_roundtrip(n, rng):
    M = rng.standard_normal((n, 3))
    np.testing.assert_allclose(idst1(dst1(M)), M, atol=1e-12 * max(1, np.abs(M).max()))


def test_dst_matches_sine_sum():
    n = 5
    M = np.arange(1.0, n + 1)[:, None]
    S = np.array([[np.sin((i + 1) * (j + 1) * np.pi / (n + 1)) for j in range(n)]
                  for i in range(n)])
    np.testing.assert_allclose(dst1(M), S @ M, atol=1e-14)
    with pytest.raises(ShapeError):
        dst1(M, n=4)


def test_fft_and_matrix_paths_agree(rng):
    from tucker_sscg import preconditioners as pc
    M = rng.standard_normal((40, 2))
    ref = dst1(M)
    old = pc.DST_MATRIX_LIMIT
    pc.DST_MATRIX_LIMIT = 0
    try:
        np.testing.assert_allclose(dst1(M), ref, atol=1e-12)
    finally:
        pc.DST_MATRIX_LIMIT = old


@pytest.mark.parametrize("n", [4, 17, 64])
def test_dst_diagonalizes_laplacian(n):
    L = laplace1d(Grid1D(n)).toarray()
    S = dst1(np.eye(n))
    D = (2.0 / (n + 1)) * S @ L @ S
    lam = laplace_eigenvalues(n, scale=(n + 1) ** 2)
    np.testing.assert_allclose(D, np.diag(lam), atol=1e-10 * lam.max())
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(L)), lam, rtol=1e-10)


def test_params():
    p = ExponentialSumParams.for_grid(9, q=4)
    assert p.scale == 100.0 and p.eta == pytest.approx(np.pi / 2)
    assert p.nodes.size == 9
    np.testing.assert_allclose(p.weights, p.eta * p.nodes)
    for kw in ({"n": 0}, {"n": 3, "q": 0}, {"n": 3, "scale": -1.0}):
        with pytest.raises(ParameterError):
            ExponentialSumParams(**kw)


def quadrature_matrix(params, d=3):
    # independent dense construction of M via scipy.linalg.expm
    T = tridiag(params.n)
    out = 0
    for t, c in zip(params.nodes, params.weights):
        E = scipy.linalg.expm(-t * T)
        K = E
        for _ in range(d - 1):
            K = np.kron(E, K)
        out = out + c * K
    return out / params.scale


def test_exponential_operator_against_expm():
    p = ExponentialSumParams.for_grid(5, q=2)
    np.testing.assert_allclose(assemble_dense(exponential_operator(p)), quadrature_matrix(p),
                               atol=1e-13)


@pytest.mark.parametrize("apply", [p_eig_apply, p_fft_apply])
def test_apply_matches_dense_quadrature(apply, rng):
    p = ExponentialSumParams.for_grid(6, q=2)
    x = random_tucker(rng, (6, 6, 6), (2, 3, 2))
    y = apply(p, x, TruncationPolicy.lossless())
    ref = quadrature_matrix(p) @ vec(to_dense(x))
    assert rel_err(vec(to_dense(y)), ref) < 1e-10


def test_eig_and_fft_agree(rng):
    p = ExponentialSumParams.for_grid(64, q=1)
    x = random_tucker(rng, (64, 64, 64), (3, 2, 3))
    a = to_dense(p_eig_apply(p, x, TruncationPolicy.lossless()))
    b = to_dense(p_fft_apply(p, x, TruncationPolicy.lossless()))
    assert rel_err(a, b) < 1e-6


def test_inverse_quality():
    n = 32
    p = ExponentialSumParams.for_grid(n, q=8)
    lam = laplace_eigenvalues(n, scale=(n + 1) ** 2)
    # the Laplacian and M share eigenvectors, so compare on all sums lam_i + lam_j + lam_k
    s = (lam[:, None, None] + lam[None, :, None] + lam[None, None, :]).ravel()
    raw = laplace_eigenvalues(n)
    approx = sum(c * np.exp(-t * (raw[:, None, None] + raw[None, :, None]
                                  + raw[None, None, :])).ravel()
                 for t, c in zip(p.nodes, p.weights)) / p.scale
    assert np.max(np.abs(approx * s - 1.0)) <= 0.1


def test_eigentensor_is_scaled():
    n = 16
    p = ExponentialSumParams.for_grid(n, q=3)
    v = dst1(np.eye(n)[:, [2]])[:, 0]
    x = TuckerTensor.rank_one([v, v, v])
    lam = laplace_eigenvalues(n)[2]
    expected = sum(c * np.exp(-3 * t * lam) for t, c in zip(p.nodes, p.weights)) / p.scale
    for apply in (p_eig_apply, p_fft_apply):
        y = apply(p, x, TruncationPolicy())
        assert rel_err(to_dense(y), expected * to_dense(x)) < 1e-10


def test_single_precision_apply(rng):
    p = ExponentialSumParams.for_grid(20, q=1)
    x = random_tucker(rng, (20, 20, 20), (2, 2, 2))
    for P in (EigPreconditioner(p), FFTPreconditioner(p)):
        full = to_dense(P.apply(x, TruncationPolicy.lossless()))
        single = P.apply(x, TruncationPolicy.lossless(), np.float32)
        assert single.dtype == np.float64
        assert rel_err(to_dense(single), full) < 1e-4


def test_shape_mismatch(rng):
    p = ExponentialSumParams.for_grid(5)
    with pytest.raises(ShapeError):
        p_fft_apply(p, TuckerTensor.zeros((5, 5, 6)), TruncationPolicy())


def test_inner_outer_reduces_residual(rng):
    A, c = build_example(1, Grid1D(10))
    P = InnerOuterPreconditioner(A)
    z = P.apply(c, TruncationPolicy())
    M = assemble_dense(A)
    exact = np.linalg.solve(M, vec(to_dense(c)))
    assert rel_err(vec(to_dense(z)), exact) < 1.0
    assert P.inner_config(TruncationPolicy()).maxit == 4
