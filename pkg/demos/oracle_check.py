"""Compare the Tucker solver with a dense direct solve on a small grid.

At n=8 the assembled matrix has 512 rows, small enough for the dense oracle.
With maxrank equal to n and no thresholding, rounding is exact and the
conjugate-gradient variant reproduces the dense solution.
"""
import numpy as np

from tucker_sscg import Grid1D, SolverConfig, TruncationPolicy, build_example, solve, to_dense
from tucker_sscg.oracle import dense_solve

for example in (1, 2, 3, 4):
    A, c = build_example(example, Grid1D(8))
    x, rep = solve(A, c, cfg=SolverConfig(policy=TruncationPolicy(8, 0.0), tol=1e-8,
                                          maxit=1000))
    ref = dense_solve(A, to_dense(c))
    err = np.linalg.norm(to_dense(x) - ref) / np.linalg.norm(ref)
    print(f"example {example}: {rep.iterations:3d} iterations, relative error {err:.2e}")
