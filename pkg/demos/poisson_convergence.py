"""Solve the 3D Poisson problem in Tucker format and compare the solvers.

The right-hand side is rank one, and the solution is approximated with
multilinear rank at most 10 on a 500^3 grid (1.25e8 unknowns), which is never
formed densely.  The script prints the iteration counts of plain subspace
steepest descent and conjugate gradients, then the preconditioned variants.

Run with ``python3 demos/poisson_convergence.py [n]``.
"""
import sys

from tucker_sscg import (EigPreconditioner, ExponentialSumParams, FFTPreconditioner, Grid1D,
                         InnerOuterPreconditioner, SolverConfig, TruncationPolicy, build_example,
                         solve)

n = int(sys.argv[1]) if len(sys.argv) > 1 else 500
A, c = build_example(1, Grid1D(n))
policy = TruncationPolicy(maxrank=10)

# The exponential-sum preconditioners approximate the inverse Laplacian with
# 2q+1 Kronecker terms; q=1 already gives a large reduction.
params = ExponentialSumParams.for_grid(n, q=1)
runs = {
    "cg": SolverConfig(method="cg", policy=policy),
    "sd": SolverConfig(method="sd", policy=policy),
    "innout sd": SolverConfig(method="sd", policy=policy, precond=InnerOuterPreconditioner(A)),
    "fft sd": SolverConfig(method="sd", policy=policy, precond=FFTPreconditioner(params)),
    "eig sd": SolverConfig(method="sd", policy=policy, precond=EigPreconditioner(params)),
}

print(f"n = {n}, tol = 1e-3, maxrank = 10")
for name, cfg in runs.items():
    x, rep = solve(A, c, cfg=cfg)
    print(f"{name:>10s}: {rep.iterations:3d} iterations, "
          f"relres {rep.residual_history[-1]:.2e}, ranks {x.ranks}, "
          f"{rep.wall_time_seconds:.2f}s")
