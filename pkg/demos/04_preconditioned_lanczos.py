"""Momentum as a polynomial filter between Lanczos restarts.

The indefinite test matrix diag(2048, 2047, ..., -1024) has dimension 3073.
Its Lanczos gap is smaller than its momentum gap, so restarted Lanczos
loses some of its advantage. Here each Lanczos(m) cycle is followed by m
momentum steps with beta = nu2^2 / 4, using the second Ritz value of the
cycle. Power steps are the plain alternative.
"""
import numpy as np

from specmom.matrix import make_diag_indefinite
from specmom.rates import SpectrumGaps, m_cr_approx
from specmom.solvers import SolverConfig, solve

A = make_diag_indefinite(2048)
gaps = SpectrumGaps.from_eigenvalues(A.diagonal())
print(f"dimension {A.n}, eps = {gaps.eps:.3e}, eps_L = {gaps.eps_L:.3e}, "
      f"closed-form m_cr = {m_cr_approx(gaps.eps, gaps.eps_L)}")

v0 = np.ones(A.n)
dyn = solve(A, "momentum-dynamic", SolverConfig(), v0)
print(f"dynamic momentum: {dyn.matvecs_used} matvecs")

# %% Plain, momentum-preconditioned and power-preconditioned restarted Lanczos
for m in (16, 32, 64, 128):
    row = []
    for method in ("lanczos", "mp-lanczos", "pp-lanczos"):
        out = solve(A, method, SolverConfig(m=m, max_matvecs=5000), v0)
        cell = str(out.matvecs_used) if out.converged else f"F({out.best_residual:.0e})"
        row.append(f"{method}={cell}")
    print(f"m={m:3d}: " + "  ".join(row))

# %% The beta that the momentum stage uses comes from the Lanczos cycle
out = solve(A, "mp-lanczos", SolverConfig(m=64), v0)
print(f"mp-lanczos(64) beta values: {sorted(set(round(b, 1) for b in out.betas))[:4]} "
      f"(optimum lambda2^2/4 = {2047.0**2 / 4:.1f})")
