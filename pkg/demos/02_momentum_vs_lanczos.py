"""Residual histories of power, momentum and restarted Lanczos on diag(1024..1).

Every method starts from the vector of ones and stops at an absolute
residual ||A x - nu x|| below 1e-12. The cost unit is the matrix-vector
product.
"""
import math

import numpy as np

from specmom.matrix import make_diag_descending
from specmom.rates import momentum_asymptotic_rate
from specmom.solvers import SolverConfig, solve

A = make_diag_descending(1024)
v0 = np.ones(A.n)


def slope(outcome):
    k, r = outcome.history()
    return np.polyfit(k, np.log10(r), 1)[0]


# %% Power iteration barely moves: the gap is 1/1023
power = solve(A, "power", SolverConfig(max_matvecs=3000), v0)
print(f"power:            {power.status}, residual {power.final_residual:.2e} "
      f"after {power.matvecs_used} matvecs")

# %% Static momentum with the optimal beta = lambda2^2 / 4 needs lambda2
static = solve(A, "momentum-static", SolverConfig(beta=1023.0**2 / 4), v0)
print(f"static momentum:  {static.matvecs_used} matvecs, slope {slope(static):.5f}")

# %% Dynamic momentum estimates beta from the residual decay and lands at the same rate
dyn = solve(A, "momentum-dynamic", SolverConfig(), v0)
print(f"dynamic momentum: {dyn.matvecs_used} matvecs, slope {slope(dyn):.5f}, "
      f"predicted {math.log10(momentum_asymptotic_rate(1023 / 1024)):.5f}")
print(f"  final beta estimate {dyn.betas[-1]:.1f} (optimum {1023.0**2 / 4:.1f})")

# %% Restarted Lanczos(m) for m below and above the crossover dimension 39
for m in (8, 16, 32, 36, 64):
    out = solve(A, "lanczos", SolverConfig(m=m), v0)
    verdict = "faster" if out.matvecs_used < dyn.matvecs_used else "slower"
    print(f"Lanczos({m:2d}):      {out.matvecs_used:5d} matvecs, slope {slope(out):.5f}  "
          f"({verdict} than dynamic momentum)")
