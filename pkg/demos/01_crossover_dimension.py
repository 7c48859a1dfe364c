"""How large must the Krylov space be before restarted Lanczos beats momentum?

Momentum-accelerated power iteration needs only the ratio |lambda2/lambda1|,
while restarted Lanczos(m) gains more per restart as m grows. This script
walks through the rate formulas and the crossover dimension m_cr for the
two diagonal test families.
"""
import math

import numpy as np

from specmom.cli import table_rows
from specmom.matrix import make_diag_descending
from specmom.rates import (SpectrumGaps, log_cheb_T, m_cr_approx, m_cr_root,
                           m_cr_solve, momentum_asymptotic_rate)

# %% Spectral gaps of diag(1024, 1023, ..., 1)
A = make_diag_descending(1024)
gaps = SpectrumGaps.from_eigenvalues(A.diagonal())
print(f"eps   = {gaps.eps:.6e}   (momentum gap)")
print(f"eps_L = {gaps.eps_L:.6e}   (Lanczos gap)")

# %% Per-matvec contraction of optimally tuned momentum
rho = momentum_asymptotic_rate(gaps.ratio)
print(f"momentum contraction per matvec: {rho:.6f}  (power iteration: {gaps.ratio:.6f})")
print(f"  -> log10 slope {math.log10(rho):.5f} vs {math.log10(gaps.ratio):.5f}")

# %% Restarted Lanczos(m): one restart of m products shrinks the error by ~1/T_{m-1}(1 + 2 eps_L)
for m in (8, 16, 32, 39, 64):
    slope = -log_cheb_T(m - 1, 1 + 2 * gaps.eps_L) / m / math.log(10)
    print(f"Lanczos({m:2d}) predicted log10 slope per matvec: {slope:.5f}")

# %% Where the two rates meet
print("closed form m_cr:", m_cr_approx(gaps.eps, gaps.eps_L))
print("Chebyshev equation root:", round(m_cr_root(gaps.eps, gaps.eps_L, 199), 3),
      "-> m_cr =", m_cr_solve(gaps.eps, gaps.eps_L, 199))

# %% The full crossover tables; m_cr grows like sqrt(n)
for example in (1, 2):
    print(f"\nexample {example}:  n, eps, m_cr (closed form), m_cr (solved)")
    for n, eps, a, s in table_rows(example):
        print(f"  {n:6d}  {eps:.3e}  {a:4d}  {s:4d}")

ns = np.array([r[0] for r in table_rows(1)], dtype=float)
ms = np.array([r[3] for r in table_rows(1)], dtype=float)
print("\nlog-log growth exponent of m_cr in n:", round(np.polyfit(np.log(ns), np.log(ms), 1)[0], 3))
