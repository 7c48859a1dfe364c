"""Which eigenmodes does each method damp, and how fast?

On a diagonal matrix the iterate's entries are its eigenmode coefficients,
so each mode's decay can be fitted separately. Power iteration damps mode j
like (lambda_j / lambda_1)^k, momentum damps every mode at one common rate,
and restarted Lanczos produces a rate that oscillates across the spectrum.
"""
import numpy as np

from specmom.analysis import modal_decay_run, relative_spread
from specmom.matrix import make_diag_descending
from specmom.solvers import SolverConfig

A = make_diag_descending(1024)
runs = {
    "power": ("power", SolverConfig(max_matvecs=600)),
    "dynamic momentum": ("momentum-dynamic", SolverConfig()),
    "Lanczos(16)": ("lanczos", SolverConfig(m=16)),
    "Lanczos(32)": ("lanczos", SolverConfig(m=32)),
    "Lanczos(64)": ("lanczos", SolverConfig(m=64)),
}
reports = {name: modal_decay_run(A, method, cfg, label=name) for name, (method, cfg) in runs.items()}

# %% Power iteration: slope of mode j is exactly log10(lambda_j / lambda_1)
p = reports["power"]
ratio = np.asarray(p.eigenvalue_ratio)
err = np.nanmax(np.abs(np.asarray(p.slope) - np.log10(ratio)))
print(f"power: max deviation from log10(lambda_j/lambda_1) = {err:.1e}")

# %% Momentum: one common slope for all modes
d = reports["dynamic momentum"].usable_slopes()
common = np.median(d)
print(f"dynamic momentum: median slope {common:.5f}, relative spread {relative_spread(d):.3f}")

# %% Lanczos: peaks above or below the momentum rate depending on m
for name in ("Lanczos(16)", "Lanczos(32)", "Lanczos(64)"):
    s = reports[name].usable_slopes()
    print(f"{name}: slowest mode {s.max():.5f}, fastest {s.min():.5f}, "
          f"modes slower than momentum: {(s > common).sum()}")

# %% A coarse look at the oscillation for m = 16 (every 64th mode)
s16 = np.asarray(reports["Lanczos(16)"].slope)
for j in range(0, 1023, 64):
    bar = "#" * int(round(-s16[j] / 0.004))
    print(f"  lambda/lambda1 = {ratio[j]:.3f}  {s16[j]:+.4f}  {bar}")
