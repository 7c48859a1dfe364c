"""Momentum-accelerated power iteration and restarted Lanczos for dominant eigenpairs.

Submodules
----------
matrix
    Sparse symmetric matrices, Matrix Market I/O and diagonal test operators.
rates
    Chebyshev growth, momentum and Lanczos rate formulas, crossover dimension.
solvers
    Power, momentum, restarted and preconditioned Lanczos solvers.
analysis
    Per-eigenmode decay slopes on diagonal matrices.
cli
    Command-line driver (``specmom`` / ``python3 -m specmom``).
"""
from .exceptions import (BreakdownError, DivergenceError, MatrixFormatError,
                         NoCrossoverError, NotDiagonalError, SpectralTieError)
from .matrix import (SparseMatrix, make_diag_descending, make_diag_half,
                     make_diag_indefinite, matvec, read_matrix_market,
                     write_matrix_market)
from .rates import (SpectrumGaps, lanczos_rate_upper, m_cr_approx, m_cr_solve,
                    momentum_asymptotic_rate, predict_rates, r_of_rho)
from .solvers import SOLVERS, SolveOutcome, SolverConfig, Status, solve
from .analysis import ModalDecayReport, modal_decay_run, regression_slope

__version__ = "0.1.0"

__all__ = [
    "BreakdownError", "DivergenceError", "MatrixFormatError", "NoCrossoverError",
    "NotDiagonalError", "SpectralTieError",
    "SparseMatrix", "matvec", "read_matrix_market", "write_matrix_market",
    "make_diag_descending", "make_diag_indefinite", "make_diag_half",
    "SpectrumGaps", "momentum_asymptotic_rate", "r_of_rho", "lanczos_rate_upper",
    "m_cr_approx", "m_cr_solve", "predict_rates",
    "SOLVERS", "SolverConfig", "SolveOutcome", "Status", "solve",
    "ModalDecayReport", "modal_decay_run", "regression_slope",
]
