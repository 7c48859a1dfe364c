"""Per-eigenmode decay tracking on diagonal test matrices."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .exceptions import NotDiagonalError
from .solvers import SolverConfig, solve

__all__ = [
    "ModalDecayReport",
    "InsufficientDataError",
    "modal_coefficients",
    "regression_slope",
    "modal_decay_run",
    "modal_series",
    "relative_spread",
]

UNDERFLOW_FLOOR = 1e-280


class InsufficientDataError(ValueError):
    """Fewer than two points survive filtering, so no line can be fitted."""


@dataclass
class ModalDecayReport:
    """Fitted log10 decay per matvec of every subdominant mode of one run.

    Lists are aligned and ordered like the matrix diagonal, skipping the
    dominant mode. ``slope`` is NaN where ``usable`` is False.
    """

    method: str
    eigenvalue_ratio: list
    slope: list
    usable: list
    mode_index: list
    matvecs_used: int = 0

    def usable_slopes(self) -> np.ndarray:
        s = np.asarray(self.slope)
        return s[np.asarray(self.usable, dtype=bool)]


def _require_diagonal(A):
    if not getattr(A, "is_diagonal", False):
        raise NotDiagonalError("modal coefficients are only defined here for diagonal matrices")


def modal_coefficients(x, A_diag) -> np.ndarray:
    """Magnitude of `x` along each eigenvector of the diagonal matrix `A_diag`."""
    _require_diagonal(A_diag)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A_diag.n,):
        raise ValueError("vector length does not match matrix dimension")
    return np.abs(x)


def regression_slope(series, burn_in: int = 0, floor: float = UNDERFLOW_FLOOR) -> float:
    """Least-squares slope of ``log10(value)`` against matvec index.

    Points with ``value < floor`` (underflowed modes) or ``k < burn_in`` are
    dropped before fitting.

    Raises
    ------
    InsufficientDataError
        If fewer than two points remain.
    """
    arr = np.asarray(series, dtype=np.float64).reshape(-1, 2)
    k, val = arr[:, 0], arr[:, 1]
    keep = (val >= floor) & np.isfinite(val) & (k >= burn_in)
    if np.count_nonzero(keep) < 2 or np.ptp(k[keep]) == 0:
        raise InsufficientDataError("need at least two distinct usable points")
    slope, _ = np.polyfit(k[keep], np.log10(val[keep]), 1)
    return float(slope)


def modal_series(modes, dominant: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack recorded ``(k, |x|)`` snapshots into mode amplitudes relative to the dominant mode.

    Dividing by the dominant coefficient removes the iterate normalization,
    so power iteration modes decay exactly like ``(lambda_j / lambda_1)**k``.
    """
    if not modes:
        return np.empty(0, dtype=int), np.empty((0, 0))
    k = np.fromiter((c for c, _ in modes), dtype=np.int64, count=len(modes))
    X = np.vstack([c for _, c in modes])
    with np.errstate(divide="ignore", invalid="ignore"):
        R = X / X[:, [dominant]]
    return k, R


def modal_decay_run(A_diag, method: str, cfg: SolverConfig, v0=None, burn_in: int = 0,
                    label: str | None = None) -> ModalDecayReport:
    """Run `method` on a diagonal matrix and fit a decay slope to every subdominant mode."""
    _require_diagonal(A_diag)
    cfg = dataclasses.replace(cfg, record_modes=True)
    out = solve(A_diag, method, cfg, v0=v0)
    diag = A_diag.diagonal()
    dominant = int(np.argmax(np.abs(diag)))
    k, R = modal_series(out.modes, dominant)
    ratios, slopes, usable, index = [], [], [], []
    for j in range(A_diag.n):
        if j == dominant:
            continue
        index.append(j)
        ratios.append(float(diag[j] / diag[dominant]))
        try:
            s = regression_slope(np.column_stack([k, R[:, j]]) if k.size else [], burn_in)
            slopes.append(s)
            usable.append(True)
        except InsufficientDataError:
            slopes.append(float("nan"))
            usable.append(False)
    return ModalDecayReport(method=label or method, eigenvalue_ratio=ratios, slope=slopes,
                            usable=usable, mode_index=index, matvecs_used=out.matvecs_used)


def relative_spread(values) -> float:
    """``(max - min) / |median|`` of the finite entries."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    return float((v.max() - v.min()) / abs(np.median(v)))
