"""Power, momentum and restarted Lanczos eigensolvers with matvec accounting.

Every solver takes the operator `A` (anything with ``n`` and ``matvec``), a
nonzero start vector and a :class:`SolverConfig`, and returns a
:class:`SolveOutcome` whose residual history is indexed by the running
number of matrix-vector products.

Lanczos accounting: the residual ``A x1 - nu1 x1`` of a cycle needs
``A x1``, which is also the first product of the next cycle (or of the
preconditioning stage) because that cycle starts from ``x1``. It is computed
and counted once. A restarted run of ``c`` cycles therefore uses ``c m + 1``
products, and each mp/pp outer iteration adds ``2 m``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .exceptions import BreakdownError, NotDiagonalError, SpectralTieError

__all__ = [
    "Status",
    "SolverConfig",
    "SolveOutcome",
    "TridiagonalMatrix",
    "LanczosCycle",
    "tridiag_eig",
    "power_solve",
    "static_momentum_solve",
    "dynamic_momentum_solve",
    "lanczos_cycle",
    "restarted_lanczos_solve",
    "mp_lanczos_solve",
    "pp_lanczos_solve",
    "SOLVERS",
    "solve",
]

BREAKDOWN_RTOL = 1e-14
BREAKDOWN_TOL_FRACTION = 0.1
# consecutive clamped residual ratios before a spectral-tie warning is raised
TIE_PATIENCE = 50
# residual ratios this close to 1 count as stalled for the tie heuristic
TIE_RATIO = 1.0 - 1e-8


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_MATVECS = "max_matvecs"
    DIVERGED = "diverged"
    BREAKDOWN_CONVERGED = "breakdown_converged"

    def __str__(self):
        return self.value


@dataclass
class SolverConfig:
    """Stopping rule and method parameters shared by all solvers.

    `m` is only read by the Lanczos family and `beta` only by static momentum.
    With ``residual_mode="relative"`` the residual is divided by ``|nu|``.
    """

    tol: float = 1e-12
    residual_mode: str = "absolute"
    max_matvecs: int = 5000
    m: Optional[int] = None
    beta: Optional[float] = None
    record_history: bool = True
    record_modes: bool = False
    reorthogonalize: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.residual_mode not in ("absolute", "relative"):
            raise ValueError("residual_mode must be 'absolute' or 'relative'")
        if self.max_matvecs < 1:
            raise ValueError("max_matvecs must be positive")
        if self.m is not None and self.m < 2:
            raise ValueError("Krylov dimension m must be at least 2")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be non-negative")


@dataclass
class SolveOutcome:
    """Result of one solver run.

    ``residuals`` holds ``(matvec_count, residual)`` pairs, with the residual
    measured the same way as the stopping test, and ``estimates`` the
    eigenvalue estimate at each of those points. ``modes`` holds
    ``(matvec_count, |x|)`` snapshots when modal recording was requested;
    ``betas`` the momentum parameters actually used.
    """

    nu1: float
    x1: np.ndarray
    matvecs_used: int
    status: Status
    nu2: float = math.nan
    residuals: list = field(default_factory=list)
    estimates: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status in (Status.CONVERGED, Status.BREAKDOWN_CONVERGED)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1][1] if self.residuals else math.nan

    @property
    def best_residual(self) -> float:
        return min(r for _, r in self.residuals) if self.residuals else math.nan

    def history(self) -> tuple[np.ndarray, np.ndarray]:
        """Residual history as ``(matvec_counts, residuals)`` arrays."""
        if not self.residuals:
            return np.empty(0, dtype=int), np.empty(0)
        k, r = zip(*self.residuals)
        return np.asarray(k), np.asarray(r)


@dataclass(frozen=True)
class TridiagonalMatrix:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if len(self.beta) != max(len(self.alpha) - 1, 0):
            raise ValueError("beta must have length len(alpha) - 1")

    @property
    def size(self) -> int:
        return len(self.alpha)

    def toarray(self) -> np.ndarray:
        return np.diag(self.alpha) + np.diag(self.beta, 1) + np.diag(self.beta, -1)


@dataclass
class LanczosCycle:
    """One Lanczos(m) cycle: projected matrix, basis and the two dominant Ritz pairs."""

    T: TridiagonalMatrix
    Q: np.ndarray
    nu1: float
    nu2: float
    x1: np.ndarray
    x2: Optional[np.ndarray]
    residual: float
    Ax1: np.ndarray
    breakdown: bool
    matvecs: int


def tridiag_eig(T: TridiagonalMatrix) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of a symmetric tridiagonal matrix, eigenvalues ascending."""
    alpha = np.asarray(T.alpha, dtype=np.float64)
    if alpha.size == 0:
        return np.empty(0), np.empty((0, 0))
    return eigh_tridiagonal(alpha, np.asarray(T.beta, dtype=np.float64))


class _Run:
    """Matvec counter, residual log and stopping test shared by one solver run."""

    def __init__(self, A, cfg: SolverConfig):
        self.A = A
        self.cfg = cfg
        self.count = 0
        self.residuals: list = []
        self.estimates: list = []
        self.modes: list = []
        self.betas: list = []
        self.diagnostics: list = []
        if cfg.record_modes and not getattr(A, "is_diagonal", False):
            raise NotDiagonalError("modal recording needs a diagonal matrix")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        self.count += 1
        return self.A.matvec(x)

    def measure(self, d: float, nu: float) -> float:
        if self.cfg.residual_mode == "relative":
            return d / abs(nu) if nu != 0 else math.inf
        return d

    def check(self, x: np.ndarray, nu: float, d: float) -> bool:
        """Log one residual at the current matvec count; True when below tol."""
        res = self.measure(d, nu)
        if self.cfg.record_history:
            self.residuals.append((self.count, res))
            self.estimates.append(float(nu))
        else:
            self.residuals[:] = [(self.count, res)]
            self.estimates[:] = [float(nu)]
        if self.cfg.record_modes:
            self.modes.append((self.count, np.abs(x)))
        return res < self.cfg.tol

    @property
    def exhausted(self) -> bool:
        return self.count >= self.cfg.max_matvecs

    def outcome(self, status, x, nu1, nu2=math.nan) -> SolveOutcome:
        return SolveOutcome(nu1=float(nu1), x1=x, matvecs_used=self.count, status=Status(status),
                            nu2=float(nu2), residuals=self.residuals, estimates=self.estimates,
                            modes=self.modes, betas=self.betas, diagnostics=self.diagnostics)


class _Diverged(Exception):
    pass


def _start_vector(A, v0) -> tuple[np.ndarray, float]:
    v0 = np.asarray(v0, dtype=np.float64)
    if v0.shape != (A.n,):
        raise ValueError(f"start vector of shape {v0.shape} does not match dimension {A.n}")
    h0 = float(np.linalg.norm(v0))
    if h0 == 0 or not math.isfinite(h0):
        raise ValueError("start vector must be nonzero and finite")
    return v0 / h0, h0


def _momentum_step(run: _Run, v, x_prev, h, beta):
    """``u = v - (beta/h) x_prev``, normalize, multiply, Rayleigh value and residual."""
    u = v if (beta == 0 or x_prev is None) else v - (beta / h) * x_prev
    h_new = float(np.linalg.norm(u))
    if not math.isfinite(h_new):
        raise _Diverged
    if h_new == 0:
        raise BreakdownError("momentum update vanished")
    x = u / h_new
    v_new = run.matvec(x)
    nu = float(v_new @ x)
    d = float(np.linalg.norm(v_new - nu * x))
    if not (math.isfinite(nu) and math.isfinite(d)):
        raise _Diverged
    return x, v_new, h_new, nu, d


def _heavy_ball(run: _Run, x0, v1, beta_schedule, max_steps=None):
    """Run the normalized momentum recurrence from unit `x0` with ``v1 = A x0`` known.

    `beta_schedule(k)` gives the momentum parameter for step ``k`` (0 at
    ``k = 0``, which is a plain power step). It is also handed each step's
    ``(nu, d)`` through an optional ``update`` attribute.

    Returns ``(x, v, nu, converged)`` where ``v = A x``.
    """
    x_prev, x, v, h = None, x0, v1, None
    nu = float(v1 @ x0)
    k = 0
    while max_steps is None or k < max_steps:
        if run.exhausted:
            return x, v, nu, False
        beta = beta_schedule(k) if k > 0 else 0.0
        x_new, v, h, nu, d = _momentum_step(run, v, x_prev, h, beta)
        x_prev, x = x, x_new
        if k > 0:
            run.betas.append(beta)
        update = getattr(beta_schedule, "update", None)
        if update is not None:
            update(k, nu, d)
        if run.check(x, nu, d):
            return x, v, nu, True
        k += 1
    return x, v, nu, False


def _stage_status(run: _Run, converged: bool) -> Status:
    return Status.CONVERGED if converged else Status.MAX_MATVECS


def power_solve(A, v0, cfg: SolverConfig) -> SolveOutcome:
    """Power iteration; one matvec and one residual check per step."""
    run = _Run(A, cfg)
    x0, _ = _start_vector(A, v0)
    v1 = run.matvec(x0)
    try:
        x, _, nu, ok = _heavy_ball(run, x0, v1, lambda k: 0.0)
    except _Diverged:
        return run.outcome(Status.DIVERGED, x0, math.nan)
    return run.outcome(_stage_status(run, ok), x, nu)


def static_momentum_solve(A, v0, cfg: SolverConfig) -> SolveOutcome:
    """Heavy-ball power iteration with fixed ``beta`` (``cfg.beta``).

    The first step is a plain power step, afterwards
    ``u_{k+1} = A x_k - (beta / h_k) x_{k-1}`` with ``h_k = ||u_k||``.
    Convergence needs ``beta < lambda1**2 / 4``; this is not checked, a
    larger value simply stalls the residual.
    """
    if cfg.beta is None:
        raise ValueError("static momentum needs cfg.beta")
    run = _Run(A, cfg)
    x0, _ = _start_vector(A, v0)
    v1 = run.matvec(x0)
    beta = float(cfg.beta)
    try:
        x, _, nu, ok = _heavy_ball(run, x0, v1, lambda k: beta)
    except _Diverged:
        return run.outcome(Status.DIVERGED, x0, math.nan)
    return run.outcome(_stage_status(run, ok), x, nu)


class _DynamicBeta:
    """``beta_k = nu_k^2 r_k^2 / 4`` with ``r`` re-estimated from residual ratios.

    Steps 0 and 1 are power steps; ``r_2 = min(d_2/d_1, 1)``. Afterwards
    ``rho_k = min(d_{k+1}/d_k, 1)`` and ``r_{k+1} = 2 rho_k / (1 + rho_k^2)``.
    """

    def __init__(self, run: _Run):
        self.run = run
        self.r = None
        self.nu = None
        self.d = None
        self.clamped = 0
        self.warned = False

    def __call__(self, k):
        if k < 2:
            return 0.0
        return self.nu * self.nu * self.r * self.r / 4.0

    def update(self, k, nu, d):
        # k is the step just taken; it produced nu_{k+1}, d_{k+1}
        if k >= 1:
            ratio = d / self.d if self.d > 0 else 1.0
            rho = min(ratio, 1.0)
            if k == 1:
                self.r = rho
            else:
                self.r = 2.0 * rho / (1.0 + rho * rho)
            self._watch_tie(ratio >= TIE_RATIO)
        self.nu, self.d = nu, d

    def _watch_tie(self, clamped):
        self.clamped = self.clamped + 1 if clamped else 0
        if self.clamped >= TIE_PATIENCE and not self.warned:
            msg = (f"residual ratio clamped at 1 for {TIE_PATIENCE} consecutive steps; "
                   "|lambda1| and |lambda2| may coincide")
            warnings.warn(msg, RuntimeWarning, stacklevel=4)
            self.run.diagnostics.append(msg)
            self.warned = True


def dynamic_momentum_solve(A, v0, cfg: SolverConfig) -> SolveOutcome:
    """Momentum iteration with ``beta`` estimated on the fly from residual decay.

    No spectral information is needed; the estimate ``beta_k`` is recorded in
    ``SolveOutcome.betas``. A persistent residual ratio of 1 (for instance a
    dominant ``+-lambda`` pair) is reported as a RuntimeWarning.
    """
    run = _Run(A, cfg)
    x0, _ = _start_vector(A, v0)
    v1 = run.matvec(x0)
    try:
        x, _, nu, ok = _heavy_ball(run, x0, v1, _DynamicBeta(run))
    except _Diverged:
        return run.outcome(Status.DIVERGED, x0, math.nan)
    return run.outcome(_stage_status(run, ok), x, nu)


def _lanczos(matvec: Callable, v0, m: int, Av0=None, reorthogonalize=False,
             breakdown_cap=None) -> LanczosCycle:
    """Lanczos(m) cycle from `v0`; `Av0` reuses a product already computed.

    ``beta_k <= BREAKDOWN_RTOL * scale`` ends the cycle early (happy
    breakdown), where scale is the running max of ``|alpha|`` and ``beta``.
    `breakdown_cap(scale)` optionally lowers that threshold.
    """
    nrm = float(np.linalg.norm(v0))
    q = v0 / nrm
    n = q.size
    Q = np.zeros((n, m))
    alpha = np.zeros(m)
    beta = np.zeros(max(m - 1, 0))
    q_prev = np.zeros(n)
    b_prev = 0.0
    scale = 0.0
    used = 0
    size = m
    breakdown = False
    for k in range(m):
        Q[:, k] = q
        if k == 0 and Av0 is not None:
            v = Av0 / nrm
        else:
            v = matvec(q)
            used += 1
        a = float(q @ v)
        alpha[k] = a
        scale = max(scale, abs(a))
        if k == m - 1:
            break
        u = v - b_prev * q_prev - a * q
        if reorthogonalize:
            u -= Q[:, : k + 1] @ (Q[:, : k + 1].T @ u)
        b = float(np.linalg.norm(u))
        threshold = BREAKDOWN_RTOL * scale
        if breakdown_cap is not None:
            threshold = min(threshold, breakdown_cap(scale))
        if b <= threshold:
            size = k + 1
            breakdown = True
            break
        beta[k] = b
        scale = max(scale, b)
        q_prev, q, b_prev = q, u / b, b
    T = TridiagonalMatrix(alpha[:size].copy(), beta[: size - 1].copy())
    Q = Q[:, :size]
    w, S = tridiag_eig(T)
    order = np.argsort(-np.abs(w), kind="stable")
    nu1 = float(w[order[0]])
    x1 = Q @ S[:, order[0]]
    x1 /= np.linalg.norm(x1)
    if size > 1:
        nu2 = float(w[order[1]])
        x2 = Q @ S[:, order[1]]
    else:
        nu2, x2 = 0.0, None
    Ax1 = matvec(x1)
    used += 1
    residual = float(np.linalg.norm(Ax1 - nu1 * x1))
    return LanczosCycle(T=T, Q=Q, nu1=nu1, nu2=nu2, x1=x1, x2=x2, residual=residual,
                        Ax1=Ax1, breakdown=breakdown, matvecs=used)


def lanczos_cycle(A, v0, m: int, reorthogonalize: bool = False) -> LanczosCycle:
    """Single Lanczos(m) cycle (no restart).

    Builds the orthonormal Krylov basis ``Q`` and tridiagonal ``T`` with the
    three-term recurrence, extracts the two largest-magnitude Ritz pairs and
    the residual ``||A x1 - nu1 x1||``. Uses ``m + 1`` products; fewer on a
    happy breakdown, in which case ``T`` is truncated and ``breakdown`` set.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    v0, _ = _start_vector(A, v0)
    return _lanczos(A.matvec, v0, m, reorthogonalize=reorthogonalize)


def _lanczos_status(cyc: LanczosCycle) -> Status:
    return Status.BREAKDOWN_CONVERGED if cyc.breakdown else Status.CONVERGED


def _breakdown_cap(cfg: SolverConfig):
    # a breakdown must leave the Ritz residual below tol, otherwise restarts
    # from a near-eigenvector truncate to 1x1 cycles and stall above tol;
    # |nu1| >= max|alpha| bounds the relative case
    frac = BREAKDOWN_TOL_FRACTION * cfg.tol
    if cfg.residual_mode == "absolute":
        return lambda scale: frac
    return lambda scale: frac * scale


def _need_m(cfg: SolverConfig) -> int:
    if cfg.m is None:
        raise ValueError("Lanczos-family solvers need cfg.m")
    return int(cfg.m)


def restarted_lanczos_solve(A, v0, cfg: SolverConfig) -> SolveOutcome:
    """Restarted Lanczos(m): repeat cycles from the latest dominant Ritz vector."""
    m = _need_m(cfg)
    run = _Run(A, cfg)
    x, _ = _start_vector(A, v0)
    Ax = None
    cyc = None
    while True:
        cyc = _lanczos(run.matvec, x, m, Ax, cfg.reorthogonalize, _breakdown_cap(cfg))
        if run.check(cyc.x1, cyc.nu1, cyc.residual):
            return run.outcome(_lanczos_status(cyc), cyc.x1, cyc.nu1, cyc.nu2)
        x, Ax = cyc.x1, cyc.Ax1
        if run.exhausted:
            return run.outcome(Status.MAX_MATVECS, cyc.x1, cyc.nu1, cyc.nu2)


def _preconditioned_lanczos(A, v0, cfg: SolverConfig, momentum: bool) -> SolveOutcome:
    m = _need_m(cfg)
    run = _Run(A, cfg)
    x, _ = _start_vector(A, v0)
    Ax = None
    while True:
        cyc = _lanczos(run.matvec, x, m, Ax, cfg.reorthogonalize, _breakdown_cap(cfg))
        if run.check(cyc.x1, cyc.nu1, cyc.residual):
            return run.outcome(_lanczos_status(cyc), cyc.x1, cyc.nu1, cyc.nu2)
        if run.exhausted:
            return run.outcome(Status.MAX_MATVECS, cyc.x1, cyc.nu1, cyc.nu2)
        beta = 0.0
        if momentum:
            if abs(cyc.nu2) >= abs(cyc.nu1) * (1.0 - 1e-12):
                raise SpectralTieError(f"|nu2| = {abs(cyc.nu2)!r} matches |nu1| = {abs(cyc.nu1)!r}")
            beta = cyc.nu2 * cyc.nu2 / 4.0
        try:
            x, Ax, nu, ok = _heavy_ball(run, cyc.x1, cyc.Ax1, lambda k: beta, max_steps=m)
        except _Diverged:
            return run.outcome(Status.DIVERGED, cyc.x1, cyc.nu1, cyc.nu2)
        if ok:
            return run.outcome(Status.CONVERGED, x, nu, cyc.nu2)
        if run.exhausted:
            return run.outcome(Status.MAX_MATVECS, x, nu, cyc.nu2)


def mp_lanczos_solve(A, v0, cfg: SolverConfig) -> SolveOutcome:
    """Restarted Lanczos(m) alternated with `m` static momentum steps.

    The momentum stage starts from the dominant Ritz vector with
    ``beta = nu2**2 / 4`` taken from the preceding cycle. Any residual check
    below tol, in either stage, ends the run.

    Raises
    ------
    SpectralTieError
        If ``|nu2|`` equals ``|nu1|`` to rounding, so no useful ``beta`` exists.
    """
    return _preconditioned_lanczos(A, v0, cfg, momentum=True)


def pp_lanczos_solve(A, v0, cfg: SolverConfig) -> SolveOutcome:
    """Restarted Lanczos(m) alternated with `m` plain power steps."""
    return _preconditioned_lanczos(A, v0, cfg, momentum=False)


SOLVERS = {
    "power": power_solve,
    "momentum-static": static_momentum_solve,
    "momentum-dynamic": dynamic_momentum_solve,
    "lanczos": restarted_lanczos_solve,
    "mp-lanczos": mp_lanczos_solve,
    "pp-lanczos": pp_lanczos_solve,
}
LANCZOS_FAMILY = frozenset({"lanczos", "mp-lanczos", "pp-lanczos"})


def solve(A, method: str, cfg: SolverConfig, v0=None) -> SolveOutcome:
    """Dispatch to a solver by name; `v0` defaults to the vector of ones."""
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(SOLVERS)}") from None
    if v0 is None:
        v0 = np.ones(A.n)
    return fn(A, v0, cfg)
