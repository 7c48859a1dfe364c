"""Chebyshev growth, momentum and Lanczos rate formulas, and the crossover dimension.

All rates here are natural-log quantities unless a name says otherwise.
Growth of ``T_N`` is handled in log space because ``T_N(1 + eps)`` overflows
double precision once ``N * sqrt(eps)`` reaches a few hundred.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .exceptions import DivergenceError, NoCrossoverError

__all__ = [
    "SpectrumGaps",
    "RatePrediction",
    "cheb_T",
    "log_cheb_T",
    "cheb_growth_bounds",
    "heavy_ball_poly",
    "momentum_asymptotic_rate",
    "r_of_rho",
    "r_of_rho_derivative",
    "augmented_mode_magnitude",
    "mode_decay_ratio",
    "lanczos_tan_bound",
    "lanczos_rate_upper",
    "m_cr_approx",
    "m_cr_solve",
    "m_cr_root",
    "crossover_residual",
    "default_cheb_degree",
    "predict_rates",
]

M_CR_BRACKET = (2.0, 1.0e4)
M_CR_XTOL = 1e-6


@dataclass(frozen=True)
class SpectrumGaps:
    """Spectral data that drives every rate prediction.

    ``eps = (lambda1 - |lambda2|) / |lambda2|`` governs momentum methods and
    ``eps_L = (lambda1 - lambda2') / (lambda2' - lambdan')`` governs Lanczos,
    where primes denote ordering by signed value.
    """

    lambda1: float
    lambda2_mag: float
    lambda2_signed: float
    lambdan_signed: float

    def __post_init__(self):
        if not self.lambda1 > self.lambda2_mag > 0:
            raise ValueError("need lambda1 > |lambda2| > 0")
        if not self.lambdan_signed < self.lambda2_signed <= self.lambda1:
            raise ValueError("need lambdan' < lambda2' <= lambda1")

    @property
    def eps(self) -> float:
        return (self.lambda1 - self.lambda2_mag) / self.lambda2_mag

    @property
    def eps_L(self) -> float:
        return (self.lambda1 - self.lambda2_signed) / (self.lambda2_signed - self.lambdan_signed)

    @property
    def ratio(self) -> float:
        """``|lambda2| / lambda1``."""
        return self.lambda2_mag / self.lambda1

    @classmethod
    def from_eigenvalues(cls, eigenvalues) -> "SpectrumGaps":
        """Gaps of a spectrum whose largest-magnitude eigenvalue is positive and simple."""
        lam = np.asarray(eigenvalues, dtype=np.float64)
        if lam.size < 3:
            raise ValueError("need at least three eigenvalues")
        by_mag = lam[np.argsort(-np.abs(lam), kind="stable")]
        if by_mag[0] <= 0:
            raise ValueError("dominant eigenvalue must be positive (use -A otherwise)")
        signed = np.sort(lam)[::-1]
        return cls(float(by_mag[0]), float(abs(by_mag[1])), float(signed[1]), float(signed[-1]))


@dataclass(frozen=True)
class RatePrediction:
    """Predicted per-matvec log-residual slopes (natural log) and crossover dimensions."""

    momentum_slope: float
    lanczos_slope_bound: float
    m_cr_approx: int
    m_cr_solved: int


def cheb_T(N: int, t: float) -> float:
    """Chebyshev polynomial of the first kind via its trigonometric/hyperbolic form."""
    if N < 0:
        raise ValueError("degree must be non-negative")
    if N == 0:
        return 1.0
    if -1.0 <= t <= 1.0:
        return math.cos(N * math.acos(t))
    try:
        if t > 1.0:
            return math.cosh(N * math.acosh(t))
        return (-1.0) ** N * math.cosh(N * math.acosh(-t))
    except OverflowError:
        return math.inf if t > 1.0 or N % 2 == 0 else -math.inf


def log_cheb_T(N: float, t: float) -> float:
    """``log T_N(t)`` for ``t > 1``, without overflow.

    Non-integer `N` is accepted so crossover equations can be root-found in a
    continuous Krylov dimension.
    """
    if not t > 1.0:
        raise ValueError("log_cheb_T requires t > 1")
    if N < 0:
        raise ValueError("degree must be non-negative")
    # t + sqrt(t^2 - 1) written to avoid cancellation for t close to 1
    s = t + math.sqrt((t - 1.0) * (t + 1.0))
    log_s = math.log(s)
    return math.log(0.5) + N * log_s + math.log1p(math.exp(-2.0 * N * log_s))


def cheb_growth_bounds(N: int, eps: float) -> tuple[float, float]:
    """Log of the lower and upper bounds sandwiching ``T_N(1 + eps)``.

    Returns
    -------
    log_lower, log_upper : float
        ``log(0.5 * (1 + sqrt(2 eps))**N)`` and
        ``log(0.5 * (1 + 2 eps + sqrt(2 eps))**N * (1 + (1 + sqrt(2 eps))**(-2N)))``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if N < 1:
        raise ValueError("N must be at least 1")
    root = math.sqrt(2.0 * eps)
    log_lower = math.log(0.5) + N * math.log1p(root)
    log_upper = (math.log(0.5) + N * math.log1p(2.0 * eps + root)
                 + math.log1p(math.exp(-2.0 * N * math.log1p(root))))
    return log_lower, log_upper


def heavy_ball_poly(N: int, x, beta: float, p1_scale: float = 0.5):
    """Evaluate ``p_N`` from ``p_{k+1}(x) = x p_k(x) - beta p_{k-1}(x)``.

    ``p_0 = 1`` and ``p_1 = p1_scale * x``. With the default ``p1_scale = 0.5``
    the family is the stretched Chebyshev sequence ``beta**(N/2) T_N(x / (2 sqrt(beta)))``.
    The momentum iteration itself starts with a plain power step, which
    corresponds to ``p1_scale = 1``.

    `x` may be a scalar, an array (elementwise) or a square matrix given as a
    2-d array, in which case matrix powers are used.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        eye = np.eye(x.shape[0])
        prev, cur = eye, p1_scale * x
        mul = lambda p: x @ p  # noqa: E731
    else:
        prev, cur = np.ones_like(x), p1_scale * x
        mul = lambda p: x * p  # noqa: E731
    if N == 0:
        return prev
    for _ in range(N - 1):
        prev, cur = cur, mul(cur) - beta * prev
    return cur


def momentum_asymptotic_rate(r: float) -> float:
    """Per-matvec contraction ``r / (1 + sqrt(1 - r^2))`` of optimal momentum, ``r = |lambda2/lambda1|``."""
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    return r / (1.0 + math.sqrt((1.0 - r) * (1.0 + r)))


def r_of_rho(rho: float) -> float:
    """Inverse of :func:`momentum_asymptotic_rate`: ``2 rho / (1 + rho^2)``."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    return 2.0 * rho / (1.0 + rho * rho)


def r_of_rho_derivative(rho: float) -> float:
    """``d r / d rho = 2 (1 - rho^2) / (1 + rho^2)^2``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    return 2.0 * (1.0 - rho * rho) / (1.0 + rho * rho) ** 2


def augmented_mode_magnitude(lam: float, beta: float) -> float:
    """Largest |eigenvalue| of the 2x2 companion block ``[[lam, -beta], [1, 0]]``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    disc = lam * lam - 4.0 * beta
    if disc >= 0:
        return 0.5 * (abs(lam) + math.sqrt(disc))
    return math.sqrt(beta)


def mode_decay_ratio(lambda_j: float, lambda1: float, beta: float) -> float:
    """Asymptotic decay ratio ``|mu_j| / |mu_1|`` of mode `j` under static momentum.

    At ``beta == lambda_j**2 / 4`` the companion block is defective; both
    branches share the returned limit, and the polynomial-in-k transient of
    the defective mode is not represented.

    Raises
    ------
    DivergenceError
        If ``beta >= lambda1**2 / 4``.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if beta >= lambda1 * lambda1 / 4.0:
        raise DivergenceError("beta >= lambda1^2/4: the momentum iteration does not converge")
    if not abs(lambda_j) < abs(lambda1):
        raise ValueError("need |lambda_j| < lambda1")
    denom = abs(lambda1) + math.sqrt(lambda1 * lambda1 - 4.0 * beta)
    disc = lambda_j * lambda_j - 4.0 * beta
    if disc >= 0:
        return (abs(lambda_j) + math.sqrt(disc)) / denom
    return 2.0 * math.sqrt(beta) / denom


def lanczos_tan_bound(i_prime: int, m: int, sorted_spectrum, tan0: float) -> float:
    """Bound on ``tan(phi_i', K_m)`` for the `i_prime`-th largest (signed) eigenvector.

    ``kappa / T_{m-i'}(1 + 2 gamma) * tan0`` with
    ``kappa = prod_{j' < i'} (lam_j' - lam_n') / (lam_j' - lam_i')`` (1 for ``i' = 1``)
    and ``gamma = (lam_i' - lam_{i'+1}) / (lam_{i'+1} - lam_n')``.
    `i_prime` is 1-based and `sorted_spectrum` must be in descending order.
    """
    lam = np.asarray(sorted_spectrum, dtype=np.float64)
    if lam.ndim != 1 or np.any(np.diff(lam) > 0):
        raise ValueError("spectrum must be sorted in descending order")
    i = int(i_prime)
    if not 1 <= i < lam.size:
        raise ValueError("i_prime must satisfy 1 <= i' < n")
    if m < i:
        raise ValueError("need m >= i'")
    lam_n = lam[-1]
    lam_i = lam[i - 1]
    lam_next = lam[i]
    if lam_next - lam_n <= 0:
        raise ValueError("degenerate gap: lambda_(i+1)' equals lambda_n'")
    kappa = 1.0
    for lam_j in lam[: i - 1]:
        kappa *= (lam_j - lam_n) / (lam_j - lam_i)
    gamma = (lam_i - lam_next) / (lam_next - lam_n)
    degree = m - i
    if degree == 0 or gamma == 0:
        return kappa * tan0
    return kappa * tan0 * math.exp(-log_cheb_T(degree, 1.0 + 2.0 * gamma))


def lanczos_rate_upper(m: int, eps_L: float) -> float:
    """Per-matvec log slope of the restart bound ``2 (1 + 2 sqrt(eps_L))**(-(m-1))``.

    One restart costs `m` matvecs (the residual product is reused by the next cycle).
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if eps_L < 0:
        raise ValueError("eps_L must be non-negative")
    return (math.log(2.0) - (m - 1) * math.log1p(2.0 * math.sqrt(eps_L))) / m


def _crossover_denominator(eps: float, eps_L: float) -> float:
    if eps <= 0 or eps_L <= 0:
        raise ValueError("eps and eps_L must be positive")
    return 2.0 * math.sqrt(eps_L) - math.sqrt(2.0 * eps)


def m_cr_approx(eps: float, eps_L: float) -> int:
    """Closed-form crossover ``ceil(log 2 / (2 sqrt(eps_L) - sqrt(2 eps)) + 1)``."""
    denom = _crossover_denominator(eps, eps_L)
    if denom <= 0:
        raise NoCrossoverError("2 sqrt(eps_L) <= sqrt(2 eps): momentum is always faster")
    return math.ceil(math.log(2.0) / denom + 1.0)


def crossover_residual(m: float, eps: float, eps_L: float, N: int) -> float:
    """Momentum per-step growth minus restarted-Lanczos per-step growth at dimension `m`."""
    lhs = log_cheb_T(N + 1, 1.0 + eps) - log_cheb_T(N, 1.0 + eps)
    return lhs - log_cheb_T(m - 1.0, 1.0 + 2.0 * eps_L) / (m - 1.0)


def m_cr_root(eps: float, eps_L: float, N: int) -> float:
    """Continuous crossover dimension, bisected on ``[2, 1e4]`` to ``1e-6``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    _crossover_denominator(eps, eps_L)
    lo, hi = M_CR_BRACKET
    f_lo = crossover_residual(lo, eps, eps_L, N)
    f_hi = crossover_residual(hi, eps, eps_L, N)
    if f_lo * f_hi > 0:
        raise NoCrossoverError("no sign change of the crossover equation on [2, 1e4]")
    return bisect(crossover_residual, lo, hi, args=(eps, eps_L, N), xtol=M_CR_XTOL)


def m_cr_solve(eps: float, eps_L: float, N: int) -> int:
    """Crossover dimension from the Chebyshev growth equation, rounded up.

    The root is rounded up: the result is the smallest integer Krylov
    dimension at which restarted Lanczos is at least as fast as momentum.
    """
    return math.ceil(m_cr_root(eps, eps_L, N))


def default_cheb_degree(n: int) -> int:
    """Momentum polynomial degree used for the crossover tables: 199 up to n = 4096, else 349."""
    return 199 if n <= 4096 else 349


def predict_rates(gaps: SpectrumGaps, m: int, N: int = 199) -> RatePrediction:
    """Bundle momentum and Lanczos slope predictions with both crossover estimates."""
    rho = momentum_asymptotic_rate(gaps.ratio)
    return RatePrediction(
        momentum_slope=math.log(rho),
        lanczos_slope_bound=lanczos_rate_upper(m, gaps.eps_L),
        m_cr_approx=m_cr_approx(gaps.eps, gaps.eps_L),
        m_cr_solved=m_cr_solve(gaps.eps, gaps.eps_L, N),
    )
