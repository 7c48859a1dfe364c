import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from specmom.exceptions import NotDiagonalError, SpectralTieError
from specmom.matrix import SparseMatrix, make_diag_descending, make_diag_indefinite
from specmom.rates import (heavy_ball_poly, lanczos_rate_upper, log_cheb_T,
                           momentum_asymptotic_rate)
from specmom.solvers import (SOLVERS, LanczosCycle, SolverConfig, Status,
                             TridiagonalMatrix, _DynamicBeta, dynamic_momentum_solve,
                             lanczos_cycle, mp_lanczos_solve, power_solve,
                             pp_lanczos_solve, restarted_lanczos_solve, solve,
                             static_momentum_solve, tridiag_eig)


def fitted_slope(outcome, skip=0):
    k, r = outcome.history()
    keep = k >= skip
    return np.polyfit(k[keep], np.log10(r[keep]), 1)[0]


def random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    return SparseMatrix.from_scipy(M + M.T), rng


@pytest.fixture(scope="module")
def diag1024():
    return make_diag_descending(1024)


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("kw", [dict(tol=0), dict(residual_mode="other"), dict(max_matvecs=0),
                                dict(m=1), dict(beta=-1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(make_diag_descending(4), "nope", SolverConfig())


def test_zero_start_vector():
    with pytest.raises(ValueError):
        power_solve(make_diag_descending(4), np.zeros(4), SolverConfig())


def test_record_modes_needs_diagonal():
    A, _ = random_symmetric(5, 0)
    with pytest.raises(NotDiagonalError):
        power_solve(A, np.ones(5), SolverConfig(record_modes=True))


# ---------------------------------------------------------------- power

def test_power_on_eigenvector():
    A = SparseMatrix.from_diagonal([2.0, 1.0])
    out = power_solve(A, np.array([1.0, 0.0]), SolverConfig())
    assert out.converged and out.nu1 == 2.0
    assert len(out.residuals) == 1


def test_power_component_ratio_halves():
    A = SparseMatrix.from_diagonal([2.0, 1.0])
    out = power_solve(A, np.array([1.0, 1.0]), SolverConfig(max_matvecs=30, record_modes=True))
    ratios = [c[1] / c[0] for _, c in out.modes]
    for a, b in zip(ratios, ratios[1:]):
        assert b / a == pytest.approx(0.5, rel=1e-12)


def test_power_slope(diag1024):
    out = power_solve(diag1024, np.ones(1024), SolverConfig(max_matvecs=4000))
    assert out.status == Status.MAX_MATVECS
    assert fitted_slope(out, skip=2000) == pytest.approx(math.log10(1023 / 1024), rel=0.02)


def test_outcome_invariants(diag1024):
    for method, kw in [("power", {}), ("momentum-dynamic", {}), ("lanczos", {"m": 16}),
                       ("mp-lanczos", {"m": 16}), ("pp-lanczos", {"m": 16})]:
        cfg = SolverConfig(max_matvecs=5000, **kw)
        out = solve(diag1024, method, cfg)
        k, r = out.history()
        assert np.all(np.diff(k) > 0)
        assert np.linalg.norm(out.x1) == pytest.approx(1.0, abs=1e-12)
        assert out.matvecs_used == k[-1]
        if out.converged:
            assert r[-1] <= cfg.tol


# ---------------------------------------------------------------- static momentum

def test_static_beta_zero_is_power(diag1024):
    cfg = SolverConfig(max_matvecs=200)
    a = power_solve(diag1024, np.ones(1024), cfg)
    b = static_momentum_solve(diag1024, np.ones(1024), SolverConfig(max_matvecs=200, beta=0.0))
    np.testing.assert_array_equal(a.x1, b.x1)
    assert a.residuals == b.residuals


def test_static_needs_beta():
    with pytest.raises(ValueError):
        static_momentum_solve(make_diag_descending(4), np.ones(4), SolverConfig())


def test_static_optimal_slope(diag1024):
    out = static_momentum_solve(diag1024, np.ones(1024), SolverConfig(beta=1023.0**2 / 4))
    assert out.converged
    ref = math.log10(momentum_asymptotic_rate(1023 / 1024))
    assert fitted_slope(out) == pytest.approx(ref, rel=0.05)


def test_static_beta_too_large_stalls(diag1024):
    out = static_momentum_solve(diag1024, np.ones(1024),
                                SolverConfig(beta=1024.0**2 / 4, max_matvecs=2000))
    assert not out.converged
    assert out.best_residual > 1e-6


@pytest.mark.parametrize("beta_kind", ["small", "optimal", "near_limit"])
def test_static_matches_polynomial_oracle(beta_kind):
    A, rng = random_symmetric(8, 11)
    lam = np.linalg.eigvalsh(A.toarray())
    by_mag = np.sort(np.abs(lam))[::-1]
    beta = {"small": 0.1, "optimal": 0.25 * by_mag[1] ** 2,
            "near_limit": 0.25 * by_mag[0] ** 2 * 0.9}[beta_kind]
    v0 = rng.standard_normal(8)
    x0 = v0 / np.linalg.norm(v0)
    for N in (1, 2, 5, 12):
        out = static_momentum_solve(A, v0, SolverConfig(beta=beta, max_matvecs=N + 1, tol=1e-300))
        ref = heavy_ball_poly(N, A.toarray(), beta, p1_scale=1.0) @ x0
        ref /= np.linalg.norm(ref)
        assert min(np.abs(out.x1 - ref).max(), np.abs(out.x1 + ref).max()) < 1e-8


def test_static_matches_augmented_power_iteration():
    A, rng = random_symmetric(8, 5)
    beta = 0.3
    n = 8
    Ab = np.block([[A.toarray(), -beta * np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    v0 = rng.standard_normal(n)
    z = np.concatenate([v0 / np.linalg.norm(v0), np.zeros(n)])
    for N in range(1, 15):
        z = Ab @ z
        out = static_momentum_solve(A, v0, SolverConfig(beta=beta, max_matvecs=N + 1, tol=1e-300))
        top = z[:n] / np.linalg.norm(z[:n])
        assert min(np.abs(out.x1 - top).max(), np.abs(out.x1 + top).max()) < 1e-8


# ---------------------------------------------------------------- dynamic momentum

def test_dynamic_beta_tracks_optimum(diag1024):
    out = dynamic_momentum_solve(diag1024, np.ones(1024), SolverConfig())
    assert out.converged
    betas = np.array(out.betas[len(out.betas) // 2:])
    assert np.all(np.abs(betas / (1023.0**2 / 4) - 1) < 0.01)
    ref = math.log10(momentum_asymptotic_rate(1023 / 1024))
    assert fitted_slope(out) == pytest.approx(ref, rel=0.05)


def test_dynamic_on_eigenvector():
    A = make_diag_descending(6)
    out = dynamic_momentum_solve(A, np.eye(6)[0], SolverConfig())
    assert out.converged and out.nu1 == 6.0
    assert out.betas == []


class _FakeRun:
    def __init__(self):
        self.diagnostics = []


def test_dynamic_ratio_clamp():
    sched = _DynamicBeta(_FakeRun())
    sched.update(0, 5.0, 1.0)
    sched.update(1, 5.0, 0.5)
    assert sched.r == 0.5
    sched.update(2, 5.0, 2.0)  # residual grew: rho clamps to 1
    assert sched.r == 1.0
    assert sched(3) == pytest.approx(25.0 / 4)


def test_dynamic_tie_warning():
    A = SparseMatrix.from_diagonal([3.0, -3.0, 1.0])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = dynamic_momentum_solve(A, np.ones(3), SolverConfig(max_matvecs=200))
    assert not out.converged
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    assert out.diagnostics


# ---------------------------------------------------------------- tridiagonal / cycle

def test_tridiag_eig_diagonal():
    w, S = tridiag_eig(TridiagonalMatrix(np.array([3.0, 1.0, 2.0]), np.zeros(2)))
    order = np.argsort(w)
    np.testing.assert_allclose(w[order], [1, 2, 3])
    np.testing.assert_allclose(np.abs(S[:, order]), np.eye(3)[:, [1, 2, 0]], atol=1e-15)


def test_tridiag_eig_two_by_two():
    w, S = tridiag_eig(TridiagonalMatrix(np.zeros(2), np.ones(1)))
    np.testing.assert_allclose(np.sort(w), [-1, 1], atol=1e-15)
    np.testing.assert_allclose(np.abs(S), np.full((2, 2), 1 / math.sqrt(2)), atol=1e-15)


def test_tridiag_eig_accuracy():
    rng = np.random.default_rng(1)
    T = TridiagonalMatrix(rng.standard_normal(200), rng.standard_normal(199))
    w, S = tridiag_eig(T)
    D = T.toarray()
    nrm = np.linalg.norm(D, 2)
    assert np.abs(D @ S - S * w).max() <= 1e-12 * nrm
    assert np.abs(S.T @ S - np.eye(200)).max() <= 1e-12


def test_cycle_exact_at_full_dimension():
    A = make_diag_descending(4)
    cyc = lanczos_cycle(A, np.ones(4), 4)
    assert isinstance(cyc, LanczosCycle)
    assert cyc.nu1 == pytest.approx(4.0, abs=1e-10)
    assert cyc.nu2 == pytest.approx(3.0, abs=1e-10)
    np.testing.assert_allclose(np.sort(tridiag_eig(cyc.T)[0]), [1, 2, 3, 4], atol=1e-10)


def test_cycle_happy_breakdown():
    A = make_diag_descending(10)
    cyc = lanczos_cycle(A, np.eye(10)[0], 5)
    assert cyc.breakdown and cyc.T.size == 1
    assert cyc.nu1 == 10.0 and cyc.residual == 0.0


@pytest.mark.parametrize("make,n", [(make_diag_descending, 1024), (make_diag_indefinite, 256)])
@pytest.mark.parametrize("m", [8, 32, 64])
def test_cycle_orthogonality_and_projection(make, n, m):
    A = make(n)
    cyc = lanczos_cycle(A, np.ones(A.n), m)
    Q = cyc.Q
    assert np.abs(Q.T @ Q - np.eye(Q.shape[1])).max() <= 1e-8
    AQ = np.column_stack([A @ Q[:, j] for j in range(Q.shape[1])])
    assert np.abs(Q.T @ AQ - cyc.T.toarray()).max() <= 1e-8 * np.abs(A.diagonal()).max()


def test_cycle_ritz_below_top_eigenvalue():
    A = make_diag_descending(300)
    x = np.ones(300)
    for _ in range(5):
        cyc = lanczos_cycle(A, x, 12)
        assert cyc.nu1 <= 300 + 1e-10 * 300
        x = cyc.x1


def test_cycle_agrees_with_scipy_eigsh_on_converged_value():
    from scipy.sparse.linalg import eigsh
    A, _ = random_symmetric(40, 2)
    ref = eigsh(sp.csr_matrix(A.toarray()), k=1, which="LM")[0][0]
    out = restarted_lanczos_solve(A, np.ones(40), SolverConfig(m=20, tol=1e-10))
    assert out.converged
    assert out.nu1 == pytest.approx(ref, rel=1e-10)


# ---------------------------------------------------------------- restarted / preconditioned

def test_restart_accounting_first_cycle():
    A = make_diag_descending(6)
    out = restarted_lanczos_solve(A, np.ones(6), SolverConfig(m=6, tol=1e-8))
    assert out.converged
    assert out.matvecs_used == 6 + 1


def test_restart_accounting_counts(diag1024):
    m = 16
    out = restarted_lanczos_solve(diag1024, np.ones(1024), SolverConfig(m=m, max_matvecs=400))
    k, _ = out.history()
    np.testing.assert_array_equal(k, m * np.arange(1, k.size + 1) + 1)


def test_mp_accounting(diag1024):
    m = 8
    out = mp_lanczos_solve(diag1024, np.ones(1024), SolverConfig(m=m, max_matvecs=100))
    k, _ = out.history()
    # cycle check at m+1, then one check per momentum step, next cycle check 2m later
    assert k[0] == m + 1
    np.testing.assert_array_equal(k[1:m + 1], np.arange(m + 2, 2 * m + 2))
    assert k[m + 1] == 3 * m + 1


class _Counting:
    def __init__(self, A):
        self.A, self.n, self.calls = A, A.n, 0
        self.is_diagonal = A.is_diagonal

    def matvec(self, x):
        self.calls += 1
        return self.A.matvec(x)


@pytest.mark.parametrize("method", sorted(SOLVERS))
def test_matvec_counter_is_honest(method):
    A = _Counting(make_diag_descending(200))
    kw = {"m": 10} if "lanczos" in method else {}
    if method == "momentum-static":
        kw["beta"] = 199.0**2 / 4
    out = solve(A, method, SolverConfig(max_matvecs=700, **kw))
    assert out.matvecs_used == A.calls


@pytest.mark.parametrize("method,kw", [("power", {}), ("momentum-dynamic", {}),
                                       ("lanczos", {"m": 20}), ("mp-lanczos", {"m": 20}),
                                       ("pp-lanczos", {"m": 20})])
@pytest.mark.parametrize("mode", ["absolute", "relative"])
def test_stopping_honesty(method, kw, mode):
    A = make_diag_descending(100)
    cfg = SolverConfig(tol=1e-10, residual_mode=mode, **kw)
    out = solve(A, method, cfg)
    assert out.converged
    res = np.linalg.norm(A @ out.x1 - out.nu1 * out.x1)
    scale = abs(out.nu1) if mode == "relative" else 1.0
    assert res <= 1.01 * cfg.tol * scale


def test_mp_first_cycle_converged_is_plain_lanczos():
    A = make_diag_descending(6)
    cfg = SolverConfig(m=6, tol=1e-8)
    a = restarted_lanczos_solve(A, np.ones(6), cfg)
    b = mp_lanczos_solve(A, np.ones(6), cfg)
    assert a.matvecs_used == b.matvecs_used and a.nu1 == b.nu1
    assert a.residuals == b.residuals


def test_mp_minimum_m():
    out = mp_lanczos_solve(make_diag_descending(50), np.ones(50), SolverConfig(m=2, tol=1e-8))
    assert out.converged and out.nu1 == pytest.approx(50.0)
    assert out.betas  # momentum stage ran


def test_mp_spectral_tie():
    # a spectrum symmetric about zero gives mirrored Ritz values +-theta
    A = SparseMatrix.from_diagonal([3.0, -3.0, 1.0, -1.0])
    with pytest.raises(SpectralTieError):
        mp_lanczos_solve(A, np.ones(4), SolverConfig(m=2))


def test_pp_identity_converges_immediately():
    A = SparseMatrix.from_scipy(sp.identity(7))
    out = pp_lanczos_solve(A, np.arange(1.0, 8.0), SolverConfig(m=4))
    assert out.converged and out.nu1 == pytest.approx(1.0)
    assert out.matvecs_used <= 2


def test_pp_not_better_than_mp(diag1024):
    cfg = SolverConfig(m=64)
    mp = mp_lanczos_solve(diag1024, np.ones(1024), cfg)
    pp = pp_lanczos_solve(diag1024, np.ones(1024), cfg)
    assert mp.converged and pp.converged
    assert pp.matvecs_used >= mp.matvecs_used


def test_pp_inner_stage_dominant_coefficient_nondecreasing():
    A = make_diag_descending(200)
    out = pp_lanczos_solve(A, np.ones(200), SolverConfig(m=8, max_matvecs=60, record_modes=True))
    k = np.array([c for c, _ in out.modes])
    top = np.array([x[0] for _, x in out.modes])
    # inner power steps are the consecutive matvec counts following each cycle check
    inner = np.diff(k) == 1
    assert np.all(top[1:][inner] >= top[:-1][inner] - 1e-15)


def test_lanczos_slower_than_dynamic_at_small_m(diag1024):
    dyn = dynamic_momentum_solve(diag1024, np.ones(1024), SolverConfig())
    lan = restarted_lanczos_solve(diag1024, np.ones(1024), SolverConfig(m=8))
    assert fitted_slope(lan) > fitted_slope(dyn)


def test_relative_breakdown_does_not_stall():
    # a start vector already near the eigenvector used to truncate every cycle to 1x1
    A = make_diag_descending(1024)
    x = np.zeros(1024)
    x[0], x[1] = 1.0, 1e-13
    out = restarted_lanczos_solve(A, x, SolverConfig(m=16, tol=1e-12, max_matvecs=500))
    assert out.converged


def test_reorthogonalize_option(diag1024):
    cfg = SolverConfig(m=32, reorthogonalize=True)
    out = restarted_lanczos_solve(diag1024, np.ones(1024), cfg)
    assert out.converged
    assert out.nu1 == pytest.approx(1024.0, rel=1e-14)


@pytest.mark.parametrize("m", [8, 16, 32])
def test_lanczos_slope_tracks_chebyshev_restart_factor(diag1024, m):
    # each restart shrinks the error by about 1 / T_{m-1}(1 + 2 eps_L) and costs m products
    eps_L = 1 / 1022
    out = restarted_lanczos_solve(diag1024, np.ones(1024), SolverConfig(m=m))
    predicted = -log_cheb_T(m - 1, 1 + 2 * eps_L) / m / math.log(10)
    assert fitted_slope(out) == pytest.approx(predicted, rel=0.10)


@pytest.mark.parametrize("m", [8, 16, 32, 64])
def test_lanczos_slope_respects_restart_bound(diag1024, m):
    out = restarted_lanczos_solve(diag1024, np.ones(1024), SolverConfig(m=m))
    assert fitted_slope(out) <= lanczos_rate_upper(m, 1 / 1022) / math.log(10)


def test_lanczos64_beats_chebyshev_prediction(diag1024):
    out = restarted_lanczos_solve(diag1024, np.ones(1024), SolverConfig(m=64))
    predicted = -log_cheb_T(63, 1 + 2 / 1022) / 64 / math.log(10)
    assert fitted_slope(out) < predicted
