import math

import numpy as np
import pytest

from hrlopt.kernel import (
    ChainState,
    DivergenceError,
    HrlaParams,
    Mode,
    _bracket,
    build_kernel,
    step,
)
from hrlopt.potentials import quadratic, rastrigin
from hrlopt.samplers import params_for_inverse_temperature

# Covariance scalars for alpha=1, h=0.01, sigma_y^2=0.1, sigma_x^2=0.25,
# evaluated from the closed forms at 50 decimal digits (mpmath) and frozen.
ORACLE_COV_XX = 0.005000066168991691207481
ORACLE_COV_YY = 0.001980132669324469777919
ORACLE_COV_XY = 9.900580841919507300215e-06


def sweep_params():
    out = []
    for alpha in (0.1, 1.0, 10.0):
        for h in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1):
            for sx2, sy2 in ((0.25, 0.1), (1.0, 1.0), (0.01, 2.0)):
                a = 1.0 / sx2
                b = alpha / sy2
                out.append(HrlaParams(alpha=alpha, beta=1.0, gamma=a / b, a=a,
                                      b=b, sigma_x2=sx2, sigma_y2=sy2, h=h))
    return out


class TestParamsValidation:
    def test_full_mode_requires_couplings(self):
        with pytest.raises(ValueError, match="beta / sigma_x"):
            HrlaParams(alpha=1, beta=1, gamma=0.4, a=5.0, b=10.0,
                       sigma_x2=0.25, sigma_y2=0.1, h=0.01)

    def test_full_mode_requires_positive(self):
        with pytest.raises(ValueError, match="strictly positive"):
            HrlaParams(alpha=1, beta=1, gamma=0.0, a=4.0, b=10.0,
                       sigma_x2=0.25, sigma_y2=0.1, h=0.01)

    def test_underdamped_constraints(self):
        p = HrlaParams(alpha=1.0, beta=0.0, gamma=0.4, a=4.0, b=10.0,
                       sigma_x2=0.0, sigma_y2=0.1, h=0.01, mode=Mode.UNDERDAMPED)
        assert p.gamma == 0.4
        with pytest.raises(ValueError, match="beta = sigma_x"):
            HrlaParams(alpha=1.0, beta=1.0, gamma=0.4, a=4.0, b=10.0,
                       sigma_x2=0.0, sigma_y2=0.1, h=0.01, mode=Mode.UNDERDAMPED)

    def test_overdamped_constraints(self):
        p = HrlaParams(alpha=1.0, beta=1.0, gamma=0.0, a=4.0, b=0.0,
                       sigma_x2=0.25, sigma_y2=0.0, h=0.01, mode=Mode.OVERDAMPED)
        assert p.sigma_y2 == 0.0
        with pytest.raises(ValueError, match="gamma = sigma_y"):
            HrlaParams(alpha=1.0, beta=1.0, gamma=0.1, a=4.0, b=0.0,
                       sigma_x2=0.25, sigma_y2=0.0, h=0.01, mode=Mode.OVERDAMPED)

    def test_deterministic_mode(self):
        p = HrlaParams(alpha=1.0, beta=1.0, gamma=0.4, a=0.0, b=0.0,
                       sigma_x2=0.0, sigma_y2=0.0, h=0.01, mode=Mode.DETERMINISTIC)
        k = build_kernel(p)
        assert k.cov_xx == k.cov_yy == k.cov_xy == 0.0
        with pytest.raises(ValueError, match="zero noise"):
            HrlaParams(alpha=1.0, beta=1.0, gamma=0.4, a=0.0, b=0.0,
                       sigma_x2=0.1, sigma_y2=0.0, h=0.01, mode=Mode.DETERMINISTIC)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError, match="step size"):
            params_for_inverse_temperature(4.0, 0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            HrlaParams(alpha=math.inf, beta=1, gamma=0.4, a=4.0, b=10.0,
                       sigma_x2=0.25, sigma_y2=0.1, h=0.01)


class TestChainState:
    def test_requires_matching_shapes(self):
        with pytest.raises(ValueError, match="equal shape"):
            ChainState(x=np.zeros(3), y=np.zeros(4))

    def test_requires_finite(self):
        with pytest.raises(ValueError, match="finite"):
            ChainState(x=np.array([np.nan]), y=np.zeros(1))


class TestBuildKernel:
    def test_oracle_values(self):
        k = build_kernel(params_for_inverse_temperature(4.0, 0.01))
        assert k.cov_xx == pytest.approx(ORACLE_COV_XX, rel=1e-14)
        assert k.cov_yy == pytest.approx(ORACLE_COV_YY, rel=1e-14)
        assert k.cov_xy == pytest.approx(ORACLE_COV_XY, rel=1e-14)

    def test_overdamped_covariance(self):
        p = HrlaParams(alpha=1.0, beta=1.0, gamma=0.0, a=4.0, b=0.0,
                       sigma_x2=0.25, sigma_y2=0.0, h=0.01, mode=Mode.OVERDAMPED)
        k = build_kernel(p)
        assert k.cov_xx == pytest.approx(5e-3, rel=1e-15)
        assert k.cov_yy == 0.0 and k.cov_xy == 0.0
        assert k.chol_yx == 0.0 and k.chol_yy == 0.0

    def test_overdamped_alpha_zero(self):
        p = HrlaParams(alpha=0.0, beta=1.0, gamma=0.0, a=4.0, b=0.0,
                       sigma_x2=0.25, sigma_y2=0.0, h=0.01, mode=Mode.OVERDAMPED)
        k = build_kernel(p)
        assert k.exp_decay == 1.0
        assert k.vel_weight == 0.01
        assert k.cov_xx == pytest.approx(5e-3, rel=1e-15)

    def test_remainder_is_fourth_order(self):
        # The small-h remainder cov_xx - 2 sx2 h - (2/3) sy2 h^3 scales as h^4:
        # its absolute value drops 10^4 per decade, its value relative to
        # cov_xx (which is Theta(h)) drops 10^3 per decade.
        sx2, sy2 = 0.25, 0.1
        rel = []
        absolute = []
        for h in (1e-2, 1e-3, 1e-4):
            p = HrlaParams(alpha=1.0, beta=1.0, gamma=0.4, a=4.0, b=10.0,
                           sigma_x2=sx2, sigma_y2=sy2, h=h)
            k = build_kernel(p)
            r = abs(k.cov_xx - 2 * sx2 * h - (2.0 / 3.0) * sy2 * h**3)
            absolute.append(r)
            rel.append(r / k.cov_xx)
        for a0, a1 in zip(absolute, absolute[1:]):
            assert 8_000 < a0 / a1 < 12_500
        for r0, r1 in zip(rel, rel[1:]):
            assert 800 < r0 / r1 < 1_250

    def test_covariance_psd_and_cholesky_identities(self):
        for p in sweep_params():
            k = build_kernel(p)
            assert k.cov_xx >= 0.0 and k.cov_yy >= 0.0
            assert k.cov_xx * k.cov_yy - k.cov_xy**2 >= -1e-18
            assert k.chol_xx**2 == pytest.approx(k.cov_xx, rel=1e-12)
            assert k.chol_xx * k.chol_yx == pytest.approx(k.cov_xy, rel=1e-12)
            assert k.chol_yx**2 + k.chol_yy**2 == pytest.approx(k.cov_yy, rel=1e-12)

    def test_small_h_taylor_bounds(self):
        for p in sweep_params():
            z = p.alpha * p.h
            if z > 0.5:
                continue
            k = build_kernel(p)
            sy2, h, alpha = p.sigma_y2, p.h, p.alpha
            assert abs(k.cov_yy - 2 * sy2 * h) <= 2 * sy2 * alpha * h**2
            assert abs(k.cov_xy - sy2 * h**2) <= 2 * sy2 * alpha * h**3
            # leading coefficient of the h^4 remainder, fitted and frozen;
            # the ulp term covers round-off where the true remainder sits
            # below the float resolution of cov_xx
            bound = 0.5 * sy2 * alpha * h**4 + 4 * np.finfo(float).eps * k.cov_xx
            remainder = abs(k.cov_xx - 2 * p.sigma_x2 * h - (2.0 / 3.0) * sy2 * h**3)
            assert remainder <= bound * (1 + 1e-9)

    def test_bracket_crossover_continuity(self):
        eps = 1e-12
        below = _bracket(1e-3 * (1 - eps))   # series branch
        above = _bracket(1e-3 * (1 + eps))   # expm1 branch
        assert abs(above - below) / above <= 1e-10

    def test_bracket_against_high_precision(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        for z in (1e-6, 1e-4, 9.99e-4, 1.01e-3, 0.01, 0.3, 0.999, 1.0, 2.5, 10.0):
            exact = 2 * mp.mpf(z) - mp.e**(-2 * mp.mpf(z)) + 4 * mp.e**(-mp.mpf(z)) - 3
            assert _bracket(z) == pytest.approx(float(exact), rel=1e-11)

    def test_non_finite_coefficient_rejected(self):
        # cov_yy = sigma_y^2 (1 - e^{-2 alpha h}) / alpha overflows to inf
        alpha, sy2 = 1e-5, 1e308
        b = alpha / sy2
        p = HrlaParams(alpha=alpha, beta=0.0, gamma=1e-300 / b, a=1e-300, b=b,
                       sigma_x2=0.0, sigma_y2=sy2, h=1.0, mode=Mode.UNDERDAMPED)
        with pytest.raises(ArithmeticError):
            build_kernel(p)


class TestStep:
    def test_pure_noise_step(self):
        # At a drift stationary point (g = 0, y = 0) the move is noise only.
        pot = rastrigin(4)
        params = params_for_inverse_temperature(4.0, 0.01)
        kernel = build_kernel(params)
        state = ChainState(x=np.zeros(4), y=np.zeros(4))
        draws = np.random.default_rng(11).standard_normal(8)
        out = step(kernel, params, pot, state, np.random.default_rng(11))
        xi, eta = draws[:4], draws[4:]
        assert np.array_equal(out.x, kernel.chol_xx * xi)
        assert np.array_equal(out.y, kernel.chol_yx * xi + kernel.chol_yy * eta)

    def test_deterministic_step_bitwise(self):
        pot = rastrigin(5)
        params = params_for_inverse_temperature(2.0, 0.05)
        kernel = build_kernel(params)
        state = ChainState(x=np.linspace(-1, 2, 5), y=np.linspace(0.5, -0.5, 5))
        a = step(kernel, params, pot, state, np.random.default_rng(3))
        b = step(kernel, params, pot, state, np.random.default_rng(3))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)

    def test_single_gradient_evaluation(self):
        pot = rastrigin(3)
        calls = []
        counted = pot.__class__(
            name="counted", dim=3, value_fn=pot.value_fn,
            grad_fn=lambda x: calls.append(1) or pot.grad_fn(x),
            minimum_value=0.0)
        params = params_for_inverse_temperature(4.0, 0.01)
        kernel = build_kernel(params)
        step(kernel, params, counted, ChainState(x=np.ones(3), y=np.zeros(3)),
             np.random.default_rng(0))
        assert len(calls) == 1

    def test_one_step_moments_match_linear_map(self):
        # One-step law from a fixed state under grad U(x) = x is Gaussian with
        # mean M (x, y) and the kernel covariance; compare against 10^6
        # vectorized one-step draws at 4 standard errors.
        from hrlopt.engine import _advance_block_py, coefficient_table

        pot = quadratic(1)
        params = params_for_inverse_temperature(4.0, 0.01)
        kernel = build_kernel(params)
        table = coefficient_table(params, 1)
        n = 1_000_000
        x0, y0 = 0.7, -0.3
        x = np.full((n, 1), x0)
        y = np.full((n, 1), y0)
        noise = np.random.default_rng(8).standard_normal((n, 1, 2, 1))
        u = np.empty((n, 1))
        x, y = _advance_block_py(pot, table, 0, x, y, noise, u,
                                 np.full(n, np.inf), np.zeros((n, 1)))
        mean_x = x0 - kernel.grad_x_total * x0 + kernel.vel_weight * y0
        mean_y = kernel.exp_decay * y0 - kernel.grad_y_weight * x0
        cov = np.array([[kernel.cov_xx, kernel.cov_xy],
                        [kernel.cov_xy, kernel.cov_yy]])
        sample = np.column_stack([x[:, 0], y[:, 0]])
        se_mean = np.sqrt(np.diag(cov) / n)
        assert abs(sample[:, 0].mean() - mean_x) <= 4 * se_mean[0]
        assert abs(sample[:, 1].mean() - mean_y) <= 4 * se_mean[1]
        emp_cov = np.cov(sample.T)
        for i in range(2):
            for j in range(2):
                se = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j]**2) / n)
                assert abs(emp_cov[i, j] - cov[i, j]) <= 4 * se

    def test_zero_noise_descent_on_quadratic(self):
        from hrlopt.samplers import InitialDistribution, run_chain

        pot = quadratic(3)
        params = HrlaParams(alpha=1.0, beta=1.0, gamma=0.4, a=0.0, b=0.0,
                            sigma_x2=0.0, sigma_y2=0.0, h=0.01,
                            mode=Mode.DETERMINISTIC)
        trace = run_chain(params, pot, InitialDistribution.dirac(2.0), 100,
                          np.random.default_rng(0))
        assert np.all(np.diff(trace.energies) <= 0)

    def test_divergence_detected(self):
        pot = quadratic(1, curvature=1e8)
        params = params_for_inverse_temperature(4.0, 10.0)
        kernel = build_kernel(params)
        state = ChainState(x=np.array([1.0]), y=np.array([0.0]))
        with pytest.raises(DivergenceError):
            for _ in range(200):
                state = step(kernel, params, pot, state, np.random.default_rng(0))
