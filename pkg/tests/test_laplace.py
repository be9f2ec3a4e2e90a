import numpy as np
import pytest
from scipy import optimize

from conftest import dense_laplace, gauss_hermite_marginal
from mrwvol.laplace import (augmented_laplace, find_mode,
                            laplace_approximation, laplace_log_likelihood,
                            posterior_mode_conditional)
from mrwvol.model import MrwParams, SvParams, gradient, hessian, joint_log_density
from mrwvol.simulate import sample_mrw, sample_sv


def scalar_newton(f1, f2, h=0.0, n=100):
    for _ in range(n):
        h -= f1(h) / f2(h)
    return h


class TestFindMode:
    def test_zero_returns_sv_dense_oracle(self):
        m = SvParams(0.5, 0.3, 1.0)
        T = 60
        mode = find_mode(m, np.zeros(T))
        assert mode.converged
        # gradient is -Q h - 1/2 with Q the AR(1) precision; solve densely
        Q = -hessian(m, np.zeros(T), np.zeros(T)).todense()
        ref = np.linalg.solve(Q, -0.5 * np.ones(T))
        np.testing.assert_allclose(mode.h_star, ref, atol=1e-10)
        # away from both ends the mode settles on -sigma_u^2 / (2 (1 - psi)^2)
        np.testing.assert_allclose(mode.h_star[25:35], -0.09 / (2 * 0.25), atol=1e-12)

    def test_scalar_problem(self):
        x, sigma, su = 0.7, 0.5, 0.8
        m = SvParams(0.0, su, sigma)
        f1 = lambda h: -0.5 + x**2 * np.exp(-h) / (2 * sigma**2) - h / su**2
        f2 = lambda h: -x**2 * np.exp(-h) / (2 * sigma**2) - 1 / su**2
        ref = scalar_newton(f1, f2)
        assert find_mode(m, [x]).h_star[0] == pytest.approx(ref, abs=1e-10)

    def test_gradient_small_at_mode(self):
        sim = sample_mrw(MrwParams(0.33, 0.01, 512), 300, 1)
        mode = find_mode(sim.params, sim.x)
        assert mode.converged
        g = gradient(sim.params, sim.x, mode.h_star)
        assert np.linalg.norm(g) <= 1e-8 * np.sqrt(300)
        # -Omega is positive definite at the mode
        (-hessian(sim.params, sim.x, mode.h_star)).cholesky()

    def test_initialization_independence(self, rng):
        sim = sample_sv(SvParams(0.95, 0.25, 0.01), 200, 3)
        ref = find_mode(sim.params, sim.x).h_star
        for _ in range(50):
            init = rng.normal(scale=3.0, size=200)
            h = find_mode(sim.params, sim.x, init=init).h_star
            np.testing.assert_allclose(h, ref, atol=1e-6)

    def test_deterministic(self):
        sim = sample_mrw(MrwParams(0.4, 1.0, 64), 100, 5)
        a = find_mode(sim.params, sim.x).h_star
        b = find_mode(sim.params, sim.x).h_star
        np.testing.assert_array_equal(a, b)

    def test_non_convergence_is_flagged(self):
        sim = sample_sv(SvParams(0.9, 0.3, 1.0), 50, 0)
        mode = find_mode(sim.params, sim.x, max_iter=1, tol=1e-30)
        assert not mode.converged


class TestLaplaceLikelihood:
    @pytest.mark.parametrize("gamma0", [0.25, 0.5, 1.0])
    def test_single_observation_against_quadrature(self, gamma0):
        # lam = 0.5 and R = exp(4 gamma0) give gamma(0) = gamma0
        m = MrwParams(0.5, 1.0, np.exp(4 * gamma0))
        assert m.gamma0 == pytest.approx(gamma0)
        exact = gauss_hermite_marginal(0.3, gamma0, m.obs_scale2)
        approx = np.exp(laplace_log_likelihood(m, [0.3]))
        # Laplace's method is not exact for one latent variable; 10% is the
        # documented tolerance
        assert abs(approx / exact - 1) <= 0.10

    def test_gaussian_limit(self, rng):
        x = rng.normal(size=200)
        m = SvParams(0.6, 1e-6, 1.0)
        exact = np.sum(-0.5 * np.log(2 * np.pi) - 0.5 * x**2)
        assert laplace_log_likelihood(m, x) == pytest.approx(exact, abs=1e-3)

    def test_banded_equals_dense_prior(self):
        T = 50
        m = MrwParams(0.33, 0.01, 512, tau=T - 1)
        x = sample_mrw(m, T, 11).x
        ref, href = dense_laplace(m.autocov(T - 1), m.obs_scale2, x)
        res = laplace_approximation(m, x)
        np.testing.assert_allclose(res.mode.h_star, href, atol=1e-8)
        assert res.log_likelihood == pytest.approx(ref, abs=1e-8)

    def test_sv_against_dense_prior(self):
        m = SvParams(0.9, 0.3, 0.02)
        x = sample_sv(m, 40, 2).x
        ref, _ = dense_laplace(m.autocov(39), m.obs_scale2, x)
        assert laplace_log_likelihood(m, x) == pytest.approx(ref, abs=1e-8)

    @pytest.mark.parametrize("kind", ["mrw", "sv"])
    def test_continuity_in_parameters(self, kind):
        if kind == "mrw":
            x = sample_mrw(MrwParams(0.33, 0.01, 512), 200, 4).x
            sweeps = {"lam": np.linspace(0.25, 0.40, 16),
                      "sigma": np.linspace(0.008, 0.012, 16),
                      "R": np.linspace(300, 700, 16)}
            base = dict(lam=0.33, sigma=0.01, R=512)
            make = lambda d: MrwParams(**d)
        else:
            x = sample_sv(SvParams(0.95, 0.2, 0.01), 200, 4).x
            sweeps = {"psi": np.linspace(0.90, 0.98, 16),
                      "sigma_u": np.linspace(0.15, 0.25, 16),
                      "sigma": np.linspace(0.008, 0.012, 16)}
            base = dict(psi=0.95, sigma_u=0.2, sigma=0.01)
            make = lambda d: SvParams(**d)
        for name, grid in sweeps.items():
            ll = np.array([laplace_log_likelihood(make({**base, name: v}), x)
                           for v in grid])
            d1 = np.diff(ll)
            d2 = np.diff(d1)
            # a smooth curve on a uniform grid has second differences much
            # smaller than the largest first difference
            assert np.max(np.abs(d2)) <= 0.5 * np.max(np.abs(d1)) + 1e-9, name


class TestPosteriorModeConditional:
    def test_consistent_with_mode(self):
        sim = sample_sv(SvParams(0.9, 0.3, 1.0), 80, 8)
        h = find_mode(sim.params, sim.x).h_star
        for s in (0, 40, 79, -1):
            val, var = posterior_mode_conditional(sim.params, sim.x, s)
            assert val == h[s]
            assert var > 0

    def test_variance_is_inverse_diagonal(self):
        sim = sample_mrw(MrwParams(0.3, 1.0, 40, tau=5), 30, 2)
        h = find_mode(sim.params, sim.x).h_star
        Hinv = np.linalg.inv(-hessian(sim.params, sim.x, h).todense())
        _, var = posterior_mode_conditional(sim.params, sim.x, 12)
        assert var == pytest.approx(Hinv[12, 12], rel=1e-10)

    def test_two_point_problem_against_dense_optimizer(self):
        m = SvParams(0.6, 0.5, 1.0)
        x = np.array([1.3, -0.2])
        res = optimize.minimize(lambda h: -joint_log_density(m, x, h), np.zeros(2),
                                method="Nelder-Mead",
                                options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 5000})
        h = find_mode(m, x).h_star
        np.testing.assert_allclose(h, res.x, atol=1e-8)
        assert posterior_mode_conditional(m, x, 1)[0] == h[1]

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            posterior_mode_conditional(SvParams(0.5, 0.2, 1), np.ones(3), 3)


class TestAugmentedLaplace:
    def test_against_dense_joint(self, rng):
        # augmented problem equals a plain Laplace problem on the longer
        # vector when the forecast row comes from the exact joint Gaussian
        T = 25
        m = MrwParams(0.4, 1.0, 60, tau=T)
        x = sample_mrw(m, T, 3).x
        xi = 0.8
        full = np.append(x, xi)
        ref, _ = dense_laplace(m.autocov(T), m.obs_scale2, full)
        from mrwvol.toeplitz import forecast_coefficients
        phi, V = forecast_coefficients(m.autocov(T), T, 1)
        val, z = augmented_laplace(m, x, phi[::-1], V, xi)
        assert val == pytest.approx(ref, abs=1e-8)
