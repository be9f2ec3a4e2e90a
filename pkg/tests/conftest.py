import numpy as np
import pytest
from numpy.polynomial.hermite import hermgauss
from scipy import linalg

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def dense_laplace(gamma, s2, x, tol=1e-12, max_iter=100):
    """Laplace log-likelihood with the exact dense Gaussian prior.

    Independent of the banded code path: the prior precision is a dense
    inverse of the Toeplitz covariance and the log-determinant comes from
    ``slogdet``.
    """
    T = x.size
    G = linalg.toeplitz(gamma[:T])
    Ginv = np.linalg.inv(G)
    h = np.zeros(T)
    for _ in range(max_iter):
        g = -Ginv @ h - 0.5 + 0.5 * x**2 * np.exp(-h) / s2
        H = Ginv + np.diag(0.5 * x**2 * np.exp(-h) / s2)
        step = np.linalg.solve(H, g)
        h = h + step
        if np.max(np.abs(step)) < tol:
            break
    H = Ginv + np.diag(0.5 * x**2 * np.exp(-h) / s2)
    _, logdet_G = np.linalg.slogdet(G)
    log_prior = -0.5 * (T * np.log(2 * np.pi) + logdet_G + h @ Ginv @ h)
    log_obs = np.sum(-0.5 * np.log(2 * np.pi * s2 * np.exp(h))
                     - 0.5 * x**2 * np.exp(-h) / s2)
    _, logdet_H = np.linalg.slogdet(H)
    return 0.5 * T * np.log(2 * np.pi) - 0.5 * logdet_H + log_prior + log_obs, h


def gauss_hermite_marginal(x, gamma0, s2, n=200):
    """``int N(x; 0, s2 e^h) N(h; 0, gamma0) dh`` by Gauss-Hermite quadrature."""
    t, w = hermgauss(n)
    h = np.sqrt(2 * gamma0) * t
    var = s2 * np.exp(h)
    f = np.exp(-0.5 * x**2 / var) / np.sqrt(2 * np.pi * var)
    return float(w @ f / np.sqrt(np.pi))


def central_diff_grad(f, h, eps=1e-5):
    g = np.empty_like(h)
    for i in range(h.size):
        e = np.zeros_like(h)
        e[i] = eps
        g[i] = (f(h + e) - f(h - e)) / (2 * eps)
    return g
