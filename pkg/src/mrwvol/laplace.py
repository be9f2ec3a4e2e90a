"""Posterior mode of ``h -> log p(x, h)`` and Laplace-approximated likelihoods."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .model import (LOG_2PI, LatentPrior, _check_inputs, obs_curvature,
                    obs_gradient, obs_log_density)

logger = logging.getLogger(__name__)

MAX_ITER = 200


class ModeFindingError(RuntimeError):
    """The posterior mode search did not converge."""


class SaddlePointError(np.linalg.LinAlgError):
    """``-Omega`` is not positive definite at the returned point."""


@dataclass(frozen=True)
class ModeResult:
    h_star: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    method: str = "newton"


@dataclass(frozen=True)
class LaplaceResult:
    log_likelihood: float
    mode: ModeResult
    logdet: float          # log det(-Omega) at the mode
    log_joint: float       # log p(x, h*)


def default_tol(T):
    return 1e-8 * np.sqrt(T)


class _Objective:
    """``log p(x, h)`` with its gradient and negative Hessian for fixed data."""

    def __init__(self, model, x, prior=None):
        self.model = model
        self.x = x
        self.prior = LatentPrior(model, x.size) if prior is None else prior

    def value(self, h):
        return obs_log_density(self.model, self.x, h) + self.prior.log_density(h)

    def gradient(self, h):
        return self.prior.gradient(h) + obs_gradient(self.model, self.x, h)

    def neg_hessian(self, h):
        return self.prior.precision.add_diagonal(
            -obs_curvature(self.model, self.x, h))

    def direction(self, h, g):
        return self.neg_hessian(h).solve(g)


class _AugmentedObjective:
    """``log p(x, h) + log N(eta; a.h, V) + log N(xi; 0, s2 e^eta)`` over
    ``z = (h, eta)``.

    The negative Hessian is a banded block bordered by the dense row
    ``a``; Newton systems are reduced to the band plus a rank-one term.
    """

    def __init__(self, model, x, a, V, xi, prior=None):
        self.base = _Objective(model, x, prior)
        self.a = a
        self.V = V
        self.xi2 = xi * xi
        self.s2 = model.obs_scale2
        self.T = x.size

    def _split(self, z):
        h, eta = z[:-1], z[-1]
        return h, eta, eta - self.a @ h

    def value(self, z):
        h, eta, r = self._split(z)
        return (self.base.value(h)
                - 0.5 * (LOG_2PI + np.log(self.V)) - 0.5 * r * r / self.V
                - 0.5 * (LOG_2PI + np.log(self.s2) + eta)
                - 0.5 * self.xi2 * np.exp(-eta) / self.s2)

    def gradient(self, z):
        h, eta, r = self._split(z)
        gh = self.base.gradient(h) + self.a * (r / self.V)
        geta = -r / self.V - 0.5 + 0.5 * self.xi2 * np.exp(-eta) / self.s2
        return np.append(gh, geta)

    def _factors(self, z):
        h, eta, _ = self._split(z)
        K = self.base.neg_hessian(h)
        chol = K.cholesky()
        d = 0.5 * self.xi2 * np.exp(-eta) / self.s2
        c = 1.0 / self.V + d
        w = d / (self.V * c)
        Kinv_a = linalg.cho_solve_banded((chol, True), self.a)
        return chol, c, w, Kinv_a

    def direction(self, z, g):
        chol, c, w, Kinv_a = self._factors(z)
        gh, geta = g[:-1], g[-1]
        rhs = gh + self.a * (geta / (self.V * c))
        y = linalg.cho_solve_banded((chol, True), rhs)
        dh = y - Kinv_a * (w * (self.a @ y) / (1.0 + w * (self.a @ Kinv_a)))
        deta = (geta + self.a @ dh / self.V) / c
        return np.append(dh, deta)

    def logdet(self, z):
        chol, c, w, Kinv_a = self._factors(z)
        return (2.0 * np.sum(np.log(chol[0])) + np.log(c)
                + np.log1p(w * (self.a @ Kinv_a)))


def _newton(obj, h, tol, max_iter):
    f = obj.value(h)
    g = obj.gradient(h)
    gnorm = np.linalg.norm(g)
    it = 0
    polished = False
    while it < max_iter:
        if gnorm <= tol:
            if polished:
                break
            polished = True
        it += 1
        step = obj.direction(h, g)
        slope = g @ step
        t = 1.0
        while True:
            h_new = h + t * step
            f_new = obj.value(h_new)
            g_new = obj.gradient(h_new)
            gnorm_new = np.linalg.norm(g_new)
            if np.isfinite(f_new) and f_new >= f + 1e-4 * t * slope:
                break
            # below round-off in f, judge the step by the gradient instead
            if t * slope <= 1e-10 * (1 + abs(f)) and gnorm_new < gnorm:
                break
            t *= 0.5
            if t < 1e-12:
                return h, gnorm, it, gnorm <= tol
        if gnorm <= tol and gnorm_new >= gnorm:
            break
        h, f, g, gnorm = h_new, f_new, g_new, gnorm_new
    return h, gnorm, it, gnorm <= tol


def find_mode(model, x, init=None, tol=None, max_iter=MAX_ITER, prior=None):
    """Maximize ``log p(x, h)`` over the latent field.

    Newton iterations on the banded system with backtracking line search;
    if Newton stalls, a spectral residual (DF-SANE) root search on the
    gradient takes over from the best Newton iterate.

    Parameters
    ----------
    model : SvParams or MrwParams
    x : array_like
        Returns ``x_1..x_T``.
    init : array_like, optional
        Starting field; zeros by default.
    tol : float, optional
        Euclidean gradient-norm tolerance, default ``1e-8 * sqrt(T)``.

    Returns
    -------
    ModeResult
        Non-convergence is reported through ``converged``, not raised.
    """
    x = _check_inputs(x)
    T = x.size
    tol = default_tol(T) if tol is None else tol
    h0 = np.zeros(T) if init is None else np.array(init, dtype=float)
    if h0.shape != x.shape:
        raise ValueError("init must have the same shape as x")
    obj = _Objective(model, x, prior)
    h, gnorm, it, ok = _newton(obj, h0, tol, max_iter)
    if ok:
        return ModeResult(h, float(gnorm), it, True)
    logger.info("Newton stalled at |grad|=%.3e after %d steps; trying DF-SANE",
                gnorm, it)
    sol = optimize.root(obj.gradient, h, method="df-sane",
                        options={"fatol": tol / np.sqrt(T), "maxfev": 50 * max_iter})
    g2 = np.linalg.norm(obj.gradient(sol.x))
    if g2 < gnorm:
        return ModeResult(sol.x, float(g2), it + sol.nit, g2 <= tol, "df-sane")
    return ModeResult(h, float(gnorm), it, False)


def laplace_approximation(model, x, init=None, tol=None, prior=None):
    """Laplace approximation of ``log p(x)`` with its mode and log-determinant.

    Raises
    ------
    ModeFindingError
        If the mode search does not converge.
    SaddlePointError
        If ``-Omega`` fails its Cholesky factorization at the mode.
    """
    x = _check_inputs(x)
    obj = _Objective(model, x, prior)
    mode = find_mode(model, x, init=init, tol=tol, prior=obj.prior)
    if not mode.converged:
        raise ModeFindingError(
            f"mode search stopped at |grad|={mode.grad_norm:.3e} "
            f"after {mode.iterations} iterations")
    try:
        logdet = obj.neg_hessian(mode.h_star).logdet()
    except np.linalg.LinAlgError as exc:
        raise SaddlePointError(str(exc)) from exc
    log_joint = obj.value(mode.h_star)
    loglik = 0.5 * x.size * LOG_2PI - 0.5 * logdet + log_joint
    return LaplaceResult(float(loglik), mode, float(logdet), float(log_joint))


def laplace_log_likelihood(model, x, init=None):
    """``log p(x)`` under the Laplace approximation around the latent mode."""
    return laplace_approximation(model, x, init=init).log_likelihood


def posterior_mode_conditional(model, x, s, mode=None):
    """Mode and approximate posterior variance of ``h_s`` given all of ``x``.

    ``s`` is a 0-based index (negative values count from the end).  The
    variance is the ``s``-th diagonal element of ``(-Omega)^{-1}``.
    """
    x = _check_inputs(x)
    T = x.size
    if not -T <= s < T:
        raise IndexError(f"index {s} out of range for T={T}")
    s = s % T
    obj = _Objective(model, x)
    if mode is None:
        mode = find_mode(model, x, prior=obj.prior)
        if not mode.converged:
            raise ModeFindingError("mode search did not converge")
    e = np.zeros(T)
    e[s] = 1.0
    try:
        var = obj.neg_hessian(mode.h_star).solve(e)[s]
    except np.linalg.LinAlgError as exc:
        raise SaddlePointError(str(exc)) from exc
    return float(mode.h_star[s]), float(var)


def augmented_laplace(model, x, a, V, xi, init=None, tol=None, prior=None):
    """Laplace approximation of ``log p(x, xi)`` for one future return ``xi``.

    The latent vector is ``(h_1..h_T, eta)`` with
    ``eta | h ~ N(a @ h, V)`` and ``xi | eta ~ N(0, s2 exp(eta))``.

    Returns
    -------
    log_joint_marginal : float
    z_star : ndarray
        Augmented mode, usable as a warm start for a neighbouring ``xi``.
    """
    x = _check_inputs(x)
    T = x.size
    a = np.asarray(a, dtype=float)
    if a.shape != (T,):
        raise ValueError("coefficient vector must have length T")
    obj = _AugmentedObjective(model, x, a, float(V), float(xi), prior)
    z0 = np.zeros(T + 1) if init is None else np.array(init, dtype=float)
    tol = default_tol(T + 1) if tol is None else tol
    z, gnorm, it, ok = _newton(obj, z0, tol, MAX_ITER)
    if not ok:
        raise ModeFindingError(
            f"augmented mode search stopped at |grad|={gnorm:.3e} (xi={xi})")
    try:
        logdet = obj.logdet(z)
    except np.linalg.LinAlgError as exc:
        raise SaddlePointError(str(exc)) from exc
    return 0.5 * (T + 1) * LOG_2PI - 0.5 * logdet + obj.value(z), z
