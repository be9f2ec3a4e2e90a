"""Synthetic returns for both models, and multifractal diagnostics."""

from dataclasses import dataclass
from typing import Union

import numba
import numpy as np
from scipy import linalg

from .model import MrwParams, SvParams

DENSE_MAX_T = 2**10


@dataclass(frozen=True)
class SimulationOutput:
    x: np.ndarray
    h: np.ndarray
    seed: int
    params: Union[SvParams, MrwParams]


@dataclass(frozen=True)
class ScalingEstimate:
    """Log-log regression of structure functions on scale.

    ``zeta_hat[i]`` is the slope for ``q_values[i]``, ``stderr`` its
    regression standard error and ``r2`` the coefficient of determination.
    """

    q_values: np.ndarray
    zeta_hat: np.ndarray
    stderr: np.ndarray
    r2: np.ndarray
    scales: np.ndarray
    moments: np.ndarray
    fit_range: tuple


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    acf: np.ndarray             # centered autocorrelation of |x|
    product_moment: np.ndarray  # mean of |x_t x_{t+s}|
    slope: float
    intercept: float
    fit_range: tuple
    reliable: bool


def make_rng(seed):
    """Counter-based generator; every sampler draws from one of these."""
    return np.random.Generator(np.random.Philox(seed))


@numba.njit(cache=True)
def _levinson_stream(gamma, z):
    """Exact Gaussian sampling through one-step predictions, O(T^2)."""
    T = z.size
    h = np.empty(T)
    phi = np.zeros(T)
    tmp = np.zeros(T)
    P = gamma[0]
    h[0] = np.sqrt(P) * z[0]
    for t in range(1, T):
        acc = gamma[t]
        for j in range(1, t):
            acc -= phi[j] * gamma[t - j]
        kappa = acc / P
        for j in range(1, t):
            tmp[j] = phi[j] - kappa * phi[t - j]
        for j in range(1, t):
            phi[j] = tmp[j]
        phi[t] = kappa
        P *= 1.0 - kappa * kappa
        if P <= 1e-12 * gamma[0]:
            return h, t
        mean = 0.0
        for j in range(1, t + 1):
            mean += phi[j] * h[t - j]
        h[t] = mean + np.sqrt(P) * z[t]
    return h, -1


def gaussian_field(gamma, z, method="auto"):
    """Centered stationary Gaussian vector with autocovariance ``gamma`` from
    standard normals ``z``.

    ``method`` is ``"cholesky"`` (dense), ``"levinson"`` (streaming
    innovations) or ``"auto"``: dense up to 1024 points.
    """
    T = z.size
    gamma = np.asarray(gamma[:T], dtype=float)
    if method == "auto":
        method = "cholesky" if T <= DENSE_MAX_T else "levinson"
    if method == "cholesky":
        G = linalg.toeplitz(gamma)
        try:
            Lc = linalg.cholesky(G, lower=True)
        except linalg.LinAlgError:
            G[np.diag_indices(T)] += 1e-12 * gamma[0]
            Lc = linalg.cholesky(G, lower=True)
        return Lc @ z
    if method == "levinson":
        h, bad = _levinson_stream(gamma, np.asarray(z, dtype=float))
        if bad >= 0:
            raise np.linalg.LinAlgError(
                f"covariance not positive definite at order {bad + 1}")
        return h
    raise ValueError(f"unknown method {method!r}")


def sample_mrw(params, T, seed, method="auto"):
    """Draw ``(x, h)`` from the MRW with the exact, untruncated field."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = make_rng(seed)
    z = rng.standard_normal(T)
    eps = rng.standard_normal(T)
    h = gaussian_field(params.autocov(T - 1), z, method)
    x = np.sqrt(params.obs_scale2 * np.exp(h)) * eps
    return SimulationOutput(x, h, seed, params)


def sample_sv(params, T, seed):
    """Draw ``(x, h)`` from the basic SV model with stationary start."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = make_rng(seed)
    u = rng.standard_normal(T)
    eps = rng.standard_normal(T)
    h = np.empty(T)
    h[0] = np.sqrt(params.stationary_variance) * u[0]
    for t in range(1, T):
        h[t] = params.psi * h[t - 1] + params.sigma_u * u[t]
    x = params.sigma * np.exp(0.5 * h) * eps
    return SimulationOutput(x, h, seed, params)


def _linfit(u, v):
    A = np.vstack([u, np.ones_like(u)]).T
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - A @ coef
    n = u.size
    sxx = np.sum((u - u.mean())**2)
    s2 = resid @ resid / max(n - 2, 1)
    stderr = np.sqrt(s2 / sxx) if sxx > 0 else np.inf
    sst = np.sum((v - v.mean())**2)
    r2 = 1.0 - resid @ resid / sst if sst > 0 else 1.0
    return coef[0], coef[1], stderr, r2


def structure_functions(x, q_values=(1, 2, 3, 4), scales=None, n_scales=20):
    """Scaling exponents of the cumulative walk ``X = cumsum(x)``.

    Moments ``mean |X(t+s) - X(t)|**q`` use all overlapping increments.

    Parameters
    ----------
    x : array_like
        Returns.
    q_values : sequence of float
        Moment orders in ``[0, 4]`` by default range; ``q = 0`` gives 0.
    scales : sequence of int, optional
        Lags ``s``; default ``n_scales`` log-spaced integers in ``[1, T/8]``.
    """
    x = np.asarray(x, dtype=float)
    T = x.size
    q = np.asarray(q_values, dtype=float)
    if np.any(q < 0):
        raise ValueError("moment orders must be non-negative")
    if scales is None:
        scales = np.unique(np.geomspace(1, max(T // 8, 1), n_scales).astype(int))
    scales = np.unique(np.asarray(scales, dtype=int))
    if scales.size < 4:
        raise ValueError("need at least 4 distinct scales")
    if scales[0] < 1 or scales[-1] >= T:
        raise ValueError("scales must lie in [1, T)")
    X = np.concatenate([[0.0], np.cumsum(x)])
    moments = np.empty((q.size, scales.size))
    for i, s in enumerate(scales):
        inc = np.abs(X[s:] - X[:-s])
        for k, qk in enumerate(q):
            moments[k, i] = np.mean(inc**qk)
    ls = np.log(scales)
    zeta = np.empty(q.size)
    se = np.empty(q.size)
    r2 = np.empty(q.size)
    for k in range(q.size):
        if q[k] == 0:
            zeta[k], se[k], r2[k] = 0.0, 0.0, 1.0
            continue
        zeta[k], _, se[k], r2[k] = _linfit(ls, np.log(moments[k]))
    return ScalingEstimate(q, zeta, se, r2, scales, moments,
                           (int(scales[0]), int(scales[-1])))


def abs_return_acf(x, max_lag, fit_range=None):
    """Dependence of absolute returns across lags ``1..max_lag``.

    Returns both the centered autocorrelation of ``|x|`` and the raw product
    moment ``mean |x_t| |x_{t+s}|``.  The power-law slope is fitted to the
    log product moment against log lag over ``fit_range`` (default
    ``(4, max_lag)``).  ``reliable`` is False when the mean autocorrelation
    over the fit range does not exceed ``3 / sqrt(T)``.
    """
    a = np.abs(np.asarray(x, dtype=float))
    T = a.size
    if not 1 <= max_lag < T / 4:
        raise ValueError("max_lag must satisfy 1 <= max_lag < T/4")
    lags = np.arange(1, max_lag + 1)
    c = a - a.mean()
    var = c @ c / T
    acf = np.array([c[:-s] @ c[s:] / T for s in lags]) / var
    prod = np.array([np.mean(a[:-s] * a[s:]) for s in lags])
    lo, hi = fit_range if fit_range is not None else (min(4, max_lag), max_lag)
    if not 1 <= lo < hi <= max_lag:
        raise ValueError("fit_range must satisfy 1 <= lo < hi <= max_lag")
    sel = (lags >= lo) & (lags <= hi)
    slope, intercept, _, _ = _linfit(np.log(lags[sel]), np.log(prod[sel]))
    reliable = bool(np.mean(acf[sel]) > 3.0 / np.sqrt(T))
    return AcfResult(lags, acf, prod, float(slope), float(intercept),
                     (int(lo), int(hi)), reliable)


def scaling_curvature(est):
    """Second differences of ``zeta_hat`` over consecutive orders in ``q``.

    Each entry is the regression slope of
    ``log(M_{q+2} M_q / M_{q+1}**2)`` on ``log s``, which equals
    ``zeta(q+2) - 2 zeta(q+1) + zeta(q)``, together with its own standard
    error.  Negative values beyond their error indicate strict concavity.
    """
    q = est.q_values
    if q.size < 3:
        raise ValueError("need at least three moment orders")
    logm = np.log(est.moments)
    ls = np.log(est.scales)
    curv = np.empty(q.size - 2)
    se = np.empty(q.size - 2)
    for k in range(q.size - 2):
        v = logm[k + 2] - 2 * logm[k + 1] + logm[k]
        curv[k], _, se[k], _ = _linfit(ls, v)
    return curv, se
