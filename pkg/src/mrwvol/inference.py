"""Maximum-likelihood fitting, latent volatility estimates and conditional
densities of future returns for the SV and MRW models."""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import optimize

from .laplace import (ModeFindingError, augmented_laplace, find_mode,
                      laplace_approximation, posterior_mode_conditional)
from .model import LatentPrior, MrwParams, SvParams, _check_inputs
from .simulate import abs_return_acf
from .toeplitz import forecast_coefficients, toeplitz_inverse

logger = logging.getLogger(__name__)

MIN_FIT_LENGTH = 20
LAM_MAX = np.sqrt(2)


@dataclass(frozen=True)
class FitResult:
    params: Union[SvParams, MrwParams]
    log_likelihood: float
    trace: list
    converged: bool
    at_boundary: bool
    n_evals: int


@dataclass(frozen=True)
class LatentEstimate:
    """Point estimate of log-volatility.

    ``kind`` is ``"smoothed"`` (one value per observation), ``"filtered"``
    (the last time point) or ``"forecast"`` (``horizon`` steps past the end).
    """

    values: np.ndarray
    kind: str
    horizon: int = 0
    variance: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("smoothed", "filtered", "forecast"):
            raise ValueError(f"unknown estimate kind {self.kind!r}")
        if self.kind == "filtered" and len(self.values) != 1:
            raise ValueError("a filtered estimate has exactly one value")
        if self.kind == "forecast" and self.horizon < 1:
            raise ValueError("forecast horizon must be >= 1")

    @property
    def volatility(self):
        """``exp(h / 2)``, the volatility multiplier."""
        return np.exp(0.5 * np.asarray(self.values))


@dataclass(frozen=True)
class ForecastCurve:
    horizons: np.ndarray
    values: np.ndarray
    variances: np.ndarray

    @property
    def volatility(self):
        return np.exp(0.5 * self.values)


@dataclass(frozen=True)
class DensityCurve:
    """Gridded density of a future return.

    ``normalization`` is the trapezoid integral of the raw Laplace ratio
    ``p(x, xi) / p(x)`` before renormalization.
    """

    grid: np.ndarray
    density: np.ndarray
    normalization: float
    horizon: int = 1
    log_joint: np.ndarray = field(default=None, repr=False)

    def mean(self):
        return float(np.trapezoid(self.grid * self.density, self.grid))

    def variance(self):
        m = self.mean()
        return float(np.trapezoid((self.grid - m)**2 * self.density, self.grid))

    def cdf(self):
        dx = np.diff(self.grid)
        steps = 0.5 * (self.density[1:] + self.density[:-1]) * dx
        return np.concatenate([[0.0], np.cumsum(steps)])


# ---------------------------------------------------------------------------
# parameter transforms

def _to_unconstrained(params):
    if params.kind == "sv":
        return np.array([np.arctanh(params.psi), np.log(params.sigma_u),
                         np.log(params.sigma)])
    u = params.lam / LAM_MAX
    return np.array([np.log(u / (1 - u)), np.log(params.sigma),
                     np.log(params.R - 1)])


def _from_unconstrained(kind, u, tau=None):
    if kind == "sv":
        return SvParams(float(np.tanh(u[0])), float(np.exp(u[1])),
                        float(np.exp(u[2])))
    lam = LAM_MAX / (1 + np.exp(-u[0]))
    return MrwParams(float(lam), float(np.exp(u[1])),
                     float(1 + np.exp(u[2])), tau)


def _at_boundary(params, T):
    if params.kind == "sv":
        return abs(params.psi) > 0.999 or params.sigma_u < 1e-6
    return (params.lam < 1e-3 or params.lam > LAM_MAX - 1e-3
            or params.R < 1 + 1e-6 or params.R > 1e3 * T)


def starting_point(kind, x, tau=None):
    """Moment-based starting parameters for :func:`fit_ml`.

    ``sigma`` from the sample standard deviation; the MRW intermittency
    from the log-log slope of the absolute-return product moment, the SV
    persistence from the exponential decay rate of the absolute-return
    autocorrelation.
    """
    x = np.asarray(x, dtype=float)
    T = x.size
    sd = float(np.std(x)) or 1.0
    max_lag = max(2, min(T // 8, 100))
    if kind == "mrw":
        try:
            slope = abs_return_acf(x, max_lag, (1, max_lag)).slope
        except ValueError:
            slope = -0.03
        lam = float(np.clip(2 * np.sqrt(max(-slope, 0.0025)), 0.1, 0.8))
        R = float(np.clip(T / 4, 16, 4096))
        return MrwParams(lam, sd, R, tau)
    if kind == "sv":
        try:
            res = abs_return_acf(x, max_lag, (1, max_lag))
            lags, acf = res.lags[:20], res.acf[:20]
            good = acf > 0
            rate = np.polyfit(lags[good], np.log(acf[good]), 1)[0] if good.sum() > 2 else -0.05
            psi = float(np.clip(np.exp(rate), 0.5, 0.995))
        except ValueError:
            psi = 0.95
        lx = np.log(x[x != 0]**2)
        gamma0 = max(np.var(lx) - np.pi**2 / 2, 0.05)
        sigma_u = float(np.sqrt(gamma0 * (1 - psi**2)))
        return SvParams(psi, sigma_u, sd)
    raise ValueError(f"unknown model kind {kind!r}")


def fit_ml(kind, x, tau=None, start=None, restarts=2, seed=0, maxiter=400,
           xatol=1e-4, fatol=1e-6):
    """Maximum-likelihood fit by Nelder-Mead on transformed parameters.

    Parameters
    ----------
    kind : {"sv", "mrw"}
    x : array_like
        At least 20 finite returns.
    tau : int, optional
        MRW truncation lag (default ``min(T - 1, 100)``).
    start : SvParams or MrwParams, optional
        Starting point; moment heuristics otherwise.
    restarts : int
        Extra Nelder-Mead runs started from perturbations of the best point.

    Returns
    -------
    FitResult
    """
    x = _check_inputs(x)
    if x.size < MIN_FIT_LENGTH:
        raise ValueError(f"need at least {MIN_FIT_LENGTH} returns, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("returns must be finite")
    if kind not in ("sv", "mrw"):
        raise ValueError(f"unknown model kind {kind!r}")
    if start is None:
        start = starting_point(kind, x, tau)
    trace = []
    warm = {"h": None}

    def negloglik(u):
        try:
            params = _from_unconstrained(kind, u, tau)
            res = laplace_approximation(params, x, init=warm["h"])
        except (ValueError, ModeFindingError, np.linalg.LinAlgError):
            trace.append({"u": u.tolist(), "log_likelihood": None})
            return 1e300
        warm["h"] = res.mode.h_star
        trace.append({"params": params.as_dict(), "log_likelihood": res.log_likelihood})
        return -res.log_likelihood

    rng = np.random.Generator(np.random.Philox(seed))
    options = {"xatol": xatol, "fatol": fatol, "maxiter": maxiter}
    best = optimize.minimize(negloglik, _to_unconstrained(start),
                             method="Nelder-Mead", options=options)
    converged = bool(best.success)
    for _ in range(restarts):
        u0 = best.x + rng.normal(scale=0.1, size=best.x.size)
        res = optimize.minimize(negloglik, u0, method="Nelder-Mead",
                                options=options)
        if res.fun < best.fun:
            best = res
        converged = converged and bool(res.success)
    params = _from_unconstrained(kind, best.x, tau)
    loglik = laplace_approximation(params, x).log_likelihood
    return FitResult(params, loglik, trace, converged,
                     _at_boundary(params, x.size), len(trace))


# ---------------------------------------------------------------------------
# latent estimates

def smooth(model, x, init=None):
    """Smoothed log-volatility: the joint posterior mode ``h*``."""
    mode = find_mode(model, x, init=init)
    if not mode.converged:
        raise ModeFindingError(f"mode search stopped at |grad|={mode.grad_norm:.3e}")
    return LatentEstimate(mode.h_star, "smoothed")


def filter(model, x, init=None):
    """Filtered log-volatility at the last time point, with its Laplace variance."""
    x = _check_inputs(x)
    mode = find_mode(model, x, init=init)
    if not mode.converged:
        raise ModeFindingError(f"mode search stopped at |grad|={mode.grad_norm:.3e}")
    value, var = posterior_mode_conditional(model, x, -1, mode=mode)
    return LatentEstimate(np.array([value]), "filtered", variance=np.array([var]))


def filter_sequence(model, x, start=1):
    """Filtered estimates on the growing prefixes ``x[:t]``, ``t = start..T``.

    Each prefix mode is warm-started from the previous one.
    """
    x = _check_inputs(x)
    out = np.empty(x.size - start + 1)
    prev = None
    for i, t in enumerate(range(start, x.size + 1)):
        init = None if prev is None else np.append(prev, prev[-1])
        prev = smooth(model, x[:t], init=init).values
        out[i] = prev[-1]
    return out


def _forecast_row(model, T, N):
    """Coefficients ``a`` (aligned with ``h_1..h_T``) and variance of
    ``h_{T+N} | h_{1:T}``."""
    if model.kind == "sv":
        a = np.zeros(T)
        a[-1] = model.psi**N
        var = model.sigma_u**2 * (1 - model.psi**(2 * N)) / (1 - model.psi**2)
        return a, var
    phi, var = forecast_coefficients(model.autocov(T + N - 1), T, N)
    return phi[::-1], var


def forecast_latent(model, x, N, smoothed=None):
    """``N``-step log-volatility forecast.

    SV: ``psi**N`` times the filtered value.  MRW: the reversed smoothed
    field dotted with the ``N``-step Toeplitz predictor coefficients.
    """
    if N < 1:
        raise ValueError("forecast horizon N must be >= 1")
    x = _check_inputs(x)
    h = smooth(model, x).values if smoothed is None else np.asarray(smoothed)
    a, var = _forecast_row(model, x.size, N)
    if model.kind == "sv":
        value = model.psi**N * h[-1]
    else:
        value = h[::-1] @ a[::-1]
    return LatentEstimate(np.array([value]), "forecast", N, np.array([var]))


def forecast_curve(model, x, n_max, smoothed=None):
    """Forecasts ``h_{T+N}`` for ``N = 1..n_max`` from one smoothing pass."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x = _check_inputs(x)
    T = x.size
    h = smooth(model, x).values if smoothed is None else np.asarray(smoothed)
    N = np.arange(1, n_max + 1)
    if model.kind == "sv":
        values = model.psi**N * h[-1]
        variances = (model.sigma_u**2 * (1 - model.psi**(2 * N))
                     / (1 - model.psi**2))
        return ForecastCurve(N, values, variances)
    gamma = model.autocov(T + n_max - 1)
    # columns are the right-hand sides gamma[N:N+T]
    G = np.lib.stride_tricks.sliding_window_view(gamma[1:], T)[:n_max].T
    Phi = toeplitz_inverse(gamma, T) @ G
    Phi[:, 0] = forecast_coefficients(gamma, T, 1)[0]
    values = h[::-1] @ Phi
    variances = gamma[0] - np.einsum("ij,ij->j", G, Phi)
    return ForecastCurve(N, values, variances)


# ---------------------------------------------------------------------------
# conditional densities

def default_grid(x, n_points=257, width=8.0):
    sd = float(np.std(x)) or 1.0
    return np.linspace(-width * sd, width * sd, n_points)


def conditional_return_density(model, x, N=1, grid=None, jobs=1):
    """Density of the return ``N`` steps ahead given ``x_1..x_T``.

    Each grid value ``xi`` gets its own Laplace approximation of
    ``p(x, x_{T+N} = xi)`` over ``(h_1..h_T, h_{T+N})``, divided by the
    Laplace approximation of ``p(x)``.  The density depends on ``xi`` only
    through ``xi**2``, so each distinct ``|xi|`` is solved once.  The curve is
    renormalized by the trapezoid rule; a raw integral more than 10% away
    from 1 triggers a warning.

    ``jobs > 1`` splits the grid into contiguous chunks solved in threads,
    each chunk warm-started from the base mode.
    """
    if N < 1:
        raise ValueError("forecast horizon N must be >= 1")
    x = _check_inputs(x)
    T = x.size
    grid = default_grid(x) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with >= 2 points")
    prior = LatentPrior(model, T)
    base = laplace_approximation(model, x, prior=prior)
    a, V = _forecast_row(model, T, N)
    absxi, inverse = np.unique(np.abs(grid), return_inverse=True)
    z0 = np.append(base.mode.h_star, a @ base.mode.h_star)

    def sweep(values):
        out, z = np.empty(values.size), z0
        for i, xi in enumerate(values):
            out[i], z = augmented_laplace(model, x, a, V, xi, init=z, prior=prior)
        return out

    if jobs > 1:
        chunks = np.array_split(absxi, min(jobs, absxi.size))
        with ThreadPoolExecutor(jobs) as pool:
            logj = np.concatenate(list(pool.map(sweep, chunks)))
    else:
        logj = sweep(absxi)
    log_ratio = logj[inverse] - base.log_likelihood
    raw = np.exp(log_ratio)
    norm = float(np.trapezoid(raw, grid))
    if not abs(norm - 1) <= 0.1:
        warnings.warn(f"density grid too coarse or narrow: raw integral {norm:.3f}",
                      RuntimeWarning, stacklevel=2)
    return DensityCurve(grid, raw / norm, norm, N, logj[inverse])
