"""Parameter containers and the joint density ``log p(x, h)`` for both models.

The latent prior is written through its innovations: with ``L`` the unit
lower-triangular matrix holding minus the regression coefficients and
``P`` the innovation variances,

    log p(h) = -0.5 * sum((L h)**2 / P) - 0.5 * sum(log(2 pi P)),

so the prior precision ``Q = L^T diag(1/P) L`` is banded with the same
bandwidth as ``L`` (1 for the SV model, ``tau`` for the truncated MRW).
The gradient is ``-Q h + g(x, h)`` and the Hessian ``-Q + diag(g')``.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg, sparse

from .toeplitz import durbin_levinson, mrw_autocov

LOG_2PI = np.log(2 * np.pi)
DEFAULT_MAX_TAU = 100


@dataclass(frozen=True)
class SvParams:
    """Basic stochastic volatility model.

    ``h_t = psi h_{t-1} + sigma_u u_t`` started from its stationary law, and
    ``x_t | h_t ~ N(0, sigma**2 exp(h_t))``.
    """

    psi: float
    sigma_u: float
    sigma: float
    kind: str = field(default="sv", init=False, repr=False)

    def __post_init__(self):
        if not abs(self.psi) < 1:
            raise ValueError(f"|psi| must be < 1, got {self.psi}")
        if not self.sigma_u > 0:
            raise ValueError(f"sigma_u must be positive, got {self.sigma_u}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def obs_scale2(self):
        return self.sigma**2

    @property
    def stationary_variance(self):
        return self.sigma_u**2 / (1.0 - self.psi**2)

    def autocov(self, K):
        k = np.arange(int(K) + 1)
        return self.stationary_variance * self.psi**k

    def as_dict(self):
        return {"psi": self.psi, "sigma_u": self.sigma_u, "sigma": self.sigma}


@dataclass(frozen=True)
class MrwParams:
    """Discrete-time log-normal multifractal random walk.

    ``x_t | h_t ~ N(0, sigma**2 c exp(h_t))`` with ``h`` a centered Gaussian
    field of covariance ``lam**2 log+(R / (|t-s| + 1))`` and
    ``c = exp(-gamma(0) / 2)`` so that ``E[c exp(h_t)] = 1``.

    ``tau`` bounds the number of past lags kept in the latent conditionals;
    ``None`` means ``min(T - 1, 100)``.
    """

    lam: float
    sigma: float
    R: float
    tau: Optional[int] = None
    kind: str = field(default="mrw", init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.lam < np.sqrt(2):
            raise ValueError(f"lam must lie in (0, sqrt(2)), got {self.lam}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.R > 1:
            raise ValueError(f"R must exceed 1, got {self.R}")
        if self.tau is not None and int(self.tau) < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")

    @property
    def gamma0(self):
        return self.lam**2 * np.log(self.R)

    @property
    def c(self):
        return np.exp(-0.5 * self.gamma0)

    @property
    def obs_scale2(self):
        return self.sigma**2 * self.c

    def autocov(self, K):
        return mrw_autocov(self.lam, self.R, K)

    def truncation(self, T):
        tau = DEFAULT_MAX_TAU if self.tau is None else int(self.tau)
        return max(0, min(tau, T - 1))

    def as_dict(self):
        return {"lam": self.lam, "sigma": self.sigma, "R": self.R,
                "tau": self.tau}


class SymBandMatrix:
    """Symmetric band matrix in LAPACK lower storage.

    ``bands[d, j]`` holds ``M[j + d, j]`` for ``d = 0..bandwidth``; slots
    past the end of each diagonal are kept at zero.
    """

    def __init__(self, bands):
        bands = np.array(bands, dtype=float, ndmin=2)
        self.bands = bands
        self.bandwidth = bands.shape[0] - 1
        self.n = bands.shape[1]

    @classmethod
    def from_dense(cls, M, bandwidth):
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        bands = np.zeros((bandwidth + 1, n))
        for d in range(bandwidth + 1):
            bands[d, :n - d] = np.diagonal(M, -d)
        return cls(bands)

    def diagonal(self):
        return self.bands[0].copy()

    def todense(self):
        n = self.n
        M = np.zeros((n, n))
        for d in range(min(self.bandwidth, n - 1) + 1):
            diag = self.bands[d, :n - d]
            M += np.diag(diag, -d)
            if d:
                M += np.diag(diag, d)
        return M

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        n = self.n
        out = self.bands[0] * v
        for d in range(1, min(self.bandwidth, n - 1) + 1):
            diag = self.bands[d, :n - d]
            out[d:] += diag * v[:-d]
            out[:-d] += diag * v[d:]
        return out

    def add_diagonal(self, diag):
        bands = self.bands.copy()
        bands[0] += diag
        return SymBandMatrix(bands)

    def __neg__(self):
        return SymBandMatrix(-self.bands)

    def cholesky(self):
        """Lower banded Cholesky factor; raises ``LinAlgError`` unless SPD."""
        return linalg.cholesky_banded(self.bands, lower=True)

    def logdet(self):
        """``log det`` of a positive definite matrix via banded Cholesky."""
        return 2.0 * np.sum(np.log(self.cholesky()[0]))

    def solve(self, rhs):
        return linalg.cho_solve_banded((self.cholesky(), True), rhs)


class LatentConditional(NamedTuple):
    """Per-time regression coefficients (applied to ``h_{t-1}, h_{t-2}, ...``)
    and conditional variances of ``h_t`` given its (truncated) past."""

    coefficients: list
    variances: np.ndarray


def latent_conditional(model, T):
    """Conditional means operator and variances of ``h_t`` given its past.

    For the MRW, step ``t`` (1-based) uses ``phi^(min(t-1, tau))`` and
    ``P_min(t, tau+1)``.  For the SV model the conditionals are the AR(1)
    transitions with a stationary start.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if model.kind == "sv":
        coef = [np.zeros(0)] + [np.array([model.psi])] * (T - 1)
        var = np.full(T, model.sigma_u**2)
        var[0] = model.stationary_variance
        return LatentConditional(coef, var)
    k = model.truncation(T)
    sol = durbin_levinson(model.autocov(k), k)
    idx = np.minimum(np.arange(T), k)
    coef = [sol.phi[i] for i in idx]
    return LatentConditional(coef, sol.innovation_variances[idx])


class LatentPrior:
    """Gaussian latent prior in innovations form, precomputed for one ``T``."""

    def __init__(self, model, T):
        cond = latent_conditional(model, T)
        k = len(cond.coefficients[-1])
        self.T = T
        self.bandwidth = k
        self.variances = cond.variances
        # coefficient matrix: C[t, j-1] multiplies h_{t-j}
        C = np.zeros((T, k))
        for t, phi in enumerate(cond.coefficients[:k + 1]):
            C[t, :phi.size] = phi
        if T > k + 1:
            C[k + 1:] = cond.coefficients[-1]
        offsets = [0] + [-j for j in range(1, k + 1)]
        diags = [np.ones(T)] + [-C[j:, j - 1] for j in range(1, k + 1)]
        self.L = sparse.diags(diags, offsets, shape=(T, T), format="csr")
        self.precision = SymBandMatrix(_innovation_precision(cond, T, k))
        self._const = -0.5 * np.sum(LOG_2PI + np.log(self.variances))

    def log_density(self, h):
        e = self.L @ h
        return self._const - 0.5 * np.sum(e * e / self.variances)

    def gradient(self, h):
        return -self.precision.matvec(h)


def _innovation_precision(cond, T, k):
    """Bands of ``L^T diag(1/P) L`` in O(T k) using stationarity past row k."""
    bands = np.zeros((k + 1, T))
    nt = min(k + 1, T)
    # transient rows 0..nt-1 touch only the leading nt x nt block
    Lt = np.eye(nt)
    for t in range(1, nt):
        phi = cond.coefficients[t]
        Lt[t, t - 1::-1][:phi.size] = -phi
    Qt = Lt.T @ (Lt / cond.variances[:nt, None])
    for d in range(nt):
        bands[d, :nt - d] += np.diagonal(Qt, -d)
    if T <= nt:
        return bands
    # stationary rows t = k+1..T-1 share w and P_inf
    w = np.concatenate([[1.0], -cond.coefficients[-1]])
    p_inf = cond.variances[-1]
    b = np.arange(T)
    for d in range(k + 1):
        a = w[:k + 1 - d] * w[d:] / p_inf
        csum = np.concatenate([[0.0], np.cumsum(a)])
        lo = np.maximum(0, k + 1 - b - d)
        hi = np.minimum(k - d, T - 1 - b - d)
        ok = hi >= lo
        bands[d, ok] += csum[hi[ok] + 1] - csum[lo[ok]]
    return bands


def _check_inputs(x, h=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("returns must be a non-empty 1-d array")
    if h is None:
        return x
    h = np.asarray(h, dtype=float)
    if h.shape != x.shape:
        raise ValueError(f"latent field shape {h.shape} != returns shape {x.shape}")
    return x, h


def obs_log_density(model, x, h):
    """``sum_t log N(x_t; 0, s2 exp(h_t))`` with ``s2`` the model's obs scale."""
    x, h = _check_inputs(x, h)
    s2 = model.obs_scale2
    return float(np.sum(-0.5 * (LOG_2PI + np.log(s2) + h)
                        - 0.5 * x * x * np.exp(-h) / s2))


def obs_gradient(model, x, h):
    """Derivative of each observation term in ``h_i``: ``-1/2 + x^2 e^-h / (2 s2)``."""
    return -0.5 + 0.5 * x * x * np.exp(-h) / model.obs_scale2


def obs_curvature(model, x, h):
    """Second derivative of each observation term in ``h_i``."""
    return -0.5 * x * x * np.exp(-h) / model.obs_scale2


def prior_log_density(model, h):
    h = np.asarray(h, dtype=float)
    return float(LatentPrior(model, h.size).log_density(h))


def joint_log_density(model, x, h):
    """``log p(x, h)`` for an :class:`SvParams` or :class:`MrwParams` model."""
    x, h = _check_inputs(x, h)
    return obs_log_density(model, x, h) + prior_log_density(model, h)


def linear_part(model, T):
    """Constant and linear parts ``(b, A)`` of the gradient ``b + A h + g``."""
    return np.zeros(T), -LatentPrior(model, T).precision


def gradient(model, x, h):
    """Analytic gradient of ``log p(x, h)`` with respect to ``h``."""
    x, h = _check_inputs(x, h)
    return LatentPrior(model, x.size).gradient(h) + obs_gradient(model, x, h)


def hessian(model, x, h):
    """Banded Hessian ``Omega`` of ``log p(x, h)`` with respect to ``h``."""
    x, h = _check_inputs(x, h)
    A = -LatentPrior(model, x.size).precision
    return A.add_diagonal(obs_curvature(model, x, h))
