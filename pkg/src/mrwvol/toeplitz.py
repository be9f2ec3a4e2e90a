"""Covariance kernels and symmetric Toeplitz linear algebra.

Everything here works on an autocovariance vector ``gamma`` with
``gamma[k] = Cov(h_0, h_k)``.  The implied matrix ``Gamma_t`` is the
``t x t`` symmetric Toeplitz matrix with first column ``gamma[:t]``.
All solvers are O(t^2) and never form ``Gamma_t`` explicitly.
"""

from dataclasses import dataclass

import numpy as np

# Relative threshold on innovation variances below which Gamma_t is
# declared numerically singular.
PD_RTOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Toeplitz recursion hits a non-positive innovation variance."""


@dataclass(frozen=True)
class ToeplitzSolution:
    """Output of the Durbin-Levinson recursion.

    Attributes
    ----------
    phi : list of ndarray
        ``phi[t]`` is the length-``t`` coefficient vector solving
        ``Gamma_t phi = gamma[1:t+1]``; ``phi[0]`` is empty.
    innovation_variances : ndarray
        ``P[t-1]`` is the one-step prediction variance of ``h_t`` given
        ``h_1..h_{t-1}``, so ``P[0] = gamma[0]``.
    """

    phi: list
    innovation_variances: np.ndarray


def mrw_autocov(lam, R, K):
    """Autocovariance of the MRW log-volatility field at lags ``0..K``.

    ``gamma[k] = lam**2 * max(log(R / (k + 1)), 0)``.  ``R`` may be any
    real number above one; lags with ``k + 1 >= R`` are exactly zero.
    """
    if not lam > 0:
        raise ValueError(f"intermittency must be positive, got {lam}")
    if not R > 1:
        raise ValueError(f"decorrelation ratio R must exceed 1, got {R}")
    if K < 0:
        raise ValueError("K must be non-negative")
    k = np.arange(int(K) + 1, dtype=float)
    out = lam**2 * np.log(R / (k + 1.0))
    out[k + 1.0 >= R] = 0.0
    return out


def ar1_autocov(psi, sigma_u, K):
    """Autocovariance ``sigma_u**2 psi**k / (1 - psi**2)`` of a stationary AR(1)."""
    if not abs(psi) < 1:
        raise ValueError("AR(1) requires |psi| < 1")
    k = np.arange(int(K) + 1)
    return sigma_u**2 * psi**k / (1.0 - psi**2)


def check_autocov(gamma):
    """Validate an autocovariance vector and return it as a float array."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size == 0:
        raise ValueError("autocovariance must be a non-empty 1-d array")
    if not np.all(np.isfinite(gamma)):
        raise ValueError("autocovariance has non-finite entries")
    if gamma[0] <= 0 and np.any(gamma != 0):
        raise ValueError("gamma[0] must be positive")
    if np.any(np.abs(gamma) > gamma[0] * (1 + 1e-12)):
        raise ValueError("|gamma[k]| exceeds gamma[0]")
    return gamma


def _check_variance(P, gamma0, t):
    if not P > PD_RTOL * gamma0:
        raise NotPositiveDefiniteError(
            f"Toeplitz matrix of order {t} is not positive definite "
            f"(innovation variance {P:.3e})")


def durbin_levinson(gamma, t_max):
    """Regression coefficients and innovation variances up to order ``t_max``.

    Parameters
    ----------
    gamma : array_like
        Autocovariances covering at least lags ``0..t_max``.
    t_max : int
        Largest order of the returned coefficient vector.

    Returns
    -------
    ToeplitzSolution
        ``phi[0..t_max]`` and ``innovation_variances`` of length ``t_max + 1``.
    """
    gamma = check_autocov(gamma)
    if gamma.size < t_max + 1:
        raise ValueError(f"need lags 0..{t_max}, got {gamma.size} values")
    P = np.empty(t_max + 1)
    P[0] = gamma[0]
    _check_variance(P[0], gamma[0], 1)
    phis = [np.zeros(0)]
    phi = np.zeros(0)
    for t in range(1, t_max + 1):
        # reflection coefficient phi_tt
        kappa = (gamma[t] - phi @ gamma[t - 1:0:-1]) / P[t - 1]
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
        phis.append(phi)
        P[t] = P[t - 1] * (1.0 - kappa * kappa)
        _check_variance(P[t], gamma[0], t + 1)
    return ToeplitzSolution(phis, P)


def toeplitz_solve(gamma, rhs):
    """Solve ``Gamma_T x = rhs`` by the Levinson recursion (O(T^2), O(T) memory)."""
    gamma = check_autocov(gamma)
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    if gamma.size < n:
        raise ValueError(f"need lags 0..{n - 1}, got {gamma.size} values")
    g0 = gamma[0]
    _check_variance(g0, g0, 1)
    r = gamma[1:n] / g0
    b = rhs / g0
    x = b[:1].copy()
    if n == 1:
        return x
    # y solves the normalized Yule-Walker system Gamma y = -r
    y = np.array([-r[0]])
    beta = 1.0
    alpha = -r[0]
    for k in range(1, n):
        beta = (1.0 - alpha * alpha) * beta
        _check_variance(beta, 1.0, k + 1)
        mu = (b[k] - r[:k] @ x[::-1]) / beta
        x = np.concatenate([x + mu * y[::-1], [mu]])
        if k < n - 1:
            alpha = (-r[k] - r[:k] @ y[::-1]) / beta
            y = np.concatenate([y + alpha * y[::-1], [alpha]])
    return x


def toeplitz_inverse(gamma, T):
    """Explicit inverse of ``Gamma_T`` by Trench's algorithm."""
    gamma = check_autocov(gamma)
    if gamma.size < T:
        raise ValueError(f"need lags 0..{T - 1}, got {gamma.size} values")
    g0 = gamma[0]
    if T == 1:
        _check_variance(g0, g0, 1)
        return np.array([[1.0 / g0]])
    sol = durbin_levinson(gamma, T - 1)
    # Yule-Walker solution of the normalized system, and the scaled border
    y = -sol.phi[T - 1]
    gam = 1.0 / (1.0 + (gamma[1:T] / g0) @ y)
    v = gam * y[::-1]
    n = T
    B = np.empty((n, n))
    B[0, 0] = gam
    B[0, 1:] = v[::-1]
    for i in range(1, (n - 1) // 2 + 1):
        j = np.arange(i, n - i)
        B[i, i:n - i] = B[i - 1, i - 1:n - i - 1] + (
            v[n - 1 - j] * v[n - 1 - i] - v[i - 1] * v[j - 1]) / gam
    # fill the rest by symmetry and persymmetry
    for i in range((n - 1) // 2 + 1):
        row = B[i, i:n - i]
        B[i:n - i, i] = row
        B[n - 1 - i, n - 1 - i:i - 1 if i else None:-1] = row
        B[n - 1 - i:i - 1 if i else None:-1, n - 1 - i] = row
    return B / g0


def forecast_coefficients(gamma, T, N):
    """Coefficients and variance of the ``N``-step linear predictor.

    Solves ``Gamma_T phi = (gamma[N], ..., gamma[N + T - 1])``.  The returned
    ``phi`` multiplies the history in reverse time order
    ``(h_T, h_{T-1}, ..., h_1)``.

    Returns
    -------
    phi : ndarray, shape (T,)
    var : float
        ``gamma[0] - rhs @ Gamma_T^{-1} @ rhs``.
    """
    if N < 1:
        raise ValueError("forecast horizon N must be >= 1")
    if T < 1:
        raise ValueError("history length T must be >= 1")
    gamma = check_autocov(gamma)
    if gamma.size < T + N:
        raise ValueError(f"need lags 0..{T + N - 1}, got {gamma.size} values")
    if N == 1:
        sol = durbin_levinson(gamma, T)
        return sol.phi[T], float(sol.innovation_variances[T])
    rhs = gamma[N:N + T]
    phi = toeplitz_solve(gamma, rhs)
    var = float(gamma[0] - rhs @ phi)
    return phi, var
