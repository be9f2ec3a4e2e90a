"""
Toeplitz linear algebra for stationary covariances
==================================================

Stationary Gaussian fields have Toeplitz covariance matrices.  The
Durbin-Levinson recursion yields all one-step prediction coefficients in
O(T^2), and Trench's algorithm gives the full inverse at the same cost.
"""

import numpy as np
from scipy import linalg

from mrwvol.toeplitz import (durbin_levinson, forecast_coefficients, mrw_autocov,
                             toeplitz_inverse, toeplitz_solve)

gamma = mrw_autocov(lam=0.33, R=512, K=400)
print("gamma(0..4):", np.round(gamma[:5], 4), " gamma(400):", round(gamma[400], 4))

T = 300
G = linalg.toeplitz(gamma[:T])
sol = durbin_levinson(gamma, T)
print("innovation variance after 1, 10, 300 steps:",
      np.round([sol.innovation_variances[k] for k in (1, 10, 300)], 5))

b = np.random.default_rng(0).normal(size=T)
print("Levinson solve error:", np.abs(toeplitz_solve(gamma, b) - np.linalg.solve(G, b)).max())
print("Trench inverse error:", np.abs(toeplitz_inverse(gamma, T) - np.linalg.inv(G)).max())

# Coefficients of the best linear predictor of h_{T+N} from the last T values.
phi, var = forecast_coefficients(gamma, 200, 50)
print(f"N=50 predictor: weight on latest value {phi[0]:.4f}, error variance {var:.4f}")
