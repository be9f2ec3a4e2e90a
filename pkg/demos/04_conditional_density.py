"""
Predictive density of the next return
=====================================

The density of x_{T+N} given the past is an integral over the latent
field.  Each grid point is handled with its own Laplace approximation,
and the curve is renormalized by the trapezoid rule.
"""

import numpy as np

from mrwvol import MrwParams
from mrwvol.inference import conditional_return_density
from mrwvol.simulate import sample_mrw

params = MrwParams(lam=0.33, sigma=0.01, R=512)
x = sample_mrw(params, 2048, seed=10).x

# Condition on the end of the busiest 20-day window and on a quiet one.
roll = np.convolve(x**2, np.ones(20) / 20, mode="valid")
busy = int(np.argmax(roll[300:])) + 320
quiet = int(np.argmin(roll[300:])) + 320

for label, end in (("busy", busy), ("quiet", quiet)):
    dc = conditional_return_density(params, x[:end], N=1)
    print(f"{label:5s} T={end}: raw integral {dc.normalization:.4f}, "
          f"std {np.sqrt(dc.variance()):.4f} vs unconditional {x.std():.4f}")

# Longer horizons forget the recent past and move back towards the
# unconditional spread.
for N in (1, 10, 100):
    dc = conditional_return_density(params, x[:busy], N=N)
    print(f"N={N:3d}: std {np.sqrt(dc.variance()):.4f}")
