"""
Smoothing, filtering and forecasting log-volatility
===================================================

The posterior mode of the latent field serves as the volatility estimate.
Using all data gives the smoothed path; using data up to t gives the
filtered value at t.  Forecasts are Gaussian conditional means.
"""

import numpy as np

from mrwvol import MrwParams, SvParams
from mrwvol.inference import filter_sequence, forecast_curve, smooth
from mrwvol.simulate import sample_mrw, sample_sv

params = MrwParams(lam=0.33, sigma=0.01, R=512)
sim = sample_mrw(params, 1000, seed=7)

sm = smooth(params, sim.x)
fl = filter_sequence(params, sim.x[:300], start=50)
print("correlation of smoothed with true h:", round(np.corrcoef(sm.values, sim.h)[0, 1], 3))
print("correlation of filtered with true h:",
      round(np.corrcoef(fl, sim.h[49:300])[0, 1], 3))
print("volatility multiplier exp(h/2), last 5 days:", np.round(sm.volatility[-5:], 4))

# MRW forecasts weight the whole history, so the curve over horizons can
# wiggle.  SV forecasts decay geometrically towards zero.
curve = forecast_curve(params, sim.x, 100, smoothed=sm.values)
d = np.diff(curve.values)
print("MRW forecast N=1,10,100:", np.round(curve.values[[0, 9, 99]], 3),
      "monotone:", bool(np.all(d <= 0) or np.all(d >= 0)))

sv = SvParams(psi=0.98, sigma_u=0.2, sigma=0.01)
xs = sample_sv(sv, 1000, seed=7).x
c = forecast_curve(sv, xs, 100)
print("SV ratio of successive forecasts:", np.unique(np.round(c.values[1:] / c.values[:-1], 12)))
