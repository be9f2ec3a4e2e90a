"""
Maximum-likelihood fitting with the Laplace approximation
=========================================================

The marginal likelihood of a latent Gaussian volatility model has no closed
form.  Integrating out the latent field with a Laplace approximation costs
one sparse Newton solve, which is cheap enough to hand to a simplex search.
"""

from mrwvol import MrwParams, SvParams, laplace_log_likelihood
from mrwvol.inference import fit_ml
from mrwvol.simulate import sample_mrw, sample_sv

T = 2048

# An SV series: log-volatility is an AR(1) with persistence psi.
truth_sv = SvParams(psi=0.98, sigma_u=0.2, sigma=0.01)
x_sv = sample_sv(truth_sv, T, seed=3).x
print("true SV log-likelihood:", round(laplace_log_likelihood(truth_sv, x_sv), 2))

fit = fit_ml("sv", x_sv)
print("SV fit:", {k: round(v, 4) for k, v in fit.params.as_dict().items()
                  if isinstance(v, float)},
      "loglik", round(fit.log_likelihood, 2), "evaluations", fit.n_evals)

# An MRW series.  The prior precision is truncated to a band of width tau
# (100 by default), so the cost stays linear in T.
truth_mrw = MrwParams(lam=0.33, sigma=0.01, R=512)
x_mrw = sample_mrw(truth_mrw, T, seed=3).x
fit = fit_ml("mrw", x_mrw)
p = fit.params
print(f"MRW fit: lam {p.lam:.3f}, sigma {p.sigma:.4f}, R {p.R:.0f}, "
      f"loglik {fit.log_likelihood:.2f}, boundary: {fit.at_boundary}")

# The optimizer trace keeps every evaluated point.
best = max(fit.trace, key=lambda e: e["log_likelihood"])
print("best point in trace:", round(best["log_likelihood"], 2))
