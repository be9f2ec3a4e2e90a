"""Likelihood-based inference for the multifractal random walk and the basic
stochastic volatility model."""

__version__ = "0.1.0"

from .model import (MrwParams, SvParams, SymBandMatrix, gradient, hessian,
                    joint_log_density, latent_conditional)
from .toeplitz import (durbin_levinson, forecast_coefficients, mrw_autocov,
                       toeplitz_inverse, toeplitz_solve)
from .laplace import (find_mode, laplace_log_likelihood,
                      posterior_mode_conditional)
from .inference import (conditional_return_density, filter, filter_sequence,
                        fit_ml, forecast_curve, forecast_latent, smooth)
from .simulate import (abs_return_acf, sample_mrw, sample_sv,
                       structure_functions)
