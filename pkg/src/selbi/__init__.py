"""selbi: simulation-based inference for selectively observed data.

The package bundles forward simulators whose observation models include
the selection mechanisms that generated the data (biased sampling,
censoring by death, outcome-dependent study inclusion), an amortized
neural posterior estimator trained on those joint simulations, and the
diagnostics used to check that the learned posteriors are trustworthy
(simulation-based calibration, classifier two-sample tests, posterior
contraction). A likelihood-based MCMC path is included for the
household model so the two inference routes can be compared.
"""

from .randkit import GammaSpec, RngStream, gamma_cdf, gamma_from_mean_cv, gamma_pdf, sample

__version__ = "0.1.0"

__all__ = [
    "GammaSpec",
    "RngStream",
    "gamma_cdf",
    "gamma_from_mean_cv",
    "gamma_pdf",
    "sample",
    "__version__",
]
