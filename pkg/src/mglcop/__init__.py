"""Multivariate generalized log-Moyal-gamma (MGL) copulas.

Distribution and copula evaluation, simulation, covariate-driven copula
regression and tail diagnostics for heavy-tailed multivariate data.
"""

__version__ = "0.1.0"

from .copula import (h_forward, h_inverse, kendall_tau, mgb2_pdf, mgl_copula_cdf,
                     mgl_copula_pdf, sample_mgl_copula, spearman_rho, surv_h_forward,
                     surv_mgl_cdf, surv_mgl_pdf, t_fn, tail_dependence)
from .errors import (DimensionError, DomainError, MomentUndefinedError, NonConvergenceError,
                     NonFiniteError, QuadratureError)
from .evcopula import ev_cdf, ev_h, ev_lower_copula, ev_pdf, pickands_A, sample_ev, stable_tail_l
from .families import CopulaFamily, CopulaSpec
from .glmga import GlmgaParams, glmga_cdf, glmga_fit, glmga_pdf, glmga_quantile, glmga_sample
from .margins import PseudoSample, SplicedMargin, kernel_pseudo_obs, rank_pseudo_obs, spliced_fit
from .mgl import MglParams, mgl_pdf, mgl_sample
from .regression import RegressionFit, fit_copula_reg, ifm_fit, mixed_loglik, ns_basis

__all__ = [
    "__version__",
    "CopulaFamily", "CopulaSpec", "GlmgaParams", "MglParams", "PseudoSample",
    "RegressionFit", "SplicedMargin",
    "DimensionError", "DomainError", "MomentUndefinedError", "NonConvergenceError",
    "NonFiniteError", "QuadratureError",
    "ev_cdf", "ev_h", "ev_lower_copula", "ev_pdf", "fit_copula_reg", "glmga_cdf",
    "glmga_fit", "glmga_pdf", "glmga_quantile", "glmga_sample", "h_forward", "h_inverse",
    "ifm_fit", "kendall_tau", "kernel_pseudo_obs", "mgb2_pdf", "mgl_copula_cdf",
    "mgl_copula_pdf", "mgl_pdf", "mgl_sample", "mixed_loglik", "ns_basis", "pickands_A",
    "rank_pseudo_obs", "sample_ev", "sample_mgl_copula", "spearman_rho", "spliced_fit",
    "stable_tail_l", "surv_h_forward", "surv_mgl_cdf", "surv_mgl_pdf", "t_fn",
    "tail_dependence",
]
