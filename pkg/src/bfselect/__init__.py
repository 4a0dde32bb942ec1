"""Adaptive basis function selection for fast predictions in basis-function expansions."""

from .basis import (
    BasisError,
    BoxDomain,
    HilbertBasis,
    RbfBasis,
    design_matrix,
    eval_basis,
    sq_norm_integral,
    sq_norm_integral_quadrature,
    sq_norm_integrals,
)
from .gp_exact import SeKernel, gp_predict, kernel_matrix, sample_gp_prior
from .hgp import HgpModel, build_hgp, hgp_fit, hgp_predict, laplacian_frequency, se_spectral_density
from .metrics import gaussian_kl, nlpd, relative_metric, rmse, time_predict
from .posterior import (
    CholeskyError,
    DualPosterior,
    MomentPosterior,
    PredictiveDistribution,
    dual_accumulate,
    dual_diag_sigma,
    dual_from_batch,
    dual_to_moment,
    fit_moment,
)
from .selection import (
    SelectionResult,
    dual_scores,
    exact_loss,
    integral_scores,
    oracle_best_subset,
    reduce_dual,
    reduce_moment,
    select_by_threshold,
    select_top_k,
    simplified_scores,
)

__version__ = "0.1.0"
