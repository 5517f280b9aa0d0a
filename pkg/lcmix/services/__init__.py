"""Services package for lcmix: likelihood, estimation, inference, diagnostics and simulation."""

from .diagnostics import adjusted_rand_index, bic, classification_error, entropy_r2, modal_assignment
from .estimation import fit
from .inference import attach_inference, wald_direct_effects, wald_equal_means, wald_equal_variances
from .likelihood import log_likelihood, n_free_params, posteriors
from .simulation import calibrate_separation, generate

__all__ = [
    "adjusted_rand_index",
    "attach_inference",
    "bic",
    "calibrate_separation",
    "classification_error",
    "entropy_r2",
    "fit",
    "generate",
    "log_likelihood",
    "modal_assignment",
    "n_free_params",
    "posteriors",
    "wald_direct_effects",
    "wald_equal_means",
    "wald_equal_variances",
]
