"""Likelihood, posterior and parameter-count math for LCreg, LCdist and LCcw.

All mixture arithmetic runs in log space. Per-row terms are vectorised over
observations and classes; the final sum over rows uses ``math.fsum`` so the
total does not depend on how rows were evaluated.
"""

import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax, logsumexp, softmax
from scipy.stats import norm

from lcmix.core.exceptions import NumericalException, ParameterDomainException
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.model_spec import ModelSpec, SlopeConstraint, VarianceMode
from lcmix.schemas.parameters import Parameters

logger = logging.getLogger(__name__)


def _check_index(value: int, size: int, what: str) -> None:
    if not 0 <= value < size:
        raise IndexError(f"{what} index {value} out of range 0..{size - 1}")


def _uses_z(spec: ModelSpec, item: int) -> bool:
    return spec.slope_constraints[item] != SlopeConstraint.ZERO


# ============================================
# SINGLE-OBSERVATION TERMS
# ============================================

def item_response_prob(params: Parameters, spec: ModelSpec, item: int, klass: int, z: float) -> np.ndarray:
    """
    Category probabilities of one indicator given class and Z.

    Baseline-category logits: score_k = beta0[k] + z * beta[k], score_0 = 0.
    For two categories this is the ordinary Bernoulli logit.

    Args:
        params: Model parameters
        spec: Model specification
        item: Indicator index (0-based)
        klass: Class index (0-based)
        z: Value of the external variable; ignored when the item has no direct effect

    Returns:
        Length-K_j probability vector
    """
    _check_index(item, spec.n_items, "item")
    _check_index(klass, spec.s, "class")
    scores = params.beta0[item][klass]
    if _uses_z(spec, item):
        scores = scores + z * params.beta[item][klass]
    return softmax(scores)


def gaussian_logpdf(z, mu, sigma2):
    """Log density of N(mu, sigma2) at z; broadcasts over arrays."""
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 <= 0):
        raise ParameterDomainException(f"variance must be positive, got {sigma2.min()}")
    result = norm.logpdf(z, loc=mu, scale=np.sqrt(sigma2))
    return float(result) if np.ndim(result) == 0 else result


def log_component_density(
    params: Parameters,
    spec: ModelSpec,
    y: Sequence[int],
    z: float,
    klass: int,
) -> float:
    """
    ln of the class-``klass`` density of one observation ``(y, z)``.

    LCcw: ln P(z|s) + sum_j ln P(y_j|z,s); LCdist: ln P(z|s) + sum_j ln P(y_j|s);
    LCreg: sum_j ln P(y_j|z,s), Z being conditioned on rather than modelled.
    """
    _check_index(klass, spec.s, "class")
    if len(y) != spec.n_items:
        raise IndexError(f"observation has {len(y)} responses, model has {spec.n_items} items")
    total = 0.0
    if spec.models_z:
        total += gaussian_logpdf(z, params.mu[klass], params.sigma2[klass])
    for item, code in enumerate(y):
        probs = item_response_prob(params, spec, item, klass, z)
        _check_index(int(code), len(probs), f"category of item {item + 1}")
        total += math.log(probs[int(code)])
    return total


# ============================================
# VECTORISED TERMS
# ============================================

def item_category_log_probs(params: Parameters, spec: ModelSpec, item: int, z: np.ndarray) -> np.ndarray:
    """N x S x K_j array of ln P(Y_j = k | z_i, class s)."""
    b0 = params.beta0[item]
    if not _uses_z(spec, item):
        return np.broadcast_to(log_softmax(b0, axis=1), (len(z),) + b0.shape)
    scores = b0[None, :, :] + z[:, None, None] * params.beta[item][None, :, :]
    return log_softmax(scores, axis=2)


def item_log_likelihoods(params: Parameters, spec: ModelSpec, data: Dataset) -> List[np.ndarray]:
    """Per item, the N x S matrix of ln P(y_ij | z_i, class s)."""
    terms = []
    for item in range(spec.n_items):
        codes = data.indicators[:, item]
        if not _uses_z(spec, item):
            table = log_softmax(params.beta0[item], axis=1)     # S x K
            terms.append(table[:, codes].T)
            continue
        log_probs = item_category_log_probs(params, spec, item, data.z)
        index = np.broadcast_to(codes[:, None, None], (data.n, spec.s, 1))
        terms.append(np.take_along_axis(log_probs, index, axis=2)[:, :, 0])
    return terms


def log_component_matrix(params: Parameters, spec: ModelSpec, data: Dataset) -> np.ndarray:
    """N x S matrix of ``log_component_density`` for every row and class."""
    _check_compatible(params, spec, data)
    comp = np.zeros((data.n, spec.s))
    for term in item_log_likelihoods(params, spec, data):
        comp += term
    if spec.models_z:
        comp += gaussian_logpdf(data.z[:, None], params.mu[None, :], params.sigma2[None, :])
    return comp


def log_prior(params: Parameters) -> np.ndarray:
    """ln P(X = s) from the mixing logits."""
    return params.theta - logsumexp(params.theta)


def e_pass(params: Parameters, spec: ModelSpec, data: Dataset) -> Tuple[np.ndarray, float, np.ndarray]:
    """
    One pass over the data returning posteriors, the log-likelihood and per-row terms.

    Raises:
        NumericalException: a row's log-likelihood is not finite
    """
    joint = log_component_matrix(params, spec, data) + log_prior(params)[None, :]
    with np.errstate(invalid="ignore"):
        row_loglik = logsumexp(joint, axis=1)
    bad = np.flatnonzero(~np.isfinite(row_loglik))
    if bad.size:
        raise NumericalException(row=int(bad[0]))
    posteriors = np.exp(joint - row_loglik[:, None])
    return posteriors, math.fsum(row_loglik), row_loglik


def log_likelihood(params: Parameters, spec: ModelSpec, data: Dataset) -> float:
    """Sum over rows of ln sum_s P(X=s) exp(log_component_density)."""
    return e_pass(params, spec, data)[1]


def posteriors(params: Parameters, spec: ModelSpec, data: Dataset) -> np.ndarray:
    """N x S posterior class-membership probabilities."""
    return e_pass(params, spec, data)[0]


# ============================================
# PARAMETER COUNTS
# ============================================

def n_free_params(spec: ModelSpec) -> int:
    """
    Number of free parameters.

    Dichotomous items give 2JS + (S-1) for LCreg, JS + 2S + (S-1) for LCdist and
    2JS + 2S + (S-1) for LCcw. A common variance counts once.
    """
    count = spec.s - 1
    for k, constraint in zip(spec.cardinalities, spec.slope_constraints):
        count += (k - 1) * spec.s
        if constraint == SlopeConstraint.FREE:
            count += (k - 1) * spec.s
        elif constraint == SlopeConstraint.EQUAL:
            count += k - 1
    if spec.models_z:
        count += spec.s
        count += 1 if spec.variance_mode == VarianceMode.COMMON else spec.s
    return count


def _check_compatible(params: Parameters, spec: ModelSpec, data: Dataset) -> None:
    if params.n_classes != spec.s:
        raise ValueError(f"parameters have {params.n_classes} classes, spec has {spec.s}")
    if tuple(data.cardinalities) != tuple(spec.cardinalities):
        raise ValueError("dataset cardinalities do not match the model specification")
    if spec.models_z and params.mu is None:
        raise ValueError(f"{spec.label} needs mu and sigma2")
