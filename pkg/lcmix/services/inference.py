"""Standard errors from the observed information and Wald tests."""

import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import chi2

from lcmix.config import settings
from lcmix.core.exceptions import (
    ConstrainedItemException,
    InferenceNotAvailableException,
    InvalidModelSpecException,
    SingularConstraintException,
    UnsupportedVariantException,
)
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.fit import FitResult
from lcmix.schemas.inference import ParameterEstimate, WaldResult
from lcmix.schemas.model_spec import ModelSpec, ModelVariant, SlopeConstraint, VarianceMode
from lcmix.schemas.parameters import Parameters
from lcmix.services.likelihood import log_likelihood
from lcmix.services.parameter_vector import ParameterLayout

logger = logging.getLogger(__name__)


# ============================================
# DISTRIBUTIONS
# ============================================

def chi_square_upper_tail(x: float, df: int) -> float:
    """P(X > x) for X ~ chi-square(df), i.e. Q(df/2, x/2)."""
    if x < 0:
        raise ValueError(f"chi-square statistic must be non-negative, got {x}")
    if df < 1:
        raise ValueError(f"degrees of freedom must be at least 1, got {df}")
    return float(chi2.sf(x, df))


# ============================================
# OBSERVED INFORMATION
# ============================================

def numerical_hessian(func: Callable[[np.ndarray], float], x: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """
    Central-difference Hessian of ``func`` at ``x`` with steps ``step * (1 + |x_i|)``.

    Returns:
        Symmetrized Hessian (H + H') / 2
    """
    step = step or settings.HESSIAN_STEP
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = step * (1.0 + np.abs(x))
    f0 = func(x)
    hessian = np.empty((n, n))

    def shifted(i: int, di: float, j: Optional[int] = None, dj: float = 0.0) -> float:
        point = x.copy()
        point[i] += di * h[i]
        if j is not None:
            point[j] += dj * h[j]
        return func(point)

    for i in range(n):
        hessian[i, i] = (shifted(i, 1.0) - 2.0 * f0 + shifted(i, -1.0)) / (h[i] * h[i])
        for j in range(i):
            value = (
                shifted(i, 1.0, j, 1.0)
                - shifted(i, 1.0, j, -1.0)
                - shifted(i, -1.0, j, 1.0)
                + shifted(i, -1.0, j, -1.0)
            ) / (4.0 * h[i] * h[j])
            hessian[i, j] = hessian[j, i] = value
    return (hessian + hessian.T) / 2.0


def numerical_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient with the same step rule as `numerical_hessian`."""
    step = step or settings.HESSIAN_STEP
    x = np.asarray(x, dtype=float)
    h = step * (1.0 + np.abs(x))
    gradient = np.empty(len(x))
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += h[i]
        down[i] -= h[i]
        gradient[i] = (func(up) - func(down)) / (2.0 * h[i])
    return gradient


def observed_information(params: Parameters, spec: ModelSpec, data: Dataset) -> np.ndarray:
    """
    Negative Hessian of the log-likelihood over the free parameters.

    Variances are differentiated on the log scale and mapped back to their natural
    scale by the delta method, so rows/columns follow `ParameterLayout` order.
    """
    layout = ParameterLayout(spec)
    x = layout.pack(params, log_variances=True)

    def loglik(vector: np.ndarray) -> float:
        return log_likelihood(layout.unpack(vector, log_variances=True), spec, data)

    information = -numerical_hessian(loglik, x)
    scale = np.ones(layout.size)
    positions = layout.variance_positions()
    scale[positions] = np.exp(x[positions])
    return information / np.outer(scale, scale)


def covariance_from_information(information: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Inverse of the information matrix.

    Returns:
        tuple: (covariance, positive_definite). When the information is not positive
        definite the covariance is the pseudo-inverse over its positive eigenvalues.
    """
    information = (information + information.T) / 2.0
    eigenvalues, vectors = np.linalg.eigh(information)
    threshold = settings.EIGENVALUE_TOLERANCE * max(1.0, float(np.max(np.abs(eigenvalues))))
    positive_definite = bool(np.all(eigenvalues > threshold))
    if not positive_definite:
        logger.warning(
            f"Information matrix is not positive definite (smallest eigenvalue {eigenvalues.min():.3e}); "
            "using a pseudo-inverse"
        )
    inverse = np.where(eigenvalues > threshold, 1.0 / np.where(eigenvalues > threshold, eigenvalues, 1.0), 0.0)
    covariance = (vectors * inverse) @ vectors.T
    return (covariance + covariance.T) / 2.0, positive_definite


def standard_errors(covariance: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None))


def attach_inference(fit: FitResult, data: Dataset) -> FitResult:
    """Copy of ``fit`` with covariance and standard errors filled in."""
    logger.info(f"Computing observed information for {fit.spec.label} S={fit.spec.s} ({fit.n_params} parameters)")
    information = observed_information(fit.params, fit.spec, data)
    covariance, positive_definite = covariance_from_information(information)
    warnings = list(fit.warnings)
    if not positive_definite:
        warnings.append("information matrix not positive definite; covariance from pseudo-inverse")
    return fit.model_copy(
        update={
            "covariance": covariance,
            "se": standard_errors(covariance),
            "information_positive_definite": positive_definite,
            "warnings": warnings,
        }
    )


# ============================================
# WALD TESTS
# ============================================

def wald_test(
    estimate: np.ndarray,
    covariance: np.ndarray,
    R: np.ndarray,
    r: Optional[np.ndarray] = None,
    description: str = "",
) -> WaldResult:
    """
    Wald test of R theta = r: W = (R theta - r)' [R Sigma R']^-1 (R theta - r), df = rows of R.

    Raises:
        SingularConstraintException: R Sigma R' is singular; names the first redundant row
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    estimate = np.asarray(estimate, dtype=float)
    r = np.zeros(R.shape[0]) if r is None else np.atleast_1d(np.asarray(r, dtype=float))
    middle = R @ covariance @ R.T
    middle = (middle + middle.T) / 2.0
    q = R.shape[0]
    if np.linalg.matrix_rank(middle) < q:
        for rows in range(1, q + 1):
            if np.linalg.matrix_rank(middle[:rows, :rows]) < rows:
                raise SingularConstraintException(rows - 1)
    difference = R @ estimate - r
    statistic = max(float(difference @ np.linalg.solve(middle, difference)), 0.0)
    return WaldResult(
        statistic=statistic,
        df=q,
        p_value=chi_square_upper_tail(statistic, q),
        constraint_description=description,
    )


def _require_covariance(fit: FitResult) -> Tuple[np.ndarray, np.ndarray, ParameterLayout]:
    if fit.covariance is None:
        raise InferenceNotAvailableException()
    layout = ParameterLayout(fit.spec)
    return layout.pack(fit.params), fit.covariance, layout


def _difference_rows(positions: np.ndarray, size: int) -> np.ndarray:
    """Rows e_{positions[c]} - e_{positions[0]} for c = 1..len-1."""
    R = np.zeros((len(positions) - 1, size))
    for row, position in enumerate(positions[1:]):
        R[row, position] = 1.0
        R[row, positions[0]] = -1.0
    return R


def _require_gaussian(fit: FitResult) -> None:
    if not fit.spec.models_z:
        raise UnsupportedVariantException(f"{fit.spec.label} does not model Z; no means or variances to test")
    if fit.spec.s < 2:
        raise InvalidModelSpecException("Equality tests need at least two classes")


def wald_equal_means(fit: FitResult) -> WaldResult:
    """Wald test of mu_1 = ... = mu_S, df = S - 1."""
    _require_gaussian(fit)
    estimate, covariance, layout = _require_covariance(fit)
    R = _difference_rows(layout.mu, layout.size)
    return wald_test(estimate, covariance, R, description="equal means of Z across classes")


def wald_equal_variances(fit: FitResult) -> WaldResult:
    """Wald test of sigma2_1 = ... = sigma2_S, df = S - 1."""
    _require_gaussian(fit)
    if fit.spec.variance_mode == VarianceMode.COMMON:
        raise UnsupportedVariantException("Variances are pooled across classes; nothing to test")
    estimate, covariance, layout = _require_covariance(fit)
    R = _difference_rows(layout.sigma2, layout.size)
    return wald_test(estimate, covariance, R, description="equal variances of Z across classes")


def _free_slopes(fit: FitResult, item: int) -> np.ndarray:
    spec = fit.spec
    if spec.variant not in (ModelVariant.LCREG, ModelVariant.LCCW):
        raise UnsupportedVariantException(f"{spec.label} has no direct effects")
    if not 0 <= item < spec.n_items:
        raise IndexError(f"item index {item} out of range 0..{spec.n_items - 1}")
    constraint = spec.slope_constraints[item]
    if constraint != SlopeConstraint.FREE:
        raise ConstrainedItemException(item, constraint.value)
    return ParameterLayout(spec).slopes[item]       # S x (K-1)


def wald_direct_effects_zero(fit: FitResult, item: int) -> WaldResult:
    """Wald test that all of ``item``'s slopes are 0, df = S(K_j-1)."""
    slopes = _free_slopes(fit, item)
    estimate, covariance, layout = _require_covariance(fit)
    R = np.zeros((slopes.size, layout.size))
    R[np.arange(slopes.size), slopes.ravel()] = 1.0
    return wald_test(estimate, covariance, R, description=f"item {item + 1} direct effects = 0")


def wald_direct_effects_equal(fit: FitResult, item: int) -> WaldResult:
    """Wald test that ``item``'s slopes are equal across classes, df = (S-1)(K_j-1)."""
    slopes = _free_slopes(fit, item)
    if fit.spec.s < 2:
        raise InvalidModelSpecException("The cross-class equality test needs at least two classes")
    estimate, covariance, layout = _require_covariance(fit)
    R = np.vstack([_difference_rows(slopes[:, column], layout.size) for column in range(slopes.shape[1])])
    return wald_test(estimate, covariance, R, description=f"item {item + 1} direct effects equal across classes")


def wald_direct_effects(fit: FitResult, item: int) -> Tuple[WaldResult, WaldResult]:
    """
    Both direct-effect tests of one item.

    Returns:
        tuple: (all slopes zero, slopes equal across classes)
    """
    return wald_direct_effects_zero(fit, item), wald_direct_effects_equal(fit, item)


def gaussian_wald_tests(fit: FitResult) -> Dict[str, WaldResult]:
    """Equal-means and (when class-specific) equal-variances tests; empty when not applicable."""
    if not fit.spec.models_z or fit.spec.s < 2 or fit.covariance is None:
        return {}
    tests = {"means": wald_equal_means(fit)}
    if fit.spec.variance_mode == VarianceMode.HETEROSCEDASTIC:
        tests["variances"] = wald_equal_variances(fit)
    return tests


def direct_effect_tests(fit: FitResult) -> List[Tuple[int, WaldResult, Optional[WaldResult]]]:
    """(item, zero test, equality test or None when S = 1) for every item with free slopes."""
    if fit.spec.variant == ModelVariant.LCDIST or fit.covariance is None:
        return []
    rows = []
    for item, constraint in enumerate(fit.spec.slope_constraints):
        if constraint != SlopeConstraint.FREE:
            continue
        equality = wald_direct_effects_equal(fit, item) if fit.spec.s >= 2 else None
        rows.append((item, wald_direct_effects_zero(fit, item), equality))
    return rows


# ============================================
# PARAMETER TABLE
# ============================================

def parameter_names(spec: ModelSpec, item_names: Optional[List[str]] = None) -> List[str]:
    return list(ParameterLayout(spec, item_names).names)


def parameter_table(fit: FitResult, item_names: Optional[List[str]] = None) -> List[ParameterEstimate]:
    """Estimate, SE, z and two-sided p-value for every free parameter."""
    layout = ParameterLayout(fit.spec, item_names)
    estimates = layout.pack(fit.params)
    rows = []
    for index, name in enumerate(layout.names):
        se = z = p_value = None
        if fit.se is not None and fit.se[index] > 0:
            se = float(fit.se[index])
            z = float(estimates[index] / se)
            p_value = chi_square_upper_tail(z * z, 1)
        rows.append(ParameterEstimate(name=name, estimate=float(estimates[index]), se=se, z=z, p_value=p_value))
    return rows
