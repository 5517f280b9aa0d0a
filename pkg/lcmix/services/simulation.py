"""Seeded generators for the population-study designs and separation calibration."""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from lcmix.config import settings
from lcmix.core.exceptions import CalibrationException, InvalidModelSpecException
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.fit import FitConfig
from lcmix.schemas.model_spec import ModelVariant
from lcmix.schemas.parameters import Parameters
from lcmix.schemas.partition import Partition
from lcmix.schemas.study import StudyDesign
from lcmix.services.diagnostics import entropy_r2
from lcmix.services.estimation import fit

logger = logging.getLogger(__name__)

EXTERNAL_COLUMN = "z"


def item_names(j: int):
    return tuple(f"item{item + 1}" for item in range(j))


def true_parameters(design: StudyDesign) -> Parameters:
    """Generating parameters of ``design`` in model form (LCreg carries no mu/sigma2)."""
    if design.intercept_magnitude is None:
        raise InvalidModelSpecException("Design has no intercept magnitude; calibrate it first")
    mix = np.asarray(design.mix, dtype=float)
    theta = np.log(mix) - np.log(mix[0])
    intercepts = design.intercept_magnitude * np.asarray(design.intercept_pattern, dtype=float)
    if design.generator == ModelVariant.LCDIST:
        slopes = np.zeros(design.s)
    else:
        slopes = np.asarray(design.slopes, dtype=float)

    beta0 = np.zeros((design.s, 2))
    beta0[:, 1] = intercepts
    beta = np.zeros((design.s, 2))
    beta[:, 1] = slopes
    mu = sigma2 = None
    if design.generator != ModelVariant.LCREG:
        mu = np.asarray(design.z_means, dtype=float)
        sigma2 = np.full(design.s, design.z_variance)
    return Parameters(
        theta=theta,
        mu=mu,
        sigma2=sigma2,
        beta0=tuple(beta0 for _ in range(design.j)),
        beta=tuple(beta for _ in range(design.j)),
    )


def generate(design: StudyDesign, seed: int) -> Tuple[Dataset, Partition, Parameters]:
    """
    Draw one dataset from ``design``.

    Classes come from ``mix``; Z is standard normal and independent of class for the LCreg
    design, normal around the class mean otherwise; every indicator is a Bernoulli logit in
    its class intercept plus the class slope times Z (no slope for LCdist).

    Returns:
        tuple: (dataset, true partition, generating parameters)
    """
    params = true_parameters(design)
    rng = np.random.default_rng(seed)
    labels = rng.choice(design.s, size=design.n, p=np.asarray(design.mix))
    if design.generator == ModelVariant.LCREG:
        z = rng.standard_normal(design.n)
    else:
        means = np.asarray(design.z_means, dtype=float)
        z = means[labels] + np.sqrt(design.z_variance) * rng.standard_normal(design.n)

    intercepts = np.stack([b0[:, 1] for b0 in params.beta0], axis=1)     # S x J
    slopes = np.stack([b[:, 1] for b in params.beta], axis=1)
    logits = intercepts[labels] + z[:, None] * slopes[labels]
    indicators = (rng.random((design.n, design.j)) < 1.0 / (1.0 + np.exp(-logits))).astype(np.int64)

    dataset = Dataset(
        indicators=indicators,
        cardinalities=(2,) * design.j,
        z=z,
        column_names=item_names(design.j) + (EXTERNAL_COLUMN,),
    )
    logger.info(
        f"Generated {design.n} rows from the {design.generator.value} design "
        f"(b={design.intercept_magnitude}, seed={seed})"
    )
    return dataset, Partition(labels=labels, n_classes=design.s), params


# ============================================
# CALIBRATION
# ============================================

def separation_r2(design: StudyDesign, magnitude: float, seed: int, config: Optional[FitConfig] = None) -> float:
    """Entropy R^2 of the correctly specified fit on data generated with intercept magnitude ``magnitude``."""
    data, _, _ = generate(design.with_magnitude(magnitude), seed)
    result = fit(design.model_spec, data, config)
    return entropy_r2(result.posteriors, result.class_proportions)


def calibrate_separation(
    design: StudyDesign,
    target_r2: Optional[float] = None,
    seed: Optional[int] = None,
    config: Optional[FitConfig] = None,
    n: Optional[int] = None,
) -> float:
    """
    Bisect the intercept magnitude until the correctly specified fit reaches ``target_r2``.

    Each candidate is scored on a fresh calibration dataset of ``n`` rows drawn with the same
    seed, so the search is deterministic.

    Raises:
        CalibrationException: the target lies outside the R^2 range of the bracket, or the
            bisection ran out of steps
    """
    target_r2 = settings.CALIBRATION_TARGET_R2 if target_r2 is None else target_r2
    if not 0.0 < target_r2 < 1.0:
        raise ValueError(f"target R2 must lie in (0, 1), got {target_r2}")
    seed = settings.DEFAULT_SEED if seed is None else seed
    config = config or FitConfig(n_starts=settings.CALIBRATION_STARTS, rng_seed=seed)
    design = design.model_copy(update={"n": n or settings.CALIBRATION_N})
    tolerance = settings.CALIBRATION_TOLERANCE
    evaluated: Dict[float, float] = {}

    def score(b: float) -> float:
        r2 = separation_r2(design, b, seed, config)
        evaluated[b] = r2
        logger.info(f"Calibration {design.generator.value}: b={b:.4f} -> entropy R2={r2:.4f}")
        return r2

    lower, upper = settings.CALIBRATION_LOWER, settings.CALIBRATION_UPPER
    r2_lower, r2_upper = score(lower), score(upper)
    for b, r2 in ((lower, r2_lower), (upper, r2_upper)):
        if abs(r2 - target_r2) < tolerance:
            return b
    if not r2_lower < target_r2 < r2_upper:
        raise CalibrationException(target_r2, (r2_lower, r2_upper))

    for _ in range(settings.CALIBRATION_MAX_STEPS):
        middle = 0.5 * (lower + upper)
        r2 = score(middle)
        if abs(r2 - target_r2) < tolerance:
            return middle
        if r2 < target_r2:
            lower = middle
        else:
            upper = middle
    raise CalibrationException(target_r2, (min(evaluated.values()), max(evaluated.values())))
