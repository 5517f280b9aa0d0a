"""Maximum-likelihood estimation by EM with multiple random starts.

Each start draws Dirichlet(1, ..., 1) responsibilities and runs one M-step to get
valid parameters. M-steps are exact for the mixing weights, the Gaussian part and
items without direct effects; items with direct effects get a weighted
multinomial-logit Newton step that never lowers its weighted objective, so the
log-likelihood is non-decreasing across iterations.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import log_softmax

from lcmix.config import settings
from lcmix.core.exceptions import (
    DegenerateClassException,
    FitFailedException,
    NumericalException,
    ParameterDomainException,
)
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.fit import FitConfig, FitResult, StartReport
from lcmix.schemas.model_spec import ModelSpec, SlopeConstraint, VarianceMode
from lcmix.schemas.parameters import Parameters
from lcmix.services.likelihood import e_pass, n_free_params

logger = logging.getLogger(__name__)


@dataclass
class MeasurementUpdate:
    """New intercepts/slopes plus any numerical flags raised while fitting them."""

    beta0: Tuple[np.ndarray, ...]
    beta: Tuple[np.ndarray, ...]
    flags: List[str] = field(default_factory=list)


@dataclass
class ChainOutcome:
    """One EM chain."""

    index: int
    status: str
    params: Optional[Parameters] = None
    posteriors: Optional[np.ndarray] = None
    loglik: Optional[float] = None
    n_iterations: int = 0
    converged: bool = False
    reason: Optional[str] = None
    trace: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def report(self) -> StartReport:
        return StartReport(
            index=self.index,
            status=self.status,
            loglik=self.loglik,
            n_iterations=self.n_iterations,
            converged=self.converged,
            reason=self.reason,
        )


# ============================================
# E-STEP
# ============================================

def e_step(params: Parameters, spec: ModelSpec, data: Dataset) -> Tuple[np.ndarray, float]:
    """Posteriors and log-likelihood of ``params`` from the same pass over the data."""
    posteriors, loglik, _ = e_pass(params, spec, data)
    return posteriors, loglik


# ============================================
# M-STEPS
# ============================================

def m_step_mixing(posteriors: np.ndarray) -> np.ndarray:
    """Mixing logits ln(p_s / p_1) from the column means of the responsibilities."""
    shares = np.asarray(posteriors).mean(axis=0)
    empty = np.flatnonzero(shares <= 0)
    if empty.size:
        raise DegenerateClassException(int(empty[0]))
    return np.log(shares) - np.log(shares[0])


def variance_floor(z: np.ndarray) -> float:
    """Smallest admissible class variance of Z."""
    sample_variance = float(np.var(z))
    if sample_variance > 0:
        return settings.VARIANCE_FLOOR_RATIO * sample_variance
    return settings.VARIANCE_FLOOR_RATIO


def m_step_gaussian(
    posteriors: np.ndarray,
    z: np.ndarray,
    variance_mode: VarianceMode = VarianceMode.HETEROSCEDASTIC,
) -> Tuple[np.ndarray, np.ndarray]:
    """Responsibility-weighted means and (class-specific or pooled) variances of Z."""
    weights = posteriors.sum(axis=0)
    empty = np.flatnonzero(weights <= 0)
    if empty.size:
        raise DegenerateClassException(int(empty[0]))
    mu = posteriors.T @ z / weights
    squared = (z[:, None] - mu[None, :]) ** 2
    if variance_mode == VarianceMode.COMMON:
        sigma2 = np.full(len(mu), float((posteriors * squared).sum() / weights.sum()))
    else:
        sigma2 = (posteriors * squared).sum(axis=0) / weights
    return mu, np.maximum(sigma2, variance_floor(z))


def _clamp(coefficients: np.ndarray, limit: float) -> Tuple[np.ndarray, bool]:
    finite = np.nan_to_num(coefficients, nan=0.0, posinf=limit, neginf=-limit)
    clamped = np.clip(finite, -limit, limit)
    return clamped, bool(np.any(clamped != coefficients))


def closed_form_intercepts(weights: np.ndarray, one_hot: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Baseline-category logits of the weighted category frequencies, one row per class.

    Returns:
        tuple: (S x K intercepts, whether any logit had to be clamped)
    """
    counts = weights.T @ one_hot
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(counts / counts.sum(axis=1, keepdims=True))
        intercepts = logs - logs[:, :1]
    intercepts, clamped = _clamp(intercepts, settings.COEFFICIENT_CLAMP)
    intercepts[:, 0] = 0.0
    return intercepts, clamped


class _ItemLogit:
    """
    Weighted multinomial logit of one item on (1, z), one coefficient set per class.

    The flat vector holds the S x (K-1) intercepts first, then either S x (K-1)
    class-specific slopes or K-1 slopes shared by all classes.
    """

    def __init__(self, one_hot: np.ndarray, z: np.ndarray, weights: np.ndarray, shared: bool):
        self.one_hot = one_hot
        self.z = z
        self.weights = weights
        self.total_weight = float(weights.sum())
        self.n_classes = weights.shape[1]
        self.m = one_hot.shape[1] - 1
        s, m = self.n_classes, self.m
        self.ia = [np.arange(c * m, (c + 1) * m) for c in range(s)]
        if shared:
            self.ib = [np.arange(s * m, s * m + m)] * s
            self.dim = s * m + m
        else:
            self.ib = [np.arange(s * m + c * m, s * m + (c + 1) * m) for c in range(s)]
            self.dim = 2 * s * m

    def pack(self, b0: np.ndarray, b: np.ndarray) -> np.ndarray:
        vector = np.empty(self.dim)
        for c in range(self.n_classes):
            vector[self.ia[c]] = b0[c, 1:]
            vector[self.ib[c]] = b[c, 1:]
        return vector

    def unpack(self, vector: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        shape = (self.n_classes, self.m + 1)
        b0, b = np.zeros(shape), np.zeros(shape)
        for c in range(self.n_classes):
            b0[c, 1:] = vector[self.ia[c]]
            b[c, 1:] = vector[self.ib[c]]
        return b0, b

    def log_probs(self, vector: np.ndarray) -> np.ndarray:
        b0, b = self.unpack(vector)
        scores = b0[None, :, :] + self.z[:, None, None] * b[None, :, :]
        return log_softmax(scores, axis=2)

    def objective(self, vector: np.ndarray) -> float:
        return float(np.einsum("is,isk,ik->", self.weights, self.log_probs(vector), self.one_hot))

    def state(self, vector: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """Objective, score and Hessian at ``vector``."""
        log_probs = self.log_probs(vector)
        probs = np.exp(log_probs)[:, :, 1:]
        objective = float(np.einsum("is,isk,ik->", self.weights, log_probs, self.one_hot))

        weighted_resid = self.weights[:, :, None] * (self.one_hot[:, None, 1:] - probs)
        g_a = weighted_resid.sum(axis=0)
        g_b = np.einsum("isk,i->sk", weighted_resid, self.z)

        cov = probs[..., :, None] * np.eye(self.m) - probs[..., :, None] * probs[..., None, :]
        weighted_cov = self.weights[:, :, None, None] * cov
        h_aa = -weighted_cov.sum(axis=0)
        h_ab = -np.einsum("iskl,i->skl", weighted_cov, self.z)
        h_bb = -np.einsum("iskl,i->skl", weighted_cov, self.z * self.z)

        score = np.zeros(self.dim)
        hessian = np.zeros((self.dim, self.dim))
        for c in range(self.n_classes):
            ia, ib = self.ia[c], self.ib[c]
            score[ia] += g_a[c]
            score[ib] += g_b[c]
            hessian[np.ix_(ia, ia)] += h_aa[c]
            hessian[np.ix_(ia, ib)] += h_ab[c]
            hessian[np.ix_(ib, ia)] += h_ab[c].T
            hessian[np.ix_(ib, ib)] += h_bb[c]
        return objective, score, hessian


def _newton_item(
    logit: _ItemLogit,
    start: np.ndarray,
    max_iterations: int,
    tolerance: float,
) -> Tuple[np.ndarray, bool, bool]:
    """
    Newton-Raphson with step halving on one item's weighted logit objective.

    Stops when the largest score falls below ``tolerance`` times the total weight, or when
    the Newton decrement (the predicted gain of a full step) is within rounding of the
    objective. Only steps that do not lower the objective are taken.

    Returns:
        tuple: (best vector, converged, Hessian rank deficient)
    """
    score_tolerance = tolerance * max(1.0, logit.total_weight)
    vector = start
    objective, score, hessian = logit.state(vector)
    converged = False
    for iteration in range(max_iterations + 1):
        step = np.linalg.lstsq(-hessian, score, rcond=None)[0]
        decrement = 0.5 * float(score @ step)
        if (
            np.max(np.abs(score)) < score_tolerance
            or decrement <= settings.NEWTON_ROUNDING_SLACK * (1.0 + abs(objective))
        ):
            converged = True
            break
        if iteration == max_iterations:
            break
        t = 1.0
        for _ in range(settings.NEWTON_MAX_HALVINGS):
            candidate = vector + t * step
            if logit.objective(candidate) >= objective:
                break
            t *= 0.5
        else:
            # no representable ascent left: accept a score at rounding level
            converged = bool(np.max(np.abs(score)) < np.sqrt(tolerance) * max(1.0, logit.total_weight))
            break
        vector = candidate
        objective, score, hessian = logit.state(vector)
    undetermined = np.linalg.matrix_rank(hessian) < logit.dim
    return vector, bool(converged), bool(undetermined)


def m_step_measurement(
    posteriors: np.ndarray,
    spec: ModelSpec,
    data: Dataset,
    current: Optional[Parameters] = None,
    config: Optional[FitConfig] = None,
) -> MeasurementUpdate:
    """
    Intercepts and direct-effect slopes given the responsibilities.

    Items with slopes fixed at zero use the closed-form weighted frequencies. Other
    items are fitted by Newton-Raphson started from ``current`` (or from the
    closed-form intercepts with zero slopes when ``current`` is None).
    """
    config = config or FitConfig()
    beta0, beta, flags = [], [], []
    for item, constraint in enumerate(spec.slope_constraints):
        one_hot = data.one_hot(item)
        intercepts, clamped = closed_form_intercepts(posteriors, one_hot)
        if constraint == SlopeConstraint.ZERO:
            if clamped:
                flags.append(f"item {item + 1}: intercepts clamped at +/-{settings.COEFFICIENT_CLAMP:g} (quasi-separation)")
            beta0.append(intercepts)
            beta.append(np.zeros_like(intercepts))
            continue

        logit = _ItemLogit(one_hot, data.z, posteriors, shared=constraint == SlopeConstraint.EQUAL)
        if current is None:
            start = logit.pack(intercepts, np.zeros_like(intercepts))
        else:
            start = logit.pack(current.beta0[item], current.beta[item])
        vector, converged, undetermined = _newton_item(
            logit, start, config.max_newton_iterations, config.newton_tolerance
        )
        if not converged:
            flags.append(f"item {item + 1}: Newton M-step did not converge in {config.max_newton_iterations} iterations")
        if undetermined:
            flags.append(f"item {item + 1}: direct effects undetermined (no variation in Z within a class)")
        vector, clamped = _clamp(vector, settings.COEFFICIENT_CLAMP)
        if clamped:
            flags.append(f"item {item + 1}: coefficients clamped at +/-{settings.COEFFICIENT_CLAMP:g} (quasi-separation)")
        b0, b = logit.unpack(vector)
        beta0.append(b0)
        beta.append(b)
    return MeasurementUpdate(beta0=tuple(beta0), beta=tuple(beta), flags=flags)


def _m_step(
    posteriors: np.ndarray,
    spec: ModelSpec,
    data: Dataset,
    current: Optional[Parameters],
    config: FitConfig,
) -> Tuple[Parameters, List[str]]:
    theta = m_step_mixing(posteriors)
    mu = sigma2 = None
    flags: List[str] = []
    if spec.models_z:
        mu, sigma2 = m_step_gaussian(posteriors, data.z, spec.variance_mode)
        floor = variance_floor(data.z)
        for klass in np.flatnonzero(sigma2 <= floor):
            flags.append(f"class {klass + 1}: variance of Z held at the floor {floor:.3e}")
    update = m_step_measurement(posteriors, spec, data, current=current, config=config)
    params = Parameters(theta=theta, mu=mu, sigma2=sigma2, beta0=update.beta0, beta=update.beta)
    return params, flags + update.flags


# ============================================
# INITIALISATION AND CHAINS
# ============================================

def initialize(spec: ModelSpec, data: Dataset, rng: np.random.Generator) -> Parameters:
    """
    Starting parameters from random responsibilities.

    Every row of the N x S responsibility matrix is a Dirichlet(1, ..., 1) draw (all ones
    when S = 1); one M-step with zero slopes turns it into parameters.
    """
    if spec.s == 1:
        responsibilities = np.ones((data.n, 1))
    else:
        responsibilities = rng.dirichlet(np.ones(spec.s), size=data.n)
    theta = m_step_mixing(responsibilities)
    mu = sigma2 = None
    if spec.models_z:
        mu, sigma2 = m_step_gaussian(responsibilities, data.z, spec.variance_mode)
    beta0 = tuple(closed_form_intercepts(responsibilities, data.one_hot(j))[0] for j in range(spec.n_items))
    beta = tuple(np.zeros_like(b0) for b0 in beta0)
    return Parameters(theta=theta, mu=mu, sigma2=sigma2, beta0=beta0, beta=beta)


def run_chain(
    spec: ModelSpec,
    data: Dataset,
    config: FitConfig,
    *,
    index: int = 0,
    rng: Optional[np.random.Generator] = None,
    start: Optional[Parameters] = None,
    max_iterations: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> ChainOutcome:
    """
    Run one EM chain until the relative log-likelihood change drops below ``tolerance``.

    Convergence is |l_t - l_{t-1}| / (1 + |l_t|) < tolerance. A chain whose smallest class
    share falls below DEGENERATE_CLASS_RATIO / N is abandoned as degenerate.
    """
    max_iterations = max_iterations or config.max_em_iterations
    tolerance = tolerance or config.em_tolerance
    min_share = settings.DEGENERATE_CLASS_RATIO / data.n
    trace: List[float] = []
    warnings: List[str] = []
    flags: List[str] = []
    iterations = 0
    converged = False
    try:
        params = start if start is not None else initialize(spec, data, rng or np.random.default_rng())
        while True:
            posteriors, loglik = e_step(params, spec, data)
            if trace:
                previous = trace[-1]
                if loglik < previous - settings.EM_MONOTONICITY_SLACK:
                    warnings.append(
                        f"log-likelihood decreased by {previous - loglik:.3e} at EM iteration {iterations}"
                    )
                converged = abs(loglik - previous) / (1.0 + abs(loglik)) < tolerance
            trace.append(loglik)
            logger.debug(f"start {index} iteration {iterations}: loglik={loglik:.8f}")
            if converged or iterations >= max_iterations:
                break
            shares = posteriors.mean(axis=0)
            smallest = int(np.argmin(shares))
            if shares[smallest] < min_share:
                return ChainOutcome(
                    index=index,
                    status="degenerate",
                    loglik=loglik,
                    n_iterations=iterations,
                    reason=f"class {smallest + 1} share {shares[smallest]:.2e} below {min_share:.2e}",
                    trace=trace,
                )
            params, flags = _m_step(posteriors, spec, data, params, config)
            iterations += 1
    except (DegenerateClassException, NumericalException, ParameterDomainException) as exc:
        return ChainOutcome(index=index, status="failed", n_iterations=iterations, reason=exc.detail, trace=trace)

    return ChainOutcome(
        index=index,
        status="ok",
        params=params,
        posteriors=posteriors,
        loglik=loglik,
        n_iterations=iterations,
        converged=converged,
        trace=trace,
        warnings=warnings + flags,
    )


def _canonical_order(params: Parameters) -> np.ndarray:
    """Class order by descending proportion; ties keep the lower index first."""
    return np.argsort(-params.class_proportions, kind="stable")


# ============================================
# FIT
# ============================================

def fit(spec: ModelSpec, data: Dataset, config: Optional[FitConfig] = None) -> FitResult:
    """
    Fit ``spec`` to ``data`` by multi-start EM.

    Every start gets its own generator spawned from ``config.rng_seed``, so results do not
    depend on ``parallel_starts``. The best log-likelihood wins; ties go to the lowest
    start index. Classes are finally ordered by descending proportion.

    Raises:
        FitFailedException: every start ended degenerate or failed
    """
    config = config or FitConfig()
    if tuple(data.cardinalities) != tuple(spec.cardinalities):
        raise ValueError("dataset cardinalities do not match the model specification")
    n_params = n_free_params(spec)
    if data.n <= n_params:
        logger.warning(f"Only {data.n} observations for {n_params} free parameters")

    seeds = np.random.SeedSequence(config.rng_seed).spawn(config.n_starts)
    screening = config.start_iterations is not None

    def run(index: int) -> ChainOutcome:
        return run_chain(
            spec,
            data,
            config,
            index=index,
            rng=np.random.default_rng(seeds[index]),
            max_iterations=config.start_iterations if screening else None,
            tolerance=config.start_tolerance if screening else None,
        )

    logger.info(f"Fitting {spec.label} with S={spec.s}: {config.n_starts} starts on {data.n} observations")
    if config.parallel_starts and config.n_starts > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            outcomes = list(pool.map(run, range(config.n_starts)))
    else:
        outcomes = [run(index) for index in range(config.n_starts)]

    usable = [o for o in outcomes if o.status == "ok"]
    for outcome in outcomes:
        if outcome.status != "ok":
            logger.warning(f"Start {outcome.index} discarded ({outcome.status}): {outcome.reason}")
    if not usable:
        raise FitFailedException([(o.index, o.reason or o.status) for o in outcomes])

    best = usable[0]
    for outcome in usable[1:]:
        if outcome.loglik > best.loglik:
            best = outcome

    if screening:
        logger.info(f"Continuing screened start {best.index} (loglik={best.loglik:.4f}) to convergence")
        final = run_chain(spec, data, config, index=best.index, start=best.params)
        if final.status != "ok":
            raise FitFailedException([(best.index, final.reason or final.status)])
        final.trace = best.trace + final.trace[1:]
        final.n_iterations += best.n_iterations
        final.warnings = best.warnings + final.warnings
        best = final

    warnings = list(best.warnings)
    if not best.converged:
        warnings.append(f"EM did not converge within {config.max_em_iterations} iterations")
    for message in warnings:
        logger.warning(message)

    order = _canonical_order(best.params)
    logger.info(
        f"{spec.label} S={spec.s}: best start {best.index}, loglik={best.loglik:.4f}, "
        f"{best.n_iterations} iterations, converged={best.converged}"
    )
    return FitResult(
        spec=spec,
        params=best.params.permuted(order),
        loglik=best.loglik,
        posteriors=best.posteriors[:, order],
        n_params=n_params,
        converged=best.converged,
        n_iterations=best.n_iterations,
        start_index=best.index,
        loglik_trace=best.trace,
        warnings=warnings,
        start_reports=[o.report() for o in outcomes],
    )
