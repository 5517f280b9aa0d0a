"""Model selection and partition-quality metrics."""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import entr, softmax

from lcmix.schemas.dataset import Dataset
from lcmix.schemas.model_spec import ModelSpec
from lcmix.schemas.parameters import Parameters
from lcmix.schemas.partition import Partition
from lcmix.services.likelihood import gaussian_logpdf, item_category_log_probs

logger = logging.getLogger(__name__)


# ============================================
# MODEL SELECTION
# ============================================

def bic(loglik: float, n_params: int, n: int) -> float:
    """-2 loglik + n_params ln(n)."""
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    return -2.0 * loglik + n_params * math.log(n)


def entropy_r2(posteriors: np.ndarray, class_proportions: np.ndarray) -> float:
    """
    Entropy-based R^2: 1 - EN(posteriors) / (N * EN(proportions)).

    A zero baseline entropy (one class) gives 1.
    """
    posteriors = np.asarray(posteriors, dtype=float)
    baseline = posteriors.shape[0] * float(np.sum(entr(np.asarray(class_proportions, dtype=float))))
    if baseline <= 0.0:
        return 1.0
    posterior_entropy = float(np.sum(entr(posteriors)))
    return float(np.clip(1.0 - posterior_entropy / baseline, 0.0, 1.0))


def classification_error(posteriors: np.ndarray) -> float:
    """Expected share misclassified under modal assignment."""
    posteriors = np.asarray(posteriors, dtype=float)
    return float(np.mean(1.0 - posteriors.max(axis=1)))


# ============================================
# ASSIGNMENT RULES
# ============================================

def modal_assignment(posteriors: np.ndarray) -> Partition:
    """Argmax per row; ``np.argmax`` keeps the lowest index on ties."""
    posteriors = np.asarray(posteriors, dtype=float)
    return Partition(labels=np.argmax(posteriors, axis=1), n_classes=posteriors.shape[1])


def proportional_assignment(posteriors: np.ndarray, rng: np.random.Generator) -> Partition:
    """One categorical draw per row from its posterior."""
    posteriors = np.asarray(posteriors, dtype=float)
    s = posteriors.shape[1]
    cumulative = np.cumsum(posteriors, axis=1)
    u = rng.random(posteriors.shape[0])
    labels = np.minimum(np.sum(cumulative <= u[:, None], axis=1), s - 1)
    return Partition(labels=labels, n_classes=s)


# ============================================
# PARTITION AGREEMENT
# ============================================

def adjusted_rand_index(a: Partition, b: Partition) -> float:
    """
    Hubert-Arabie adjusted Rand index from the contingency table.

    Pair counts are kept as exact integers. When both partitions put every unit
    in one cluster (or every unit alone) the index is 1.
    """
    if len(a) != len(b):
        raise ValueError(f"partitions have different lengths ({len(a)} vs {len(b)})")
    n = len(a)
    if n < 2:
        raise ValueError("adjusted Rand index needs at least 2 observations")
    table = pd.crosstab(a.labels, b.labels).to_numpy()
    pairs_cells = sum(math.comb(int(count), 2) for count in table.ravel())
    pairs_a = sum(math.comb(int(count), 2) for count in table.sum(axis=1))
    pairs_b = sum(math.comb(int(count), 2) for count in table.sum(axis=0))
    total_pairs = math.comb(n, 2)
    # expected index and maximum, scaled by C(n,2) to stay in integers
    expected = pairs_a * pairs_b
    maximum = (pairs_a + pairs_b) * total_pairs
    denominator = maximum - 2 * expected
    if denominator == 0:
        return 1.0
    return float(2 * (pairs_cells * total_pairs - expected)) / float(denominator)


def ari_matrix(partitions: Sequence[Partition]) -> np.ndarray:
    """Symmetric matrix of pairwise adjusted Rand indexes, ones on the diagonal."""
    size = len(partitions)
    matrix = np.eye(size)
    for i in range(size):
        for j in range(i):
            matrix[i, j] = matrix[j, i] = adjusted_rand_index(partitions[i], partitions[j])
    return matrix


# ============================================
# PROFILES
# ============================================

def class_profiles(params: Parameters, spec: ModelSpec, data: Dataset, posteriors: np.ndarray) -> pd.DataFrame:
    """
    Class-specific response probabilities per item and category.

    Items with direct effects are averaged over each class's posterior-weighted
    Z values; items without them use the closed-form probabilities.

    Returns:
        DataFrame with columns ``item, category, class1..classS``
    """
    posteriors = np.asarray(posteriors, dtype=float)
    weights = posteriors / np.maximum(posteriors.sum(axis=0, keepdims=True), np.finfo(float).tiny)
    frames = []
    for item in range(spec.n_items):
        probs = np.exp(item_category_log_probs(params, spec, item, data.z))     # N x S x K
        profile = np.einsum("ns,nsk->sk", weights, probs)
        frame = pd.DataFrame(profile.T, columns=[f"class{c + 1}" for c in range(spec.s)])
        frame.insert(0, "category", np.arange(spec.cardinalities[item]))
        frame.insert(0, "item", data.item_names[item])
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def posterior_profiles(posteriors: np.ndarray, data: Dataset) -> pd.DataFrame:
    """
    Mean posterior membership among the observations giving each response.

    Returns:
        DataFrame with columns ``item, category, count, class1..classS``; categories nobody
        chose get NaN memberships
    """
    posteriors = np.asarray(posteriors, dtype=float)
    s = posteriors.shape[1]
    rows = []
    for item in range(data.n_items):
        codes = data.indicators[:, item]
        for category in range(data.cardinalities[item]):
            mask = codes == category
            means = posteriors[mask].mean(axis=0) if mask.any() else np.full(s, np.nan)
            rows.append([data.item_names[item], category, int(mask.sum()), *means])
    return pd.DataFrame(rows, columns=["item", "category", "count"] + [f"class{c + 1}" for c in range(s)])


def class_density_grid(params: Parameters, z_grid: Optional[np.ndarray] = None, n_points: int = 201) -> pd.DataFrame:
    """
    Weighted class densities pi_s * phi(z; mu_s, sigma2_s) and their sum over a grid.

    The default grid spans four standard deviations beyond the extreme class means.
    """
    if params.mu is None:
        raise ValueError("model has no class-specific distribution of Z")
    if z_grid is None:
        spread = 4.0 * float(np.sqrt(params.sigma2.max()))
        z_grid = np.linspace(params.mu.min() - spread, params.mu.max() + spread, n_points)
    z_grid = np.asarray(z_grid, dtype=float)
    proportions = softmax(params.theta)
    weighted = proportions[None, :] * np.exp(gaussian_logpdf(z_grid[:, None], params.mu[None, :], params.sigma2[None, :]))
    frame = pd.DataFrame(weighted, columns=[f"class{c + 1}" for c in range(params.n_classes)])
    frame.insert(0, "z", z_grid)
    frame["mixture"] = weighted.sum(axis=1)
    return frame


def partitions_from_posteriors(posterior_matrices: Sequence[np.ndarray]) -> List[Partition]:
    return [modal_assignment(p) for p in posterior_matrices]
