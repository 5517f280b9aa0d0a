"""Shared fixtures and helpers for the lcmix test-suite."""

from typing import Sequence

import numpy as np
import pytest

from lcmix.schemas import Dataset, FitConfig, ModelSpec, ModelVariant, Parameters, SlopeConstraint, StudyDesign
from lcmix.schemas.model_spec import VarianceMode
from lcmix.services.simulation import generate


# ============================================
# SLOW MARKER
# ============================================

def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run population-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ============================================
# BUILDERS
# ============================================

def random_dataset(rng: np.random.Generator, n: int, cardinalities: Sequence[int]) -> Dataset:
    indicators = np.column_stack([rng.integers(0, k, size=n) for k in cardinalities])
    return Dataset(
        indicators=indicators,
        cardinalities=tuple(cardinalities),
        z=rng.normal(size=n),
        column_names=tuple(f"item{j + 1}" for j in range(len(cardinalities))) + ("z",),
    )


def random_parameters(spec: ModelSpec, rng: np.random.Generator) -> Parameters:
    s = spec.s
    theta = np.concatenate([[0.0], rng.normal(size=s - 1)])
    mu = sigma2 = None
    if spec.models_z:
        mu = rng.normal(size=s)
        if spec.variance_mode == VarianceMode.COMMON:
            sigma2 = np.full(s, rng.uniform(0.5, 2.0))
        else:
            sigma2 = rng.uniform(0.5, 2.0, size=s)
    beta0, beta = [], []
    for k, constraint in zip(spec.cardinalities, spec.slope_constraints):
        b0 = np.zeros((s, k))
        b0[:, 1:] = rng.normal(size=(s, k - 1))
        b = np.zeros((s, k))
        if constraint == SlopeConstraint.FREE:
            b[:, 1:] = 0.5 * rng.normal(size=(s, k - 1))
        elif constraint == SlopeConstraint.EQUAL:
            b[:, 1:] = 0.5 * rng.normal(size=k - 1)
        beta0.append(b0)
        beta.append(b)
    return Parameters(theta=theta, mu=mu, sigma2=sigma2, beta0=tuple(beta0), beta=tuple(beta))


def design_for(generator: ModelVariant, n: int, b: float = 1.5) -> StudyDesign:
    return StudyDesign(generator=generator, n=n, intercept_magnitude=b)


# ============================================
# FIXTURES
# ============================================

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def fast_config() -> FitConfig:
    return FitConfig(n_starts=4, rng_seed=11)


@pytest.fixture
def lcdist_data():
    """(dataset, truth, params) from the LCdist design, n = 400."""
    return generate(design_for(ModelVariant.LCDIST, 400), seed=5)


@pytest.fixture
def lccw_data():
    """(dataset, truth, params) from the LCcw design, n = 400."""
    return generate(design_for(ModelVariant.LCCW, 400), seed=6)


@pytest.fixture
def lcreg_data():
    """(dataset, truth, params) from the LCreg design, n = 400."""
    return generate(design_for(ModelVariant.LCREG, 400), seed=7)
