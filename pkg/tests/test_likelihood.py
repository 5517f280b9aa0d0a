import math

import numpy as np
import pytest
from scipy.special import expit

from lcmix.core.exceptions import ParameterDomainException
from lcmix.schemas import ModelSpec, ModelVariant, Parameters, SlopeConstraint
from lcmix.schemas.model_spec import VarianceMode
from lcmix.services.likelihood import (
    gaussian_logpdf,
    item_response_prob,
    log_component_density,
    log_component_matrix,
    log_likelihood,
    n_free_params,
    posteriors,
)
from tests.conftest import random_dataset, random_parameters


def _spec(variant: ModelVariant, s: int = 2, cardinalities=(2,) * 6, **kwargs) -> ModelSpec:
    return ModelSpec(variant=variant, s=s, cardinalities=cardinalities, **kwargs)


# ============================================
# PARAMETER COUNTS
# ============================================

@pytest.mark.parametrize(
    "variant,expected",
    [(ModelVariant.LCREG, 25), (ModelVariant.LCDIST, 17), (ModelVariant.LCCW, 29)],
)
def test_n_free_params_six_dichotomous_items_two_classes(variant, expected):
    assert n_free_params(_spec(variant)) == expected


def test_n_free_params_common_variance_counts_once():
    spec = _spec(ModelVariant.LCCW, variance_mode=VarianceMode.COMMON)
    assert n_free_params(spec) == 28


def test_n_free_params_nominal_and_constrained_items():
    spec = _spec(
        ModelVariant.LCCW,
        s=3,
        cardinalities=(3, 2, 2),
        slope_constraints=(SlopeConstraint.FREE, SlopeConstraint.EQUAL, SlopeConstraint.ZERO),
    )
    # mixing 2, gaussian 6, item1 2*3*2, item2 3 + 1, item3 3
    assert n_free_params(spec) == 2 + 6 + 12 + 4 + 3


# ============================================
# SINGLE-OBSERVATION TERMS
# ============================================

def test_item_response_prob_dichotomous_is_logistic(rng):
    spec = _spec(ModelVariant.LCCW)
    params = random_parameters(spec, rng)
    z = 0.7
    probs = item_response_prob(params, spec, 2, 1, z)
    expected = expit(params.beta0[2][1, 1] + z * params.beta[2][1, 1])
    assert probs.shape == (2,)
    assert probs[1] == pytest.approx(expected, abs=1e-12)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_item_response_prob_ignores_z_without_direct_effects(rng):
    spec = _spec(ModelVariant.LCDIST, cardinalities=(3, 2))
    params = random_parameters(spec, rng)
    np.testing.assert_allclose(
        item_response_prob(params, spec, 0, 0, -5.0), item_response_prob(params, spec, 0, 0, 5.0)
    )


def test_item_response_prob_rejects_bad_indices(rng):
    spec = _spec(ModelVariant.LCREG)
    params = random_parameters(spec, rng)
    with pytest.raises(IndexError):
        item_response_prob(params, spec, 6, 0, 0.0)
    with pytest.raises(IndexError):
        item_response_prob(params, spec, 0, 2, 0.0)


def test_gaussian_logpdf_rejects_non_positive_variance():
    with pytest.raises(ParameterDomainException):
        gaussian_logpdf(0.0, 0.0, 0.0)
    assert gaussian_logpdf(0.0, 0.0, 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi))


def test_log_component_density_rejects_bad_category(rng):
    spec = _spec(ModelVariant.LCDIST, cardinalities=(2, 2))
    params = random_parameters(spec, rng)
    with pytest.raises(IndexError):
        log_component_density(params, spec, [0, 2], 0.0, 0)


# ============================================
# LIKELIHOOD AND POSTERIORS
# ============================================

@pytest.mark.parametrize("variant", list(ModelVariant))
def test_log_likelihood_matches_probability_space_oracle(variant, rng):
    spec = _spec(variant, s=3, cardinalities=(2, 3, 2))
    params = random_parameters(spec, rng)
    data = random_dataset(rng, 30, spec.cardinalities)

    proportions = np.exp(params.theta) / np.exp(params.theta).sum()
    expected = 0.0
    for i in range(data.n):
        y, z = data.indicators[i], float(data.z[i])
        row = 0.0
        for c in range(spec.s):
            density = 1.0
            if spec.models_z:
                sd = math.sqrt(params.sigma2[c])
                density *= math.exp(-0.5 * ((z - params.mu[c]) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            for item, code in enumerate(y):
                density *= item_response_prob(params, spec, item, c, z)[code]
            row += proportions[c] * density
        expected += math.log(row)

    assert log_likelihood(params, spec, data) == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("variant", list(ModelVariant))
def test_component_matrix_matches_scalar_density(variant, rng):
    spec = _spec(variant, s=2, cardinalities=(3, 2))
    params = random_parameters(spec, rng)
    data = random_dataset(rng, 12, spec.cardinalities)
    matrix = log_component_matrix(params, spec, data)
    for i in range(data.n):
        for c in range(spec.s):
            scalar = log_component_density(params, spec, data.indicators[i], float(data.z[i]), c)
            assert matrix[i, c] == pytest.approx(scalar, abs=1e-10)


def test_posterior_rows_sum_to_one(rng):
    spec = _spec(ModelVariant.LCCW, s=4, cardinalities=(2, 2, 4))
    params = random_parameters(spec, rng)
    data = random_dataset(rng, 200, spec.cardinalities)
    post = posteriors(params, spec, data)
    assert post.shape == (200, 4)
    assert np.all(post >= 0)
    np.testing.assert_allclose(post.sum(axis=1), 1.0, rtol=0, atol=1e-10)


def test_lccw_with_zero_slopes_equals_lcdist(rng):
    lcdist = _spec(ModelVariant.LCDIST, s=2, cardinalities=(2, 3, 2))
    params = random_parameters(lcdist, rng)
    lccw = _spec(ModelVariant.LCCW, s=2, cardinalities=(2, 3, 2))
    data = random_dataset(rng, 50, lcdist.cardinalities)
    assert log_likelihood(params, lccw, data) == pytest.approx(log_likelihood(params, lcdist, data), abs=1e-6)


def test_single_class_posteriors_are_one(rng):
    spec = _spec(ModelVariant.LCREG, s=1, cardinalities=(2, 2))
    params = random_parameters(spec, rng)
    data = random_dataset(rng, 10, spec.cardinalities)
    np.testing.assert_allclose(posteriors(params, spec, data), np.ones((10, 1)), rtol=0, atol=1e-15)


def test_parameters_reject_mismatched_gaussian_part():
    with pytest.raises(ValueError):
        Parameters(
            theta=[0.0, 0.1],
            mu=[0.0, 1.0],
            sigma2=None,
            beta0=(np.zeros((2, 2)),),
            beta=(np.zeros((2, 2)),),
        )


# ============================================
# WORKED VALUES
# ============================================

def _one_item_params(b0_row, mu=None, sigma2=None, s=1, k=2) -> Parameters:
    beta0 = np.zeros((s, k))
    beta0[:, 1:] = b0_row
    return Parameters(
        theta=np.zeros(s),
        mu=mu,
        sigma2=sigma2,
        beta0=(beta0,),
        beta=(np.zeros((s, k)),),
    )


def test_item_response_prob_worked_values():
    spec = ModelSpec(variant=ModelVariant.LCDIST, s=1, cardinalities=(2,))
    np.testing.assert_allclose(item_response_prob(_one_item_params([0.0]), spec, 0, 0, 3.0), [0.5, 0.5])
    np.testing.assert_allclose(
        item_response_prob(_one_item_params([math.log(3.0)]), spec, 0, 0, 0.0), [0.25, 0.75]
    )
    spec3 = ModelSpec(variant=ModelVariant.LCDIST, s=1, cardinalities=(3,))
    probs = item_response_prob(_one_item_params([1.0, 1.0], k=3), spec3, 0, 0, 0.0)
    np.testing.assert_allclose(probs, [0.1554, 0.4223, 0.4223], atol=1e-4)


@pytest.mark.parametrize(
    "z,mu,sigma2,expected",
    [(0.0, 0.0, 1.0, -0.9189385332), (1.0, 1.0, 4.0, -1.6120857), (2.0, 0.0, 1.0, -2.9189385)],
)
def test_gaussian_logpdf_worked_values(z, mu, sigma2, expected):
    assert gaussian_logpdf(z, mu, sigma2) == pytest.approx(expected, abs=1e-7)


def test_log_component_density_worked_values():
    params = _one_item_params([math.log(3.0)], mu=[0.0], sigma2=[1.0])
    lcdist = ModelSpec(variant=ModelVariant.LCDIST, s=1, cardinalities=(2,))
    assert log_component_density(params, lcdist, [1], 0.0, 0) == pytest.approx(-1.2066, abs=1e-4)

    lcreg = ModelSpec(variant=ModelVariant.LCREG, s=1, cardinalities=(2,))
    reg_params = _one_item_params([math.log(3.0)])
    assert log_component_density(reg_params, lcreg, [1], 0.0, 0) == pytest.approx(math.log(0.75))


def test_prior_passes_through_identical_components(rng):
    spec = ModelSpec(variant=ModelVariant.LCDIST, s=2, cardinalities=(2,))
    params = Parameters(
        theta=[0.0, math.log(4.0)],
        mu=[0.5, 0.5],
        sigma2=[1.0, 1.0],
        beta0=(np.array([[0.0, 0.3], [0.0, 0.3]]),),
        beta=(np.zeros((2, 2)),),
    )
    data = random_dataset(rng, 20, spec.cardinalities)
    np.testing.assert_allclose(posteriors(params, spec, data), np.tile([0.2, 0.8], (20, 1)), atol=1e-12)


def test_duplicated_rows_double_the_log_likelihood(rng):
    spec = _spec(ModelVariant.LCCW, s=2, cardinalities=(2, 3))
    params = random_parameters(spec, rng)
    data = random_dataset(rng, 25, spec.cardinalities)
    doubled = data.take(np.concatenate([np.arange(25), np.arange(25)]))
    assert log_likelihood(params, spec, doubled) == pytest.approx(2.0 * log_likelihood(params, spec, data), rel=1e-12)
