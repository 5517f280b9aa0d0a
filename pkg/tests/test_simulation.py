import numpy as np
import pytest

from lcmix.core.exceptions import CalibrationException, InvalidModelSpecException
from lcmix.schemas import FitConfig, ModelVariant, StudyDesign
from lcmix.services.estimation import fit
from lcmix.services.likelihood import log_likelihood
from lcmix.services.simulation import calibrate_separation, generate, separation_r2, true_parameters
from tests.conftest import design_for


def test_generate_is_deterministic():
    design = design_for(ModelVariant.LCCW, 500)
    first, truth_a, _ = generate(design, seed=3)
    second, truth_b, _ = generate(design, seed=3)
    np.testing.assert_array_equal(first.indicators, second.indicators)
    np.testing.assert_array_equal(first.z, second.z)
    np.testing.assert_array_equal(truth_a.labels, truth_b.labels)

    other, _, _ = generate(design, seed=4)
    assert not np.array_equal(first.z, other.z)


def test_lcdist_design_shares_and_means():
    data, truth, _ = generate(design_for(ModelVariant.LCDIST, 30000), seed=1)
    shares = np.bincount(truth.labels, minlength=2) / data.n
    np.testing.assert_allclose(shares, [0.7, 0.3], atol=0.01)
    means = [data.z[truth.labels == c].mean() for c in range(2)]
    np.testing.assert_allclose(means, [-1.0, 1.0], atol=0.03)
    assert data.column_names == ("item1", "item2", "item3", "item4", "item5", "item6", "z")


def test_lcreg_design_external_is_standard_normal():
    data, _, params = generate(design_for(ModelVariant.LCREG, 30000), seed=2)
    assert abs(data.z.mean()) < 0.02
    assert abs(data.z.var() - 1.0) < 0.03
    assert params.mu is None and params.sigma2 is None


def test_zero_effects_give_fair_coins():
    design = StudyDesign(generator=ModelVariant.LCCW, n=30000, slopes=(0.0, 0.0), intercept_magnitude=0.0)
    data, _, _ = generate(design, seed=5)
    np.testing.assert_allclose(data.indicators.mean(axis=0), 0.5, atol=0.02)


def test_true_parameters_follow_the_design():
    params = true_parameters(design_for(ModelVariant.LCCW, 10, b=2.0))
    assert params.theta[1] == pytest.approx(np.log(0.3 / 0.7))
    np.testing.assert_allclose(params.beta0[0][:, 1], [2.0, -2.0])
    np.testing.assert_allclose(params.beta[3][:, 1], [-0.5, 1.0])
    np.testing.assert_allclose(params.mu, [-1.0, 1.0])

    lcdist = true_parameters(design_for(ModelVariant.LCDIST, 10))
    assert np.all(lcdist.beta[0] == 0.0)


def test_generate_needs_a_magnitude():
    with pytest.raises(InvalidModelSpecException):
        generate(StudyDesign(generator=ModelVariant.LCDIST, n=10), seed=0)


def test_fitted_log_likelihood_beats_truth():
    design = design_for(ModelVariant.LCCW, 2000)
    data, _, params = generate(design, seed=8)
    result = fit(design.model_spec, data, FitConfig(n_starts=4, rng_seed=8))
    assert result.loglik >= log_likelihood(params, design.model_spec, data)


def test_separation_grows_with_intercept_magnitude():
    design = design_for(ModelVariant.LCDIST, 2000)
    config = FitConfig(n_starts=3, rng_seed=0)
    assert separation_r2(design, 2.0, 0, config) > separation_r2(design, 0.5, 0, config)


def test_calibration_rejects_target_outside_the_bracket():
    # Z alone separates the LCdist classes, so R2 stays well above 0.01 even at b = 0.1
    design = design_for(ModelVariant.LCDIST, 2000)
    with pytest.raises(CalibrationException) as excinfo:
        calibrate_separation(design, target_r2=0.01, seed=0, config=FitConfig(n_starts=2, rng_seed=0), n=1000)
    low, high = excinfo.value.achieved
    assert 0.01 < low <= high


def test_calibration_rejects_invalid_target():
    with pytest.raises(ValueError):
        calibrate_separation(design_for(ModelVariant.LCDIST, 100), target_r2=1.5)


# ============================================
# POPULATION SCALE
# ============================================

@pytest.mark.slow
def test_calibration_reaches_target():
    design = StudyDesign(generator=ModelVariant.LCDIST)
    b = calibrate_separation(design, target_r2=0.7, seed=0)
    config = FitConfig(n_starts=5, rng_seed=0)
    r2 = separation_r2(design.model_copy(update={"n": 20000}), b, 0, config)
    assert 0.68 <= r2 <= 0.72


@pytest.mark.slow
def test_bracket_edges_straddle_target():
    design = StudyDesign(generator=ModelVariant.LCDIST, n=20000)
    config = FitConfig(n_starts=5, rng_seed=0)
    assert separation_r2(design, 0.1, 0, config) < 0.7 < separation_r2(design, 5.0, 0, config)
