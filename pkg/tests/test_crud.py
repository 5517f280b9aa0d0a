import numpy as np
import pytest

from lcmix.core.exceptions import IngestException
from lcmix.crud import crud_calibration, crud_dataset, crud_result, crud_truth
from lcmix.schemas import ColumnRole, ColumnSpec, ColumnType, FitConfig, ModelSpec, ModelVariant, SlopeConstraint
from lcmix.services.estimation import fit
from lcmix.services.likelihood import log_likelihood
from lcmix.services.simulation import generate
from tests.conftest import design_for

COLUMN_SPEC = """\
# household survey
owns_car = indicator,dichotomous,no,yes
region = indicator,nominal(3),north,centre,south
household_id = ignore
wealth = external,continuous
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ============================================
# COLUMN SPECS
# ============================================

def test_read_column_spec(tmp_path):
    spec = crud_dataset.read_column_spec(_write(tmp_path, "data.colspec", COLUMN_SPEC))
    assert [entry.name for entry in spec.indicators] == ["owns_car", "region"]
    assert spec.indicators[0].labels == ("no", "yes")
    assert spec.indicators[1].kind == ColumnType.NOMINAL
    assert spec.columns[2].role == ColumnRole.IGNORE
    assert spec.external.name == "wealth"
    assert not spec.external.log


def test_column_spec_round_trip(tmp_path):
    spec = crud_dataset.read_column_spec(_write(tmp_path, "a.colspec", COLUMN_SPEC + "extra = ignore\n"))
    path = crud_dataset.write_column_spec(spec, tmp_path / "b.colspec")
    assert crud_dataset.read_column_spec(path) == spec


def test_column_spec_rejects_wrong_label_count(tmp_path):
    path = _write(tmp_path, "bad.colspec", "region = indicator,nominal(3),north,south\nw = external,continuous\n")
    with pytest.raises(IngestException, match="nominal"):
        crud_dataset.read_column_spec(path)


def test_column_spec_rejects_line_without_assignment(tmp_path):
    with pytest.raises(IngestException, match="expected 'name = value'"):
        crud_dataset.read_column_spec(_write(tmp_path, "bad.colspec", "owns_car indicator\n"))


def test_read_slope_constraints(tmp_path):
    path = _write(tmp_path, "slopes.txt", "item2 = zero\nitem3 = equal  # pooled\n")
    constraints = crud_dataset.read_slope_constraints(path, ["item1", "item2", "item3"])
    assert constraints == (SlopeConstraint.FREE, SlopeConstraint.ZERO, SlopeConstraint.EQUAL)

    with pytest.raises(IngestException):
        crud_dataset.read_slope_constraints(_write(tmp_path, "bad.txt", "item9 = zero\n"), ["item1"])


# ============================================
# INGEST
# ============================================

def test_ingest_maps_labels_to_codes(tmp_path):
    spec_path = _write(tmp_path, "data.colspec", COLUMN_SPEC)
    csv_path = _write(
        tmp_path,
        "data.csv",
        "household_id,owns_car,region,wealth\n1,yes,south,10.5\n2,no,north,3\n3, yes ,centre,7.25\n",
    )
    dataset, report, _ = crud_dataset.ingest(csv_path, spec_path)
    np.testing.assert_array_equal(dataset.indicators, [[1, 2], [0, 0], [1, 1]])
    np.testing.assert_allclose(dataset.z, [10.5, 3.0, 7.25])
    assert dataset.cardinalities == (2, 3)
    assert dataset.column_names == ("owns_car", "region", "wealth")
    assert report.n_read == 3 and report.n_used == 3 and report.n_dropped == 0


def test_ingest_drops_rows_with_missing_values(tmp_path):
    spec_path = _write(tmp_path, "data.colspec", COLUMN_SPEC)
    csv_path = _write(
        tmp_path,
        "data.csv",
        "household_id,owns_car,region,wealth\n1,yes,south,10.5\n,no,north,\n3,yes,centre,7\n",
    )
    dataset, report, _ = crud_dataset.ingest(csv_path, spec_path)
    assert dataset.n == 2
    assert report.n_missing_dropped == 1


def test_ingest_log_directive_drops_non_positive_values(tmp_path):
    spec_path = _write(tmp_path, "data.colspec", COLUMN_SPEC.replace("external,continuous", "external,continuous,log"))
    csv_path = _write(
        tmp_path,
        "data.csv",
        "household_id,owns_car,region,wealth\n1,yes,south,10\n2,no,north,0\n3,yes,centre,-4\n4,no,south,1\n",
    )
    dataset, report, _ = crud_dataset.ingest(csv_path, spec_path)
    np.testing.assert_allclose(dataset.z, [np.log(10.0), 0.0])
    assert report.n_nonpositive_dropped == 2
    assert report.log_external


def test_ingest_unknown_label_names_row_and_column(tmp_path):
    spec_path = _write(tmp_path, "data.colspec", COLUMN_SPEC)
    csv_path = _write(tmp_path, "data.csv", "household_id,owns_car,region,wealth\n1,yes,south,1\n2,maybe,north,2\n")
    with pytest.raises(IngestException) as excinfo:
        crud_dataset.ingest(csv_path, spec_path)
    assert excinfo.value.row == 2
    assert excinfo.value.column == "owns_car"
    assert "maybe" in excinfo.value.detail


def test_ingest_requires_external_column(tmp_path):
    spec_path = _write(tmp_path, "data.colspec", "owns_car = indicator,dichotomous,no,yes\n")
    csv_path = _write(tmp_path, "data.csv", "owns_car\nyes\n")
    with pytest.raises(IngestException, match="external"):
        crud_dataset.ingest(csv_path, spec_path)


def test_ingest_missing_header_column(tmp_path):
    spec_path = _write(tmp_path, "data.colspec", COLUMN_SPEC)
    csv_path = _write(tmp_path, "data.csv", "owns_car,wealth\nyes,1\n")
    with pytest.raises(IngestException) as excinfo:
        crud_dataset.ingest(csv_path, spec_path)
    assert excinfo.value.column == "region"


def test_dataset_write_then_ingest_is_lossless(tmp_path):
    dataset, _, _ = generate(design_for(ModelVariant.LCCW, 200), seed=1)
    column_spec = ColumnSpec.for_dataset(dataset)
    crud_dataset.write(dataset, tmp_path / "data.csv", column_spec)
    crud_dataset.write_column_spec(column_spec, tmp_path / "data.colspec")

    loaded, report, _ = crud_dataset.ingest(tmp_path / "data.csv", tmp_path / "data.colspec")
    np.testing.assert_array_equal(loaded.indicators, dataset.indicators)
    np.testing.assert_array_equal(loaded.z, dataset.z)
    assert loaded.column_names == dataset.column_names
    assert report.n_used == 200


# ============================================
# DOCUMENTS
# ============================================

def test_result_document_reload_rescoring(tmp_path, lcdist_data):
    data, _, _ = lcdist_data
    spec = ModelSpec(variant=ModelVariant.LCDIST, s=2, cardinalities=data.cardinalities)
    result = fit(spec, data, FitConfig(n_starts=2, rng_seed=5))
    path = crud_result.path_for(tmp_path)
    posteriors_path = crud_result.write_posteriors(result.posteriors, tmp_path / "posteriors.csv")
    document = crud_result.document_from_fit(
        result,
        path=path,
        seed=5,
        n_starts=2,
        column_names=list(data.column_names),
        posteriors_path=posteriors_path,
    )
    crud_result.create(path, obj_in=document)

    reloaded = crud_result.load_fit(path)
    assert reloaded.spec == spec
    assert log_likelihood(reloaded.params, reloaded.spec, data) == pytest.approx(document.loglik, abs=1e-9)
    np.testing.assert_allclose(reloaded.posteriors, result.posteriors, rtol=0, atol=1e-15)
    assert crud_result.get(path).posteriors_path == "posteriors.csv"
    assert crud_result.get(path).bic == pytest.approx(-2 * result.loglik + 17 * np.log(data.n))


def test_missing_document_raises(tmp_path):
    assert crud_result.get(tmp_path / "none.yaml") is None
    with pytest.raises(IngestException):
        crud_result.load_fit(tmp_path / "none.yaml")


def test_invalid_document_raises(tmp_path):
    path = _write(tmp_path, "result.yaml", "loglik: not-a-number\n")
    with pytest.raises(IngestException):
        crud_result.get(path)


def test_truth_sidecar_round_trip(tmp_path):
    design = design_for(ModelVariant.LCDIST, 50)
    _, truth, params = generate(design, seed=2)
    path = crud_truth.path_for(tmp_path)
    crud_truth.create_from_simulation(path, design=design, seed=2, truth=truth, params=params)
    np.testing.assert_array_equal(crud_truth.get_partition(path).labels, truth.labels)
    np.testing.assert_array_equal(crud_truth.get(path).parameters.to_parameters().theta, params.theta)


def test_calibration_cache(tmp_path):
    path = crud_calibration.path_for(tmp_path)
    assert crud_calibration.get_magnitude(path, "lcdist", target_r2=0.7, seed=0) is None
    crud_calibration.set_magnitude(path, "lcdist", 1.25, target_r2=0.7, seed=0)
    crud_calibration.set_magnitude(path, "lccw", 1.5, target_r2=0.7, seed=0)
    assert crud_calibration.get_magnitude(path, "lcdist", target_r2=0.7, seed=0) == 1.25
    assert crud_calibration.get_magnitude(path, "lccw", target_r2=0.7, seed=0) == 1.5
    # another seed invalidates the cache
    assert crud_calibration.get_magnitude(path, "lcdist", target_r2=0.7, seed=1) is None

    crud_calibration.update(path, obj_in={"target_r2": 0.6})
    assert crud_calibration.get_magnitude(path, "lccw", target_r2=0.6, seed=0) == 1.5

    # a new seed starts a fresh cache instead of merging
    crud_calibration.set_magnitude(path, "lcreg", 2.0, target_r2=0.6, seed=3)
    assert crud_calibration.get(path).magnitudes == {"lcreg": 2.0}
