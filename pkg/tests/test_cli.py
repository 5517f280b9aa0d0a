import pytest
from click.testing import CliRunner

from lcmix.cli import cli
from lcmix.config import settings
from lcmix.core.exceptions import EXIT_INPUT_ERROR, EXIT_NUMERICAL_WARNING
from lcmix.crud import crud_calibration, crud_result


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    """LCcw data written by `simulate` plus an LCdist S=2 fit of it."""
    out = tmp_path_factory.mktemp("simulated")
    runner = CliRunner()
    result = runner.invoke(
        cli, ["simulate", "--model", "lccw", "--n", "300", "--intercept", "1.5", "--seed", "3", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    fitted = runner.invoke(
        cli,
        ["fit", str(out / "data.csv"), "--model", "lcdist", "--classes", "2", "--starts", "3", "--out", str(out / "lcdist")],
    )
    assert fitted.exit_code == 0, fitted.output
    return out


# ============================================
# SIMULATE / FIT
# ============================================

def test_simulate_writes_data_spec_and_truth(simulated):
    assert (simulated / "data.csv").exists()
    assert (simulated / "data.colspec").read_text().startswith("item1 = indicator,dichotomous,0,1")
    assert (simulated / "truth.yaml").exists()


def test_fit_writes_result_bundle(simulated):
    bundle = simulated / "lcdist"
    for name in ("result.yaml", "posteriors.csv", "profiles.csv", "posterior_profiles.csv", "density.csv", "report.txt"):
        assert (bundle / name).exists(), name
    document = crud_result.get_or_raise(bundle / "result.yaml")
    assert document.n_params == 17
    assert document.se is not None
    report = (bundle / "report.txt").read_text()
    assert "Class size" in report
    assert "Mean of Z" in report
    assert "Wald(=) p" in report


def test_fit_lccw_prints_direct_effects(simulated, runner, tmp_path):
    result = runner.invoke(
        cli,
        ["fit", str(simulated / "data.csv"), "--model", "lccw", "--classes", "2", "--starts", "2", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    assert "Direct effects of Z" in result.output
    assert "Wald(0) p" in result.output


def test_single_class_fit_has_no_equality_tests(simulated, runner, tmp_path):
    result = runner.invoke(
        cli,
        ["fit", str(simulated / "data.csv"), "--model", "lcdist", "--classes", "1", "--starts", "1", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    assert "Wald(=)" not in result.output


def test_fit_without_column_spec_is_an_input_error(runner, tmp_path):
    data = tmp_path / "plain.csv"
    data.write_text("item1,z\n0,1.0\n1,2.0\n", encoding="utf-8")
    result = runner.invoke(cli, ["fit", str(data), "--model", "lcdist", "--classes", "1", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT_ERROR
    assert "Error:" in result.output


def test_strict_fit_exits_on_numerical_warnings(simulated, runner, tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "EM_MAX_ITERATIONS", 1)
    result = runner.invoke(
        cli,
        [
            "fit", str(simulated / "data.csv"), "--model", "lccw", "--classes", "2",
            "--starts", "1", "--strict", "--out", str(tmp_path),
        ],
    )
    assert result.exit_code == EXIT_NUMERICAL_WARNING
    assert "did not converge" in result.output


# ============================================
# SELECT / COMPARE / WALD
# ============================================

def test_select_marks_minimum_bic(simulated, runner, tmp_path):
    result = runner.invoke(
        cli,
        ["select", str(simulated / "data.csv"), "--model", "lcdist", "--classes", "1-3", "--starts", "2", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    assert result.output.count("*") >= 2
    lines = (tmp_path / "selection.csv").read_text().strip().splitlines()
    assert len(lines) == 4


def test_select_single_value_range(simulated, runner, tmp_path):
    result = runner.invoke(
        cli,
        ["select", str(simulated / "data.csv"), "--model", "lcdist", "--classes", "2", "--starts", "1", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    assert len((tmp_path / "selection.csv").read_text().strip().splitlines()) == 2


def test_select_with_lcreg_prints_caveat(simulated, runner, tmp_path):
    result = runner.invoke(
        cli,
        [
            "select", str(simulated / "data.csv"), "--model", "lcreg", "--model", "lcdist",
            "--classes", "1", "--starts", "1", "--out", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "LCreg conditions on Z" in result.output


def test_select_rejects_bad_range(simulated, runner, tmp_path):
    result = runner.invoke(cli, ["select", str(simulated / "data.csv"), "--model", "lcdist", "--classes", "3-1"])
    assert result.exit_code == 2


def test_compare_fit_with_itself_and_truth(simulated, runner):
    path = str(simulated / "lcdist" / "result.yaml")
    result = runner.invoke(cli, ["compare", path, path, "--truth", str(simulated / "truth.yaml")])
    assert result.exit_code == 0, result.output
    assert "1.0000" in result.output
    assert "Against the true partition" in result.output


def test_compare_needs_two_results(simulated, runner):
    result = runner.invoke(cli, ["compare", str(simulated / "lcdist" / "result.yaml")])
    assert result.exit_code == 2


def test_wald_reports_stored_fit(simulated, runner):
    result = runner.invoke(cli, ["wald", str(simulated / "lcdist" / "result.yaml")])
    assert result.exit_code == 0, result.output
    assert "equal means of Z across classes" in result.output


def test_wald_recomputes_missing_covariance(simulated, runner, tmp_path):
    document = crud_result.get_or_raise(simulated / "lcdist" / "result.yaml")
    copy = tmp_path / "result.yaml"
    posteriors = simulated / "lcdist" / "posteriors.csv"
    crud_result.create(
        copy,
        obj_in=document.model_copy(
            update={
                "se": None,
                "covariance": None,
                "posteriors_path": str(posteriors.resolve()),
                "data_path": str((simulated / "data.csv").resolve()),
                "column_spec_path": str((simulated / "data.colspec").resolve()),
            }
        ),
    )
    result = runner.invoke(cli, ["wald", str(copy)])
    assert result.exit_code == 0, result.output
    assert "equal variances of Z across classes" in result.output


# ============================================
# STUDY
# ============================================

def test_study_smoke(runner, tmp_path):
    crud_calibration.set_magnitude(
        crud_calibration.path_for(tmp_path), "lcdist", 1.5, target_r2=settings.CALIBRATION_TARGET_R2, seed=0
    )
    result = runner.invoke(
        cli,
        ["study", "lcdist", "--n", "300", "--max-classes", "2", "--starts", "2", "--seed", "0", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    assert "Population study: lcdist data" in result.output
    assert (tmp_path / "lcdist" / "study.txt").exists()
    assert (tmp_path / "lcdist" / "lccw_s2" / "result.yaml").exists()
    assert (tmp_path / "lcdist" / "selection.csv").exists()


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "lcmix" in result.output
