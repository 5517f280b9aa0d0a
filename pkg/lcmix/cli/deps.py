"""Shared options and helpers for the command modules."""

import logging
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import click
from pydantic import ValidationError

from lcmix.config import settings
from lcmix.core.exceptions import InvalidModelSpecException
from lcmix.crud import crud_dataset, crud_result
from lcmix.schemas.column_spec import ColumnSpec, IngestReport
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.document import ResultDocument
from lcmix.schemas.fit import FitConfig, FitResult
from lcmix.schemas.model_spec import ModelSpec, ModelVariant, SlopeConstraint, VarianceMode
from lcmix.services.diagnostics import class_density_grid, class_profiles, posterior_profiles
from lcmix.services.estimation import fit
from lcmix.services.inference import attach_inference
from lcmix.services.report_templates import build_fit_report
from lcmix.utils.file_handler import ensure_output_dir

logger = logging.getLogger(__name__)

MODEL_CHOICES = [variant.value for variant in ModelVariant]
COLUMN_SPEC_SUFFIX = ".colspec"


# ============================================
# OPTIONS
# ============================================

def model_option(**kwargs) -> Callable:
    return click.option(
        "--model", "model", type=click.Choice(MODEL_CHOICES), help="Model variant", **kwargs
    )


def seed_option(f: Callable) -> Callable:
    return click.option(
        "--seed", type=click.IntRange(0, 2**64 - 1), default=lambda: settings.DEFAULT_SEED,
        show_default="settings.DEFAULT_SEED", help="Seed for every random draw",
    )(f)


def out_option(f: Callable) -> Callable:
    return click.option(
        "--out", type=click.Path(file_okay=False, path_type=Path), default=lambda: Path(settings.OUTPUT_DIR),
        show_default="settings.OUTPUT_DIR", help="Output directory",
    )(f)


def fit_options(f: Callable) -> Callable:
    """EM options shared by every command that fits models."""
    options = [
        click.option("--starts", type=click.IntRange(min=1), default=lambda: settings.EM_N_STARTS,
                     show_default="settings.EM_N_STARTS", help="Number of random starts"),
        click.option("--start-iterations", type=click.IntRange(min=1), default=None,
                     help="Screen every start for this many EM iterations, then continue the best"),
        click.option("--parallel/--no-parallel", default=lambda: settings.PARALLEL_STARTS,
                     help="Run starts in worker threads"),
        seed_option,
    ]
    for option in reversed(options):
        f = option(f)
    return f


def data_options(f: Callable) -> Callable:
    """Options describing how to read and model the data file."""
    options = [
        click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     default=None, help="Column-spec file (default: DATA with .colspec suffix)"),
        click.option("--variance", type=click.Choice([mode.value for mode in VarianceMode]),
                     default=VarianceMode.HETEROSCEDASTIC.value, show_default=True,
                     help="Class-specific or common variance of Z"),
        click.option("--slopes", "slopes_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     default=None, help="Per-item slope constraints file (item = free|equal|zero)"),
        click.option("--log-external", is_flag=True, default=False,
                     help="Log-transform the external variable, dropping non-positive values"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


# ============================================
# HELPERS
# ============================================

def default_spec_path(data_path: Path) -> Path:
    return data_path.with_suffix(COLUMN_SPEC_SUFFIX)


def load_dataset(
    data_path: Path, spec_path: Optional[Path], log_external: bool
) -> Tuple[Dataset, IngestReport, ColumnSpec, Path]:
    spec_path = spec_path or default_spec_path(data_path)
    dataset, report, column_spec = crud_dataset.ingest(data_path, spec_path, log_external=log_external)
    if report.n_dropped:
        click.echo(
            f"Dropped {report.n_missing_dropped} row(s) with missing values and "
            f"{report.n_nonpositive_dropped} with non-positive external values; {report.n_used} used."
        )
    return dataset, report, column_spec, spec_path


def build_model_spec(
    model: str,
    classes: int,
    dataset: Dataset,
    variance: str = VarianceMode.HETEROSCEDASTIC.value,
    slopes_path: Optional[Path] = None,
) -> ModelSpec:
    """Model specification for ``dataset``; pydantic errors become `InvalidModelSpecException`."""
    variant = ModelVariant(model)
    constraints = None
    if slopes_path is not None:
        default = SlopeConstraint.ZERO if variant == ModelVariant.LCDIST else SlopeConstraint.FREE
        constraints = crud_dataset.read_slope_constraints(slopes_path, dataset.item_names, default)
    try:
        return ModelSpec(
            variant=variant,
            s=classes,
            cardinalities=dataset.cardinalities,
            variance_mode=VarianceMode(variance),
            slope_constraints=constraints,
        )
    except ValidationError as exc:
        raise InvalidModelSpecException(exc.errors()[0]["msg"]) from exc


def build_fit_config(starts: int, seed: int, parallel: bool, start_iterations: Optional[int]) -> FitConfig:
    return FitConfig(n_starts=starts, rng_seed=seed, parallel_starts=parallel, start_iterations=start_iterations)


def fit_with_inference(spec: ModelSpec, dataset: Dataset, config: FitConfig) -> FitResult:
    return attach_inference(fit(spec, dataset, config), dataset)


def write_fit_bundle(
    result: FitResult,
    dataset: Dataset,
    out: Path,
    *,
    config: FitConfig,
    data_path: Optional[Path] = None,
    spec_path: Optional[Path] = None,
    log_external: bool = False,
) -> Tuple[ResultDocument, str]:
    """
    Write result.yaml, posteriors.csv, profiles.csv, density.csv (models of Z) and report.txt.

    Returns:
        tuple: (result document, report text)
    """
    out = ensure_output_dir(out)
    document_path = crud_result.path_for(out)
    posteriors_path = crud_result.write_posteriors(result.posteriors, out / "posteriors.csv")
    document = crud_result.document_from_fit(
        result,
        path=document_path,
        seed=config.rng_seed,
        n_starts=config.n_starts,
        column_names=list(dataset.column_names),
        data_path=data_path,
        column_spec_path=spec_path,
        log_external=log_external,
        posteriors_path=posteriors_path,
    )
    crud_result.create(document_path, obj_in=document)

    profiles = class_profiles(result.params, result.spec, dataset, result.posteriors)
    profiles.to_csv(out / "profiles.csv", index=False)
    posterior_profiles(result.posteriors, dataset).to_csv(out / "posterior_profiles.csv", index=False)
    if result.spec.models_z:
        class_density_grid(result.params).to_csv(out / "density.csv", index=False)

    report = build_fit_report(fit=result, document=document)
    (out / "report.txt").write_text(report, encoding="utf-8")
    logger.info(f"Wrote fit bundle to {out}")
    return document, report


def parse_class_range(value: str) -> List[int]:
    """``"3"`` -> [3]; ``"1-5"`` -> [1, 2, 3, 4, 5]."""
    try:
        if "-" in value:
            low, high = (int(part) for part in value.split("-", 1))
        else:
            low = high = int(value)
    except ValueError as exc:
        raise click.BadParameter(f"expected S or S1-S2, got '{value}'") from exc
    if low < 1 or high < low:
        raise click.BadParameter(f"invalid class range '{value}'")
    return list(range(low, high + 1))
