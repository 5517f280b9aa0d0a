"""`simulate`: draw a dataset from one of the population-study designs."""

import logging
from pathlib import Path
from typing import Optional

import click

from lcmix.cli.deps import COLUMN_SPEC_SUFFIX, model_option, out_option, seed_option
from lcmix.config import settings
from lcmix.crud import crud_calibration, crud_dataset, crud_truth
from lcmix.schemas.column_spec import ColumnSpec
from lcmix.schemas.model_spec import ModelVariant
from lcmix.schemas.study import StudyDesign
from lcmix.services.simulation import calibrate_separation, generate
from lcmix.utils.file_handler import ensure_output_dir

logger = logging.getLogger(__name__)


def resolve_magnitude(design: StudyDesign, out: Path, *, seed: int, target_r2: float) -> float:
    """Cached intercept magnitude for ``design.generator`` or a fresh calibration stored in the cache."""
    cache = crud_calibration.path_for(out)
    generator = design.generator.value
    magnitude = crud_calibration.get_magnitude(cache, generator, target_r2=target_r2, seed=seed)
    if magnitude is not None:
        logger.info(f"Using cached intercept magnitude {magnitude:.4f} for {generator}")
        return magnitude
    click.echo(f"Calibrating intercept magnitude for {generator} (target entropy R2 {target_r2})...")
    magnitude = calibrate_separation(design, target_r2=target_r2, seed=seed)
    crud_calibration.set_magnitude(cache, generator, magnitude, target_r2=target_r2, seed=seed)
    return magnitude


def write_simulation(design: StudyDesign, seed: int, out: Path, name: str = "data"):
    """Generate and write ``<name>.csv``, ``<name>.colspec`` and ``truth.yaml``; returns the dataset, truth and paths."""
    out = ensure_output_dir(out)
    dataset, truth, params = generate(design, seed)
    data_path = crud_dataset.write(dataset, out / f"{name}.csv")
    spec_path = crud_dataset.write_column_spec(ColumnSpec.for_dataset(dataset), out / f"{name}{COLUMN_SPEC_SUFFIX}")
    crud_truth.create_from_simulation(crud_truth.path_for(out), design=design, seed=seed, truth=truth, params=params)
    return dataset, truth, data_path, spec_path


@click.command("simulate")
@model_option(required=True)
@click.option("--n", "n", type=click.IntRange(min=1), default=lambda: settings.STUDY_N,
              show_default="settings.STUDY_N", help="Sample size")
@click.option("--intercept", type=click.FloatRange(min=0), default=None,
              help="Intercept magnitude b (calibrated when omitted)")
@click.option("--target-r2", type=click.FloatRange(0, 1, min_open=True, max_open=True),
              default=lambda: settings.CALIBRATION_TARGET_R2, show_default="settings.CALIBRATION_TARGET_R2",
              help="Entropy R2 targeted by the calibration")
@seed_option
@out_option
def simulate(model: str, n: int, intercept: Optional[float], target_r2: float, seed: int, out: Path) -> None:
    """Simulate data from the two-class, six-item design of the population studies."""
    design = StudyDesign(generator=ModelVariant(model), n=n)
    if intercept is None:
        intercept = resolve_magnitude(design, out, seed=seed, target_r2=target_r2)
    design = design.with_magnitude(intercept)
    dataset, truth, data_path, spec_path = write_simulation(design, seed, out)
    click.echo(f"Wrote {dataset.n} rows to {data_path} (column spec {spec_path}, b={intercept:.4f}, seed={seed})")
