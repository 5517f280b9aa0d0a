"""`fit`: estimate one model and write its result bundle."""

import logging
from pathlib import Path
from typing import Optional

import click

from lcmix.cli.deps import (
    build_fit_config,
    build_model_spec,
    data_options,
    fit_options,
    fit_with_inference,
    load_dataset,
    model_option,
    out_option,
    write_fit_bundle,
)
from lcmix.core.exceptions import NumericalWarningException

logger = logging.getLogger(__name__)


@click.command("fit")
@click.argument("data", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@model_option(required=True)
@click.option("--classes", type=click.IntRange(min=1), required=True, help="Number of latent classes S")
@data_options
@fit_options
@out_option
@click.option("--strict", is_flag=True, default=False, help="Exit with code 3 when the fit raised numerical warnings")
def fit_command(
    data: Path,
    model: str,
    classes: int,
    spec_path: Optional[Path],
    variance: str,
    slopes_path: Optional[Path],
    log_external: bool,
    starts: int,
    start_iterations: Optional[int],
    parallel: bool,
    seed: int,
    out: Path,
    strict: bool,
) -> None:
    """Fit MODEL with S classes to DATA and print the report."""
    dataset, _, _, spec_path = load_dataset(data, spec_path, log_external)
    spec = build_model_spec(model, classes, dataset, variance, slopes_path)
    config = build_fit_config(starts, seed, parallel, start_iterations)
    result = fit_with_inference(spec, dataset, config)
    document, report = write_fit_bundle(
        result, dataset, out, config=config, data_path=data, spec_path=spec_path, log_external=log_external
    )
    click.echo(report)
    click.echo(f"Results written to {out}")
    if strict and document.warnings:
        raise NumericalWarningException(document.warnings)
