"""`select`: BIC sweep over the number of classes."""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import click
import pandas as pd

from lcmix.cli.deps import (
    MODEL_CHOICES,
    build_fit_config,
    build_model_spec,
    data_options,
    fit_options,
    load_dataset,
    out_option,
    parse_class_range,
)
from lcmix.config import settings
from lcmix.core.exceptions import FitFailedException
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.fit import FitConfig, FitResult
from lcmix.schemas.model_spec import VarianceMode
from lcmix.services.diagnostics import bic, classification_error, entropy_r2
from lcmix.services.estimation import fit
from lcmix.services.report_templates import build_selection_report
from lcmix.utils.file_handler import ensure_output_dir

logger = logging.getLogger(__name__)


def selection_row(result: FitResult) -> dict:
    return {
        "Model": result.spec.label,
        "S": result.spec.s,
        "LL": result.loglik,
        "BIC": bic(result.loglik, result.n_params, result.n),
        "#par": result.n_params,
        "Entropy R2": entropy_r2(result.posteriors, result.class_proportions),
        "Class. err.": classification_error(result.posteriors),
    }


def sweep(
    dataset: Dataset,
    models: Sequence[str],
    classes: Sequence[int],
    config: FitConfig,
    *,
    variance: str = VarianceMode.HETEROSCEDASTIC.value,
    slopes_path: Optional[Path] = None,
    skip_failures: bool = False,
) -> List[FitResult]:
    """Fit every model for every S, in order; with ``skip_failures`` failed fits are left out."""
    results = []
    for model in models:
        for s in classes:
            spec = build_model_spec(model, s, dataset, variance, slopes_path)
            try:
                results.append(fit(spec, dataset, config))
            except FitFailedException as exc:
                if not skip_failures:
                    raise
                logger.warning(f"Skipping {spec.label} S={s}: {exc.detail}")
                click.echo(f"{spec.label} S={s} failed on every start; left out of the table")
    return results


@click.command("select")
@click.argument("data", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--model", "models", type=click.Choice(MODEL_CHOICES), multiple=True, required=True,
              help="Model variant (repeat to sweep several)")
@click.option("--classes", default=lambda: f"1-{settings.STUDY_MAX_CLASSES}",
              show_default="1-settings.STUDY_MAX_CLASSES", help="Class range, e.g. 1-5")
@data_options
@fit_options
@out_option
def select(
    data: Path,
    models: Sequence[str],
    classes: str,
    spec_path: Optional[Path],
    variance: str,
    slopes_path: Optional[Path],
    log_external: bool,
    starts: int,
    start_iterations: Optional[int],
    parallel: bool,
    seed: int,
    out: Path,
) -> None:
    """Fit each MODEL for every S in the class range and tabulate BIC."""
    models = list(dict.fromkeys(models))
    dataset, _, _, _ = load_dataset(data, spec_path, log_external)
    config = build_fit_config(starts, seed, parallel, start_iterations)
    results = sweep(dataset, models, parse_class_range(classes), config, variance=variance, slopes_path=slopes_path)
    frame = pd.DataFrame([selection_row(result) for result in results])
    out = ensure_output_dir(out)
    frame.to_csv(out / "selection.csv", index=False)
    click.echo(build_selection_report(frame, variants=models))
