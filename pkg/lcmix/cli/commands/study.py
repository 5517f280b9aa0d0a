"""`study`: reproduce a population study end to end."""

import logging
from pathlib import Path
from typing import List, Optional

import click
import pandas as pd

from lcmix.cli.commands.select import selection_row, sweep
from lcmix.cli.commands.simulate import resolve_magnitude, write_simulation
from lcmix.cli.deps import MODEL_CHOICES, build_fit_config, fit_options, out_option, write_fit_bundle
from lcmix.config import settings
from lcmix.schemas.fit import FitResult
from lcmix.schemas.model_spec import ModelVariant
from lcmix.schemas.study import StudyDesign
from lcmix.services.diagnostics import adjusted_rand_index, ari_matrix, partitions_from_posteriors
from lcmix.services.inference import attach_inference
from lcmix.services.report_templates import build_selection_report, build_study_report, format_class_table
from lcmix.utils.file_handler import ensure_output_dir

logger = logging.getLogger(__name__)

STUDY_CHOICES = MODEL_CHOICES + ["all"]


def fits_table(fits: List[FitResult]) -> pd.DataFrame:
    rows = []
    for result in fits:
        row = selection_row(result)
        for c, share in enumerate(result.class_proportions):
            row[f"Class {c + 1}"] = share
        rows.append(row)
    if not rows:
        return pd.DataFrame()
    return pd.DataFrame(rows).drop(columns=["S"]).round(4)


def ari_table(fits: List[FitResult], truth) -> pd.DataFrame:
    partitions = partitions_from_posteriors([result.posteriors for result in fits])
    labels = [result.spec.label for result in fits]
    frame = pd.DataFrame(ari_matrix(partitions), columns=labels).round(4)
    frame.insert(0, "Model", labels)
    frame["Truth"] = [round(adjusted_rand_index(partition, truth), 4) for partition in partitions]
    return frame


def run_study(
    generator: ModelVariant,
    *,
    n: int,
    seed: int,
    out: Path,
    starts: int,
    start_iterations: Optional[int],
    parallel: bool,
    max_classes: int,
    target_r2: float,
) -> str:
    """One generator: calibrate (or reuse the cache), simulate, fit all models and build the report."""
    design = StudyDesign(generator=generator, n=n)
    magnitude = resolve_magnitude(design, out, seed=seed, target_r2=target_r2)
    design = design.with_magnitude(magnitude)
    study_dir = ensure_output_dir(out, generator.value)
    dataset, truth, data_path, spec_path = write_simulation(design, seed, study_dir)

    config = build_fit_config(starts, seed, parallel, start_iterations)
    results = sweep(dataset, MODEL_CHOICES, range(1, max_classes + 1), config, skip_failures=True)

    two_class = []
    for result in results:
        if result.spec.s != 2:
            continue
        result = attach_inference(result, dataset)
        write_fit_bundle(
            result, dataset, study_dir / f"{result.spec.variant.value}_s2",
            config=config, data_path=data_path, spec_path=spec_path,
        )
        two_class.append(result)

    selection = pd.DataFrame([selection_row(result) for result in results])
    selection.to_csv(study_dir / "selection.csv", index=False)
    report = build_study_report(
        generator=generator.value,
        seed=seed,
        n=n,
        magnitude=magnitude,
        fits=fits_table(two_class),
        classes="\n".join(format_class_table(result) for result in two_class),
        ari=ari_table(two_class, truth),
        selection=build_selection_report(selection, variants=MODEL_CHOICES),
    )
    (study_dir / "study.txt").write_text(report, encoding="utf-8")
    return report


@click.command("study")
@click.argument("study", type=click.Choice(STUDY_CHOICES))
@click.option("--n", "n", type=click.IntRange(min=1), default=lambda: settings.STUDY_N,
              show_default="settings.STUDY_N", help="Sample size of each simulated dataset")
@click.option("--max-classes", type=click.IntRange(min=2), default=lambda: settings.STUDY_MAX_CLASSES,
              show_default="settings.STUDY_MAX_CLASSES", help="Largest S in the BIC sweep")
@click.option("--target-r2", type=click.FloatRange(0, 1, min_open=True, max_open=True),
              default=lambda: settings.CALIBRATION_TARGET_R2, show_default="settings.CALIBRATION_TARGET_R2",
              help="Entropy R2 targeted by the separation calibration")
@fit_options
@out_option
def study(
    study: str,
    n: int,
    max_classes: int,
    target_r2: float,
    starts: int,
    start_iterations: Optional[int],
    parallel: bool,
    seed: int,
    out: Path,
) -> None:
    """Simulate STUDY data (or all three), fit LCreg, LCdist and LCcw and print the tables."""
    generators = list(ModelVariant) if study == "all" else [ModelVariant(study)]
    out = ensure_output_dir(out)
    for generator in generators:
        click.echo(f"Running the {generator.value} study (n={n}, seed={seed})...")
        report = run_study(
            generator,
            n=n,
            seed=seed,
            out=out,
            starts=starts,
            start_iterations=start_iterations,
            parallel=parallel,
            max_classes=max_classes,
            target_r2=target_r2,
        )
        click.echo(report)
