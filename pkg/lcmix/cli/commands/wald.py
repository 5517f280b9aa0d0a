"""`wald`: Wald tests of a stored fit."""

import logging
from pathlib import Path

import click

from lcmix.core.exceptions import InferenceNotAvailableException
from lcmix.crud import crud_dataset, crud_result
from lcmix.services.inference import attach_inference
from lcmix.services.report_templates import build_wald_report
from lcmix.utils.file_handler import resolve_reference

logger = logging.getLogger(__name__)


@click.command("wald")
@click.argument("result", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def wald(result: Path) -> None:
    """Equal-means/variances and direct-effect tests for RESULT."""
    document = crud_result.get_or_raise(result)
    fit = crud_result.fit_from_document(document, result)
    if fit.covariance is None:
        if document.data_path is None:
            raise InferenceNotAvailableException("Result has no covariance and no data reference to recompute it")
        logger.info("Result has no covariance; recomputing it from the data")
        dataset, _, _ = crud_dataset.ingest(
            resolve_reference(document.data_path, result),
            resolve_reference(document.column_spec_path, result),
            log_external=document.log_external,
        )
        fit = attach_inference(fit, dataset)
    click.echo(build_wald_report(fit=fit, item_names=document.column_names[:-1]))
