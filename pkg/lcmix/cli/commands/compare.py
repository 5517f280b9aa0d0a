"""`compare`: agreement between the modal partitions of stored fits."""

from pathlib import Path
from typing import Optional, Sequence

import click

from lcmix.core.exceptions import IngestException
from lcmix.crud import crud_result, crud_truth
from lcmix.services.diagnostics import adjusted_rand_index, ari_matrix, partitions_from_posteriors
from lcmix.services.report_templates import build_compare_report


@click.command("compare")
@click.argument("results", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--truth", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Truth sidecar of a simulated dataset")
def compare(results: Sequence[Path], truth: Optional[Path]) -> None:
    """Adjusted Rand indexes between two or more RESULTS documents."""
    if len(results) < 2:
        raise click.UsageError("compare needs at least two result documents")
    fits = [crud_result.load_fit(path) for path in results]
    partitions = partitions_from_posteriors([result.posteriors for result in fits])
    sizes = {len(partition) for partition in partitions}
    if len(sizes) > 1:
        raise IngestException("Result documents were fitted on datasets of different sizes")
    names = [f"{result.spec.label}(S={result.spec.s}) {path}" for result, path in zip(fits, results)]

    truth_ari = None
    if truth is not None:
        true_partition = crud_truth.get_partition(truth)
        if len(true_partition) != len(partitions[0]):
            raise IngestException("Truth sidecar and fits cover different numbers of rows")
        truth_ari = [adjusted_rand_index(partition, true_partition) for partition in partitions]

    click.echo(build_compare_report(names=names, ari=ari_matrix(partitions), truth_ari=truth_ari))
