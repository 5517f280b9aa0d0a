"""Command group aggregating every lcmix subcommand."""

import logging
from typing import Any, Optional

import click
from pydantic import ValidationError

from lcmix import __version__
from lcmix.cli.commands import compare, fit, select, simulate, study, wald
from lcmix.core.exceptions import EXIT_INPUT_ERROR, LCMixException
from lcmix.core.logging_config import configure_logging

logger = logging.getLogger(__name__)


class LCMixGroup(click.Group):
    """Group that turns lcmix exceptions into an error message and their exit code."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except LCMixException as exc:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"Error: {exc.detail}", err=True)
            ctx.exit(exc.exit_code)
        except ValidationError as exc:
            error = exc.errors()[0]
            location = ".".join(str(part) for part in error.get("loc", ()))
            click.echo(f"Error: invalid input{f' ({location})' if location else ''}: {error['msg']}", err=True)
            ctx.exit(EXIT_INPUT_ERROR)


@click.group(cls=LCMixGroup)
@click.version_option(__version__, prog_name="lcmix")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Override settings.LOG_LEVEL")
def cli(log_level: Optional[str]) -> None:
    """Latent class models with a continuous external variable: LCreg, LCdist and LCcw."""
    configure_logging(log_level)


cli.add_command(simulate.simulate)
cli.add_command(fit.fit_command)
cli.add_command(select.select)
cli.add_command(compare.compare)
cli.add_command(wald.wald)
cli.add_command(study.study)

__all__ = ["cli"]
