"""Command-line interface for lcmix."""

from .cli import cli

__all__ = ["cli"]
