"""Utility helpers."""

from .file_handler import ensure_output_dir, relative_reference, resolve_reference, sanitize_filename

__all__ = ["ensure_output_dir", "relative_reference", "resolve_reference", "sanitize_filename"]
