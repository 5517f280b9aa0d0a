"""Output-path helpers for lcmix artifacts."""
import logging
import os
from pathlib import Path
from typing import Optional, Union

from lcmix.config import settings

# Setup logging
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ============================================
# NAMES
# ============================================

def sanitize_filename(filename: str) -> str:
    """
    Sanitize a name before using it as a file or directory name.

    Args:
        filename: Raw name, e.g. a study label or a column name

    Returns:
        Sanitized name (only alphanumeric, dash, underscore, and dot)
    """
    if not filename:
        return "unnamed"

    basename = Path(filename).name
    safe_chars = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.")
    sanitized = "".join(c if c in safe_chars else "_" for c in basename)

    # no hidden files
    while sanitized.startswith("."):
        sanitized = sanitized[1:]

    return sanitized if sanitized else "unnamed"


# ============================================
# DIRECTORIES
# ============================================

def ensure_output_dir(out: Optional[PathLike] = None, subdir: str = "") -> Path:
    """Ensure the output directory (default ``settings.OUTPUT_DIR``) exists and return it."""
    dir_path = Path(out) if out is not None else Path(settings.OUTPUT_DIR)
    if subdir:
        dir_path = dir_path / sanitize_filename(subdir)
    dir_path.mkdir(parents=True, exist_ok=True)
    return dir_path


def relative_reference(target: PathLike, document: PathLike) -> str:
    """Path of ``target`` as stored inside ``document``: relative to the document's directory."""
    return os.path.relpath(Path(target).resolve(), Path(document).resolve().parent)


def resolve_reference(reference: Optional[str], document: PathLike) -> Optional[Path]:
    """Inverse of `relative_reference`; absolute references pass through."""
    if reference is None:
        return None
    path = Path(reference)
    if path.is_absolute():
        return path
    return (Path(document).resolve().parent / path).resolve()
