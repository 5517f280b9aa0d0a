"""Persistence package - exports singleton stores for every file format."""

from .base import CRUDBase
from .dataset import crud_dataset
from .result import crud_result
from .study import crud_calibration, crud_truth


__all__ = [
    # Base
    "CRUDBase",
    # Stores
    "crud_dataset",
    "crud_result",
    "crud_truth",
    "crud_calibration",
]
