from .model_spec import (
    ModelVariant,
    VarianceMode,
    SlopeConstraint,
    ModelSpec,
    VARIANT_LABELS,
)
from .dataset import Dataset
from .parameters import Parameters
from .fit import FitConfig, StartReport, FitResult
from .inference import WaldResult, ParameterEstimate, significance_stars
from .partition import Partition
from .study import StudyDesign
from .column_spec import ColumnRole, ColumnType, ColumnEntry, ColumnSpec, IngestReport
from .document import ParametersDocument, ResultDocument, TruthDocument, CalibrationDocument


__all__ = [
    "ModelVariant",
    "VarianceMode",
    "SlopeConstraint",
    "ModelSpec",
    "VARIANT_LABELS",
    "Dataset",
    "Parameters",
    "FitConfig",
    "StartReport",
    "FitResult",
    "WaldResult",
    "ParameterEstimate",
    "significance_stars",
    "Partition",
    "StudyDesign",
    "ColumnRole",
    "ColumnType",
    "ColumnEntry",
    "ColumnSpec",
    "IngestReport",
    "ParametersDocument",
    "ResultDocument",
    "TruthDocument",
    "CalibrationDocument",
]
