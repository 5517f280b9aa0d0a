"""Custom exceptions for lcmix.

Every exception carries a default ``detail`` message and the process ``exit_code``
the command line returns when it escapes a command.
"""

from typing import Iterable, Optional, Sequence, Tuple


EXIT_INPUT_ERROR = 1
EXIT_ESTIMATION_FAILURE = 2
EXIT_NUMERICAL_WARNING = 3


class LCMixException(Exception):
    """Base exception for lcmix."""

    exit_code: int = EXIT_INPUT_ERROR

    def __init__(self, detail: str = "lcmix error"):
        super().__init__(detail)
        self.detail = detail


class InvalidDatasetException(LCMixException):
    """Exception when a dataset breaks its invariants (codes, finiteness, shape)."""

    def __init__(self, detail: str = "Dataset is not valid"):
        super().__init__(detail)


class InvalidModelSpecException(LCMixException):
    """Exception when a model specification is inconsistent."""

    def __init__(self, detail: str = "Model specification is not valid"):
        super().__init__(detail)


class IngestException(LCMixException):
    """
    Exception while reading a CSV file against its column spec.

    Carries the offending row (1-based, header excluded) and column when known.

    Usage:
        >>> raise IngestException("unknown category label 'maybe'", row=3, column="owns_car")
    """

    def __init__(
        self,
        detail: str = "Failed to ingest data",
        *,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            detail = f"{detail} ({', '.join(location)})"
        super().__init__(detail)
        self.row = row
        self.column = column


class ParameterDomainException(LCMixException):
    """Exception when a parameter leaves its domain, e.g. a non-positive variance."""

    def __init__(self, detail: str = "Parameter outside its domain"):
        super().__init__(detail)


class NumericalException(LCMixException):
    """Exception when a likelihood evaluation turns non-finite."""

    exit_code = EXIT_ESTIMATION_FAILURE

    def __init__(self, detail: str = "Non-finite log-likelihood", *, row: Optional[int] = None):
        if row is not None:
            detail = f"{detail} at row {row}"
        super().__init__(detail)
        self.row = row


class DegenerateClassException(LCMixException):
    """Exception when a latent class loses all of its posterior mass."""

    exit_code = EXIT_ESTIMATION_FAILURE

    def __init__(self, class_index: int, detail: Optional[str] = None):
        super().__init__(detail or f"Latent class {class_index + 1} is empty")
        self.class_index = class_index


class FitFailedException(LCMixException):
    """Exception when every EM start ended degenerate or failed."""

    exit_code = EXIT_ESTIMATION_FAILURE

    def __init__(self, reasons: Sequence[Tuple[int, str]]):
        lines = [f"  start {index}: {reason}" for index, reason in reasons]
        super().__init__("All EM starts failed:\n" + "\n".join(lines))
        self.reasons = list(reasons)


class UnsupportedVariantException(LCMixException):
    """Exception when an operation does not apply to the model variant."""

    def __init__(self, detail: str = "Operation not supported for this model variant"):
        super().__init__(detail)


class ConstrainedItemException(LCMixException):
    """Exception when a direct-effect test targets an item whose slopes are constrained."""

    def __init__(self, item: int, constraint: str):
        super().__init__(
            f"Item {item + 1} has slopes constrained to '{constraint}'; direct-effect tests need free slopes"
        )
        self.item = item


class SingularConstraintException(LCMixException):
    """Exception when R Sigma R' of a Wald test is singular."""

    exit_code = EXIT_ESTIMATION_FAILURE

    def __init__(self, row: int):
        super().__init__(f"Constraint row {row + 1} is redundant (R Sigma R' is singular)")
        self.row = row


class InferenceNotAvailableException(LCMixException):
    """Exception when a test needs standard errors the fit does not carry."""

    def __init__(self, detail: str = "Fit has no covariance matrix; run attach_inference first"):
        super().__init__(detail)


class CalibrationException(LCMixException):
    """Exception when the target entropy R2 is outside the reachable bracket."""

    exit_code = EXIT_ESTIMATION_FAILURE

    def __init__(self, target: float, achieved: Iterable[float]):
        low, high = sorted(achieved)
        super().__init__(
            f"Target entropy R2 {target:.3f} unreachable; achieved range [{low:.3f}, {high:.3f}]"
        )
        self.target = target
        self.achieved = (low, high)


class NumericalWarningException(LCMixException):
    """Exception raised in strict mode when a fit finished with numerical warnings."""

    exit_code = EXIT_NUMERICAL_WARNING

    def __init__(self, warnings: Sequence[str]):
        super().__init__("Numerical warnings (strict mode):\n" + "\n".join(f"  - {w}" for w in warnings))
        self.warnings = list(warnings)


__all__ = [
    "EXIT_INPUT_ERROR",
    "EXIT_ESTIMATION_FAILURE",
    "EXIT_NUMERICAL_WARNING",
    "LCMixException",
    "InvalidDatasetException",
    "InvalidModelSpecException",
    "IngestException",
    "ParameterDomainException",
    "NumericalException",
    "DegenerateClassException",
    "FitFailedException",
    "UnsupportedVariantException",
    "ConstrainedItemException",
    "SingularConstraintException",
    "InferenceNotAvailableException",
    "CalibrationException",
    "NumericalWarningException",
]
