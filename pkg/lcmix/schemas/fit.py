"""Pydantic schemas for EM configuration and fit results."""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from lcmix.config import settings
from lcmix.schemas.model_spec import ModelSpec
from lcmix.schemas.parameters import Parameters


class FitConfig(BaseModel):
    """EM settings; defaults come from `settings`."""

    model_config = ConfigDict(frozen=True)

    n_starts: int = Field(default_factory=lambda: settings.EM_N_STARTS, ge=1)
    max_em_iterations: int = Field(default_factory=lambda: settings.EM_MAX_ITERATIONS, ge=1)
    em_tolerance: float = Field(default_factory=lambda: settings.EM_TOLERANCE, gt=0)
    max_newton_iterations: int = Field(default_factory=lambda: settings.NEWTON_MAX_ITERATIONS, ge=1)
    newton_tolerance: float = Field(default_factory=lambda: settings.NEWTON_TOLERANCE, gt=0)
    rng_seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0, lt=2**64)
    parallel_starts: bool = Field(default_factory=lambda: settings.PARALLEL_STARTS)
    max_workers: int = Field(default_factory=lambda: settings.MAX_WORKERS, ge=1)

    # Start-set screening: short runs for every start, then only the best is continued.
    start_iterations: Optional[int] = Field(default=None, ge=1)
    start_tolerance: float = Field(default_factory=lambda: settings.EM_START_TOLERANCE, gt=0)


class StartReport(BaseModel):
    """Outcome of one random start."""

    index: int
    status: str                 # "ok", "degenerate" or "failed"
    loglik: Optional[float] = None
    n_iterations: int = 0
    converged: bool = False
    reason: Optional[str] = None


class FitResult(BaseModel):
    """
    Result of fitting one model.

    ``se`` and ``covariance`` are filled by the inference service and are aligned to
    the free-parameter layout of ``spec`` (variances on their natural scale).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    spec: ModelSpec
    params: Parameters
    loglik: float
    posteriors: np.ndarray
    n_params: int
    converged: bool
    n_iterations: int
    start_index: int
    loglik_trace: List[float] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    start_reports: List[StartReport] = Field(default_factory=list)
    se: Optional[np.ndarray] = None
    covariance: Optional[np.ndarray] = None
    information_positive_definite: Optional[bool] = None

    @field_validator("posteriors", mode="before")
    @classmethod
    def freeze_posteriors(cls, v) -> np.ndarray:
        array = np.array(v, dtype=np.float64, copy=True)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def check_posteriors(self) -> "FitResult":
        if self.posteriors.ndim != 2 or self.posteriors.shape[1] != self.spec.s:
            raise ValueError("posteriors must be an N x S matrix")
        if not np.allclose(self.posteriors.sum(axis=1), 1.0, rtol=0.0, atol=1e-10):
            raise ValueError("posterior rows must sum to 1")
        return self

    @property
    def n(self) -> int:
        return int(self.posteriors.shape[0])

    @property
    def class_proportions(self) -> np.ndarray:
        return self.params.class_proportions
