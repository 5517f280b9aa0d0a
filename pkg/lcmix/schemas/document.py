"""Serializable documents written next to fitted models and simulated data."""

from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from lcmix.schemas.model_spec import ModelSpec
from lcmix.schemas.parameters import Parameters
from lcmix.schemas.study import StudyDesign


class ParametersDocument(BaseModel):
    """`Parameters` as plain nested lists."""

    theta: List[float]
    mu: Optional[List[float]] = None
    sigma2: Optional[List[float]] = None
    beta0: List[List[List[float]]]
    beta: List[List[List[float]]]

    @classmethod
    def from_parameters(cls, params: Parameters) -> "ParametersDocument":
        return cls(
            theta=params.theta.tolist(),
            mu=None if params.mu is None else params.mu.tolist(),
            sigma2=None if params.sigma2 is None else params.sigma2.tolist(),
            beta0=[b0.tolist() for b0 in params.beta0],
            beta=[b.tolist() for b in params.beta],
        )

    def to_parameters(self) -> Parameters:
        return Parameters(
            theta=np.asarray(self.theta),
            mu=None if self.mu is None else np.asarray(self.mu),
            sigma2=None if self.sigma2 is None else np.asarray(self.sigma2),
            beta0=tuple(np.asarray(b0) for b0 in self.beta0),
            beta=tuple(np.asarray(b) for b in self.beta),
        )


class ResultDocument(BaseModel):
    """Machine-readable fit result (``result.yaml``)."""

    model: ModelSpec
    parameters: ParametersDocument
    loglik: float
    bic: float
    n_params: int
    n_obs: int
    entropy_r2: float
    classification_error: float
    class_proportions: List[float]
    converged: bool
    n_iterations: int
    start_index: int
    seed: int
    n_starts: int
    parameter_names: List[str]
    se: Optional[List[float]] = None
    covariance: Optional[List[List[float]]] = None
    information_positive_definite: Optional[bool] = None
    warnings: List[str] = Field(default_factory=list)
    column_names: List[str]
    data_path: Optional[str] = None
    column_spec_path: Optional[str] = None
    log_external: bool = False
    posteriors_path: Optional[str] = None


class TruthDocument(BaseModel):
    """Sidecar of a simulated dataset: true labels and generating parameters."""

    design: StudyDesign
    seed: int
    model: ModelSpec
    parameters: ParametersDocument
    labels: List[int]


class CalibrationDocument(BaseModel):
    """Calibrated intercept magnitudes per generator, keyed by generator name."""

    target_r2: float
    seed: int
    magnitudes: Dict[str, float] = Field(default_factory=dict)
