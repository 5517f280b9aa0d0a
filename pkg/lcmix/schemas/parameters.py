"""Pydantic schemas for model parameters."""

from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.special import softmax


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    array.flags.writeable = False
    return array


class Parameters(BaseModel):
    """
    Parameters of a latent class model with an external variable.

    Attributes:
        theta: length-S mixing logits, ``theta[0] == 0`` (first class is the reference)
        mu: class means of Z, ``None`` for LCreg
        sigma2: class variances of Z, ``None`` for LCreg (all equal under common variance)
        beta0: per item an S x K_j array of intercepts, column 0 fixed at 0
        beta: per item an S x K_j array of direct-effect slopes, column 0 fixed at 0
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta: np.ndarray
    mu: Optional[np.ndarray] = None
    sigma2: Optional[np.ndarray] = None
    beta0: Tuple[np.ndarray, ...]
    beta: Tuple[np.ndarray, ...]

    @field_validator("theta", mode="before")
    @classmethod
    def coerce_theta(cls, v) -> np.ndarray:
        return _frozen(np.ravel(v))

    @field_validator("mu", "sigma2", mode="before")
    @classmethod
    def coerce_gaussian(cls, v) -> Optional[np.ndarray]:
        return None if v is None else _frozen(np.ravel(v))

    @field_validator("beta0", "beta", mode="before")
    @classmethod
    def coerce_items(cls, v) -> Tuple[np.ndarray, ...]:
        return tuple(_frozen(np.atleast_2d(block)) for block in v)

    @model_validator(mode="after")
    def check_invariants(self) -> "Parameters":
        s = len(self.theta)
        if s < 1 or self.theta[0] != 0.0:
            raise ValueError("theta[0] must be exactly 0")
        if (self.mu is None) != (self.sigma2 is None):
            raise ValueError("mu and sigma2 must be given together")
        if self.mu is not None:
            if len(self.mu) != s or len(self.sigma2) != s:
                raise ValueError("mu and sigma2 need one entry per class")
            if not np.all(self.sigma2 > 0):
                raise ValueError("sigma2 entries must be strictly positive")
        if len(self.beta0) != len(self.beta):
            raise ValueError("beta0 and beta must cover the same items")
        for item, (b0, b) in enumerate(zip(self.beta0, self.beta)):
            if b0.shape != b.shape or b0.shape[0] != s or b0.shape[1] < 2:
                raise ValueError(f"item {item + 1}: intercepts and slopes must both be S x K_j")
            if np.any(b0[:, 0] != 0.0) or np.any(b[:, 0] != 0.0):
                raise ValueError(f"item {item + 1}: baseline category coefficients must be exactly 0")
        return self

    @property
    def n_classes(self) -> int:
        return int(len(self.theta))

    @property
    def class_proportions(self) -> np.ndarray:
        return softmax(self.theta)

    def permuted(self, order: Sequence[int]) -> "Parameters":
        """Same model with classes relabelled: new class ``c`` is old class ``order[c]``."""
        order = np.asarray(order, dtype=np.int64)
        theta = self.theta[order] - self.theta[order[0]]
        return Parameters(
            theta=theta,
            mu=None if self.mu is None else self.mu[order],
            sigma2=None if self.sigma2 is None else self.sigma2[order],
            beta0=tuple(b0[order] for b0 in self.beta0),
            beta=tuple(b[order] for b in self.beta),
        )
