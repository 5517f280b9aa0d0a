"""Schemas for simulated population-study designs."""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from lcmix.schemas.model_spec import ModelSpec, ModelVariant


class StudyDesign(BaseModel):
    """
    Generating model of a population study.

    Defaults reproduce the two-class, six-item design: shares (0.7, 0.3), Z means (-1, 1)
    with unit variance for LCdist/LCcw (standard normal for LCreg), slopes -0.5 / 1.0 on
    every item for LCreg/LCcw, and intercepts +b / -b.
    """

    model_config = ConfigDict(frozen=True)

    generator: ModelVariant
    n: int = Field(30000, ge=1)
    s: int = Field(2, ge=1)
    j: int = Field(6, ge=1)
    mix: Tuple[float, ...] = (0.7, 0.3)
    z_means: Tuple[float, ...] = (-1.0, 1.0)
    z_variance: float = Field(1.0, gt=0)
    slopes: Tuple[float, ...] = (-0.5, 1.0)
    intercept_pattern: Tuple[float, ...] = (1.0, -1.0)
    intercept_magnitude: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def check_lengths(self) -> "StudyDesign":
        for name in ("mix", "z_means", "slopes", "intercept_pattern"):
            if len(getattr(self, name)) != self.s:
                raise ValueError(f"{name} needs one entry per class ({self.s})")
        mix = np.asarray(self.mix)
        if np.any(mix <= 0) or not np.isclose(mix.sum(), 1.0, atol=1e-12):
            raise ValueError("mix must be positive and sum to 1")
        return self

    @property
    def model_spec(self) -> ModelSpec:
        """The correctly specified model for data from this design."""
        return ModelSpec(variant=self.generator, s=self.s, cardinalities=(2,) * self.j)

    def with_magnitude(self, b: float) -> "StudyDesign":
        return self.model_copy(update={"intercept_magnitude": float(b)})
