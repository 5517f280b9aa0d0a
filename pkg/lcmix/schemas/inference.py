"""Schemas for Wald tests and parameter tables."""

from typing import Optional

from pydantic import BaseModel, Field


def significance_stars(p_value: Optional[float]) -> str:
    """*** p<0.01, ** p<0.05, * p<0.1."""
    if p_value is None:
        return ""
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.1:
        return "*"
    return ""


class WaldResult(BaseModel):
    statistic: float = Field(..., ge=0)
    df: int = Field(..., ge=1)
    p_value: float = Field(..., ge=0, le=1)
    constraint_description: str = ""

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)


class ParameterEstimate(BaseModel):
    """One row of the parameter table."""

    name: str
    estimate: float
    se: Optional[float] = None
    z: Optional[float] = None
    p_value: Optional[float] = None

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)
