"""Pydantic schemas for `Dataset` objects."""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


class Dataset(BaseModel):
    """
    N observations of J categorical indicators plus one continuous external variable.

    Indicator codes are 0-based: item j takes values in {0, ..., K_j - 1}.
    ``column_names`` lists the J indicator names followed by the external name.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indicators: np.ndarray
    cardinalities: Tuple[int, ...]
    z: np.ndarray
    column_names: Tuple[str, ...]

    @field_validator("indicators", mode="before")
    @classmethod
    def coerce_indicators(cls, v) -> np.ndarray:
        array = np.asarray(v)
        if array.ndim == 1:
            array = array[:, None]
        if array.ndim != 2:
            raise ValueError("indicators must be an N x J matrix")
        if array.size and not np.all(np.equal(np.mod(array, 1), 0)):
            raise ValueError("indicator codes must be integers")
        return _frozen_array(array, np.int64)

    @field_validator("z", mode="before")
    @classmethod
    def coerce_z(cls, v) -> np.ndarray:
        return _frozen_array(np.ravel(np.asarray(v, dtype=float)), np.float64)

    @model_validator(mode="after")
    def check_invariants(self) -> "Dataset":
        n, j = self.indicators.shape
        if n < 1 or j < 1:
            raise ValueError("dataset needs at least one observation and one indicator")
        if len(self.cardinalities) != j:
            raise ValueError(f"{len(self.cardinalities)} cardinalities for {j} indicator columns")
        if len(self.z) != n:
            raise ValueError(f"z has {len(self.z)} values for {n} observations")
        if len(self.column_names) != j + 1:
            raise ValueError(f"expected {j + 1} column names, got {len(self.column_names)}")
        for item, k in enumerate(self.cardinalities):
            if k < 2:
                raise ValueError(f"indicator '{self.column_names[item]}' needs at least 2 categories")
            codes = self.indicators[:, item]
            bad = np.flatnonzero((codes < 0) | (codes >= k))
            if bad.size:
                raise ValueError(
                    f"indicator '{self.column_names[item]}' has code {codes[bad[0]]} at row {bad[0]} "
                    f"outside 0..{k - 1}"
                )
        bad_z = np.flatnonzero(~np.isfinite(self.z))
        if bad_z.size:
            raise ValueError(f"z is not finite at row {bad_z[0]}")
        return self

    @property
    def n(self) -> int:
        return int(self.indicators.shape[0])

    @property
    def n_items(self) -> int:
        return int(self.indicators.shape[1])

    @property
    def item_names(self) -> Tuple[str, ...]:
        return self.column_names[:-1]

    @property
    def external_name(self) -> str:
        return self.column_names[-1]

    def one_hot(self, item: int) -> np.ndarray:
        """N x K_j indicator matrix of the responses to ``item``."""
        return np.eye(self.cardinalities[item])[self.indicators[:, item]]

    def take(self, rows) -> "Dataset":
        """Dataset restricted to (or repeating) the given row indices."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            indicators=self.indicators[rows],
            cardinalities=self.cardinalities,
            z=self.z[rows],
            column_names=self.column_names,
        )
