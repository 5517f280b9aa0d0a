"""Hard class assignments."""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class Partition(BaseModel):
    """Class index per observation, 0-based."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: np.ndarray
    n_classes: Optional[int] = None

    @field_validator("labels", mode="before")
    @classmethod
    def coerce_labels(cls, v) -> np.ndarray:
        array = np.array(np.ravel(v), dtype=np.int64, copy=True)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def check_range(self) -> "Partition":
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("class labels must be non-negative")
        if self.n_classes is not None and self.labels.size and self.labels.max() >= self.n_classes:
            raise ValueError(f"class labels must lie in [0, {self.n_classes})")
        return self

    def __len__(self) -> int:
        return int(self.labels.size)
