"""Truth sidecars of simulated datasets and calibration caches."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from lcmix.crud.base import CRUDBase
from lcmix.schemas.document import CalibrationDocument, ParametersDocument, TruthDocument
from lcmix.schemas.parameters import Parameters
from lcmix.schemas.partition import Partition
from lcmix.schemas.study import StudyDesign


class CRUDTruth(CRUDBase[TruthDocument]):
    def create_from_simulation(
        self,
        path: Union[str, Path],
        *,
        design: StudyDesign,
        seed: int,
        truth: Partition,
        params: Parameters,
    ) -> TruthDocument:
        document = TruthDocument(
            design=design,
            seed=seed,
            model=design.model_spec,
            parameters=ParametersDocument.from_parameters(params),
            labels=truth.labels.tolist(),
        )
        return self.create(path, obj_in=document)

    def get_partition(self, path: Union[str, Path]) -> Partition:
        document = self.get_or_raise(path)
        return Partition(labels=document.labels, n_classes=document.design.s)


class CRUDCalibration(CRUDBase[CalibrationDocument]):
    def get_magnitude(self, path: Union[str, Path], generator: str, *, target_r2: float, seed: int) -> Optional[float]:
        """Cached magnitude for ``generator``; None when missing or cached for another target/seed."""
        document = self.get(path)
        if document is None or document.target_r2 != target_r2 or document.seed != seed:
            return None
        return document.magnitudes.get(generator)

    def set_magnitude(
        self, path: Union[str, Path], generator: str, magnitude: float, *, target_r2: float, seed: int
    ) -> CalibrationDocument:
        document = self.get(path)
        if document is None or document.target_r2 != target_r2 or document.seed != seed:
            fresh = CalibrationDocument(target_r2=target_r2, seed=seed, magnitudes={generator: float(magnitude)})
            return self.create(path, obj_in=fresh)
        return self.update(path, obj_in={"magnitudes": {**document.magnitudes, generator: float(magnitude)}})


crud_truth = CRUDTruth(TruthDocument, "truth.yaml")
crud_calibration = CRUDCalibration(CalibrationDocument, "calibration.yaml")
