"""Result documents (``result.yaml``) and posterior CSV files."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from lcmix.core.exceptions import IngestException
from lcmix.crud.base import CRUDBase
from lcmix.schemas.document import ParametersDocument, ResultDocument
from lcmix.schemas.fit import FitResult
from lcmix.services.diagnostics import bic, classification_error, entropy_r2
from lcmix.services.inference import parameter_names
from lcmix.utils.file_handler import relative_reference, resolve_reference

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class CRUDResult(CRUDBase[ResultDocument]):
    # ----- Documents -----
    def document_from_fit(
        self,
        fit: FitResult,
        *,
        path: PathLike,
        seed: int,
        n_starts: int,
        column_names: List[str],
        data_path: Optional[PathLike] = None,
        column_spec_path: Optional[PathLike] = None,
        log_external: bool = False,
        posteriors_path: Optional[PathLike] = None,
    ) -> ResultDocument:
        """Summary document of ``fit``; file references are stored relative to ``path``."""

        def reference(target: Optional[PathLike]) -> Optional[str]:
            return None if target is None else relative_reference(target, path)

        return ResultDocument(
            model=fit.spec,
            parameters=ParametersDocument.from_parameters(fit.params),
            loglik=fit.loglik,
            bic=bic(fit.loglik, fit.n_params, fit.n),
            n_params=fit.n_params,
            n_obs=fit.n,
            entropy_r2=entropy_r2(fit.posteriors, fit.class_proportions),
            classification_error=classification_error(fit.posteriors),
            class_proportions=fit.class_proportions.tolist(),
            converged=fit.converged,
            n_iterations=fit.n_iterations,
            start_index=fit.start_index,
            seed=seed,
            n_starts=n_starts,
            parameter_names=parameter_names(fit.spec, list(column_names[:-1])),
            se=None if fit.se is None else fit.se.tolist(),
            covariance=None if fit.covariance is None else fit.covariance.tolist(),
            information_positive_definite=fit.information_positive_definite,
            warnings=list(fit.warnings),
            column_names=list(column_names),
            data_path=reference(data_path),
            column_spec_path=reference(column_spec_path),
            log_external=log_external,
            posteriors_path=reference(posteriors_path),
        )

    def fit_from_document(self, document: ResultDocument, path: PathLike) -> FitResult:
        """Rebuild a `FitResult` from a stored document and its posteriors file."""
        posteriors_path = resolve_reference(document.posteriors_path, path)
        if posteriors_path is None:
            raise IngestException(f"'{path}' does not reference a posteriors file")
        return FitResult(
            spec=document.model,
            params=document.parameters.to_parameters(),
            loglik=document.loglik,
            posteriors=self.read_posteriors(posteriors_path),
            n_params=document.n_params,
            converged=document.converged,
            n_iterations=document.n_iterations,
            start_index=document.start_index,
            warnings=list(document.warnings),
            se=None if document.se is None else np.asarray(document.se),
            covariance=None if document.covariance is None else np.asarray(document.covariance),
            information_positive_definite=document.information_positive_definite,
        )

    def load_fit(self, path: PathLike) -> FitResult:
        return self.fit_from_document(self.get_or_raise(path), path)

    # ----- Posteriors -----
    def write_posteriors(self, posteriors: np.ndarray, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = [f"class{c + 1}" for c in range(posteriors.shape[1])]
        frame = pd.DataFrame(posteriors, columns=columns)
        frame.insert(0, "modal", np.argmax(posteriors, axis=1) + 1)
        frame.to_csv(path, index=False)
        logger.info(f"Wrote posteriors to {path}")
        return path

    def read_posteriors(self, path: PathLike) -> np.ndarray:
        path = Path(path)
        if not path.exists():
            raise IngestException(f"File not found: {path}")
        frame = pd.read_csv(path, float_precision="round_trip")
        columns = [column for column in frame.columns if column.startswith("class")]
        if not columns:
            raise IngestException(f"'{path}' has no class columns")
        return frame[columns].to_numpy(dtype=np.float64)


crud_result = CRUDResult(ResultDocument, "result.yaml")
