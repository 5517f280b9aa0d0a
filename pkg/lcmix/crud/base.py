"""Generic CRUD base class for YAML documents backed by pydantic schemas."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Generic, Optional, Type, TypeVar, Union

import yaml
from pydantic import BaseModel, ValidationError

from lcmix.core.exceptions import IngestException


SchemaType = TypeVar("SchemaType", bound=BaseModel)

logger = logging.getLogger(__name__)


class CRUDBase(Generic[SchemaType]):
    """Reusable store for one document schema.

    Every document is one YAML file; all methods take and return schema instances.
    """

    def __init__(self, schema: Type[SchemaType], filename: str):
        self.schema = schema
        self.filename = filename

    def path_for(self, directory: Union[str, Path]) -> Path:
        """Default location of the document inside an output directory."""
        return Path(directory) / self.filename

    # ----- Read -----
    def get(self, path: Union[str, Path]) -> Optional[SchemaType]:
        """Load one document; None if the file does not exist."""
        path = Path(path)
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
        try:
            return self.schema.model_validate(raw or {})
        except ValidationError as exc:
            raise IngestException(f"'{path}' is not a valid {self.schema.__name__}: {exc.errors()[0]['msg']}") from exc

    def get_or_raise(self, path: Union[str, Path]) -> SchemaType:
        document = self.get(path)
        if document is None:
            raise IngestException(f"File not found: {path}")
        return document

    # ----- Create -----
    def create(self, path: Union[str, Path], *, obj_in: SchemaType) -> SchemaType:
        """Write a document, replacing any existing file."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = obj_in.model_dump(mode="json")
        with open(path, "w", encoding="utf-8") as handle:
            yaml.safe_dump(data, handle, sort_keys=False, default_flow_style=None)
        logger.info(f"Wrote {self.schema.__name__} to {path}")
        return obj_in

    # ----- Update -----
    def update(self, path: Union[str, Path], *, obj_in: Union[SchemaType, Dict[str, Any]]) -> SchemaType:
        """Merge fields into an existing document (or create it from the fields alone)."""
        update_data = obj_in.model_dump(exclude_unset=True) if isinstance(obj_in, BaseModel) else dict(obj_in)
        current = self.get(path)
        merged = current.model_copy(update=update_data) if current else self.schema.model_validate(update_data)
        return self.create(path, obj_in=self.schema.model_validate(merged.model_dump()))
