"""Reading and writing datasets: CSV files plus their column-spec and slope files."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from lcmix.core.exceptions import IngestException, InvalidDatasetException
from lcmix.schemas.column_spec import ColumnEntry, ColumnRole, ColumnSpec, ColumnType, IngestReport
from lcmix.schemas.dataset import Dataset
from lcmix.schemas.model_spec import SlopeConstraint

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_NOMINAL = re.compile(r"^nominal\((\d+)\)$")
LOG_TOKEN = "log"


def _spec_lines(path: PathLike) -> List[Tuple[int, str, str]]:
    """Non-blank ``name = value`` lines of a line-oriented spec file, comments removed."""
    path = Path(path)
    if not path.exists():
        raise IngestException(f"File not found: {path}")
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise IngestException(f"{path}:{lineno}: expected 'name = value', got '{line}'")
            name, value = (part.strip() for part in line.split("=", 1))
            if not name:
                raise IngestException(f"{path}:{lineno}: missing column name")
            entries.append((lineno, name, value))
    return entries


def _parse_entry(name: str, value: str) -> ColumnEntry:
    tokens = [token.strip() for token in value.split(",") if token.strip()]
    if not tokens:
        raise ValueError("missing role")
    role = ColumnRole(tokens[0])
    if role == ColumnRole.IGNORE:
        return ColumnEntry(name=name, role=role)
    if len(tokens) < 2:
        raise ValueError(f"role '{role.value}' needs a type")
    kind_token, rest = tokens[1], tokens[2:]

    match = _NOMINAL.match(kind_token)
    if match:
        k = int(match.group(1))
        labels = tuple(rest) if rest else tuple(str(code) for code in range(k))
        if len(labels) != k:
            raise ValueError(f"nominal({k}) lists {len(labels)} labels")
        return ColumnEntry(name=name, role=role, kind=ColumnType.NOMINAL, labels=labels)

    kind = ColumnType(kind_token)
    if kind == ColumnType.DICHOTOMOUS:
        labels = tuple(rest) if rest else ("0", "1")
        if len(labels) != 2:
            raise ValueError(f"dichotomous column lists {len(labels)} labels")
        return ColumnEntry(name=name, role=role, kind=kind, labels=labels)

    unknown = [token for token in rest if token != LOG_TOKEN]
    if unknown:
        raise ValueError(f"unexpected tokens {unknown} after 'continuous'")
    return ColumnEntry(name=name, role=role, kind=kind, log=LOG_TOKEN in rest)


def _format_entry(entry: ColumnEntry) -> str:
    if entry.role == ColumnRole.IGNORE:
        return f"{entry.name} = ignore"
    if entry.kind == ColumnType.CONTINUOUS:
        suffix = f",{LOG_TOKEN}" if entry.log else ""
        return f"{entry.name} = {entry.role.value},continuous{suffix}"
    kind = "dichotomous" if entry.kind == ColumnType.DICHOTOMOUS else f"nominal({entry.n_categories})"
    return f"{entry.name} = {entry.role.value},{kind},{','.join(entry.labels)}"


class CRUDDataset:
    """CSV datasets described by a column-spec file."""

    # ----- Column specs -----
    def read_column_spec(self, path: PathLike) -> ColumnSpec:
        """Parse ``name = role,type[,labels...]`` lines into a `ColumnSpec`."""
        entries = []
        for lineno, name, value in _spec_lines(path):
            try:
                entries.append(_parse_entry(name, value))
            except (ValueError, ValidationError) as exc:
                raise IngestException(f"{path}:{lineno}: invalid entry for '{name}': {exc}") from exc
        try:
            return ColumnSpec(columns=tuple(entries))
        except ValidationError as exc:
            raise IngestException(f"{path}: {exc.errors()[0]['msg']}") from exc

    def write_column_spec(self, column_spec: ColumnSpec, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [_format_entry(entry) for entry in column_spec.columns]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info(f"Wrote column spec to {path}")
        return path

    # ----- Slope constraints -----
    def read_slope_constraints(
        self,
        path: PathLike,
        item_names: Sequence[str],
        default: SlopeConstraint = SlopeConstraint.FREE,
    ) -> Tuple[SlopeConstraint, ...]:
        """
        Per-item slope constraints from ``item = free|equal|zero`` lines.

        Items not listed keep ``default``.
        """
        constraints: Dict[str, SlopeConstraint] = {}
        for lineno, name, value in _spec_lines(path):
            if name not in item_names:
                raise IngestException(f"{path}:{lineno}: '{name}' is not an indicator")
            try:
                constraints[name] = SlopeConstraint(value)
            except ValueError as exc:
                raise IngestException(f"{path}:{lineno}: unknown slope constraint '{value}'") from exc
        return tuple(constraints.get(name, default) for name in item_names)

    # ----- Read -----
    def ingest(
        self,
        csv_path: PathLike,
        spec_path: Optional[PathLike] = None,
        *,
        column_spec: Optional[ColumnSpec] = None,
        log_external: bool = False,
    ) -> Tuple[Dataset, IngestReport, ColumnSpec]:
        """
        Load a CSV file into a `Dataset`.

        Rows missing any used value are dropped listwise. Category labels are mapped
        to 0-based codes in the order the column spec lists them. With a ``log``
        directive (or ``log_external``) the external column is log-transformed after
        dropping rows where it is not positive.

        Returns:
            tuple: (dataset, ingest report, column spec used)

        Raises:
            IngestException: unreadable file, unknown label or non-numeric external value
        """
        if column_spec is None:
            if spec_path is None:
                raise IngestException("A column spec is required to ingest a CSV file")
            column_spec = self.read_column_spec(spec_path)
        external = column_spec.external
        if external is None:
            raise IngestException("Column spec declares no external (continuous) column")
        log_external = log_external or external.log

        csv_path = Path(csv_path)
        if not csv_path.exists():
            raise IngestException(f"File not found: {csv_path}")
        try:
            frame = pd.read_csv(
                csv_path, sep=",", decimal=".", encoding="utf-8",
                dtype=str, keep_default_na=False, na_values=[""],
            )
        except (pd.errors.ParserError, UnicodeDecodeError) as exc:
            raise IngestException(f"Could not parse {csv_path}: {exc}") from exc

        used = [entry.name for entry in column_spec.indicators] + [external.name]
        missing_columns = [name for name in used if name not in frame.columns]
        if missing_columns:
            raise IngestException("Column missing from CSV header", column=missing_columns[0])

        n_read = len(frame)
        frame = frame[used].apply(lambda column: column.str.strip())
        frame = frame.replace("", np.nan)
        complete = frame.notna().all(axis=1)
        n_missing = int((~complete).sum())
        frame = frame[complete]

        codes = np.empty((len(frame), len(column_spec.indicators)), dtype=np.int64)
        for item, entry in enumerate(column_spec.indicators):
            mapping = {label: code for code, label in enumerate(entry.labels)}
            mapped = frame[entry.name].map(mapping)
            unknown = mapped.isna()
            if unknown.any():
                row = unknown.idxmax()
                raise IngestException(
                    f"Unknown category label '{frame.at[row, entry.name]}'", row=int(row) + 1, column=entry.name
                )
            codes[:, item] = mapped.to_numpy(dtype=np.int64)

        z = np.empty(len(frame))
        for position, (row, value) in enumerate(frame[external.name].items()):
            try:
                z[position] = float(value)
            except ValueError as exc:
                raise IngestException(f"Non-numeric value '{value}'", row=int(row) + 1, column=external.name) from exc
            if not np.isfinite(z[position]):
                raise IngestException(f"Non-finite value '{value}'", row=int(row) + 1, column=external.name)

        n_nonpositive = 0
        if log_external:
            positive = z > 0
            n_nonpositive = int((~positive).sum())
            codes, z = codes[positive], np.log(z[positive])

        if n_missing:
            logger.warning(f"Dropped {n_missing} row(s) with missing values from {csv_path}")
        if n_nonpositive:
            logger.warning(f"Dropped {n_nonpositive} row(s) with non-positive '{external.name}' before the log transform")
        if len(z) == 0:
            raise IngestException(f"No usable rows left in {csv_path}")

        try:
            dataset = Dataset(
                indicators=codes,
                cardinalities=tuple(entry.n_categories for entry in column_spec.indicators),
                z=z,
                column_names=tuple(used),
            )
        except ValidationError as exc:
            raise InvalidDatasetException(f"{csv_path}: {exc.errors()[0]['msg']}") from exc
        report = IngestReport(
            n_read=n_read,
            n_missing_dropped=n_missing,
            n_nonpositive_dropped=n_nonpositive,
            n_used=dataset.n,
            log_external=log_external,
        )
        logger.info(f"Ingested {dataset.n} of {n_read} rows from {csv_path}")
        return dataset, report, column_spec

    # ----- Write -----
    def write(self, dataset: Dataset, path: PathLike, column_spec: Optional[ColumnSpec] = None) -> Path:
        """Write ``dataset`` as CSV, indicator codes replaced by their labels."""
        column_spec = column_spec or ColumnSpec.for_dataset(dataset)
        columns = {}
        for item, entry in enumerate(column_spec.indicators):
            labels = np.asarray(entry.labels, dtype=object)
            columns[entry.name] = labels[dataset.indicators[:, item]]
        columns[column_spec.external.name] = dataset.z
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns).to_csv(path, index=False, encoding="utf-8")
        logger.info(f"Wrote {dataset.n} rows to {path}")
        return path


crud_dataset = CRUDDataset()
