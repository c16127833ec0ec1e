"""Typed rectangular tables with schema validation and CSV round-tripping.

A :class:`Dataset` is an immutable columnar table: continuous columns are
float64 arrays, categorical columns are integer level codes plus a label
list in the schema.  Missing values are rejected on load; matching and
synthesis have no missing-data semantics, so we fail loudly instead of
silently biasing results downstream.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class VarKind(enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class VariableSpec:
    """One column: a name, a kind, and (for categorical) its level labels."""

    name: str
    kind: VarKind
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be non-empty")
        if self.kind is VarKind.CATEGORICAL:
            if len(self.levels) == 0:
                raise ValueError(f"categorical variable {self.name!r} needs at least one level")
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"duplicate levels in variable {self.name!r}")
        elif self.levels:
            raise ValueError(f"continuous variable {self.name!r} must not declare levels")

    @property
    def is_continuous(self) -> bool:
        return self.kind is VarKind.CONTINUOUS


@dataclass(frozen=True)
class Schema:
    """Ordered collection of variable specs; order is the column order."""

    variables: tuple[VariableSpec, ...]

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names in schema")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def var(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(f"unknown variable {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    def continuous_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.is_continuous)

    def categorical_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if not v.is_continuous)


class Dataset:
    """Immutable typed table.

    Continuous cells are finite float64; categorical cells are stored as
    level codes into the schema's label list.  Arrays are made read-only so
    datasets can be shared freely across threads.
    """

    def __init__(self, schema: Schema, columns: Mapping[str, np.ndarray]):
        if set(columns) != set(schema.names):
            missing = set(schema.names) - set(columns)
            extra = set(columns) - set(schema.names)
            raise ValueError(f"columns do not match schema (missing={sorted(missing)}, extra={sorted(extra)})")
        n = None
        store: dict[str, np.ndarray] = {}
        for spec in schema.variables:
            raw = np.asarray(columns[spec.name])
            if raw.ndim != 1:
                raise ValueError(f"column {spec.name!r} must be one-dimensional")
            if n is None:
                n = raw.shape[0]
            elif raw.shape[0] != n:
                raise ValueError(f"column {spec.name!r} has {raw.shape[0]} rows, expected {n}")
            if spec.is_continuous:
                col = raw.astype(np.float64, copy=True)
                if col.size and not np.all(np.isfinite(col)):
                    raise ValueError(f"non-finite value in continuous column {spec.name!r}")
            else:
                col = raw.astype(np.int64, copy=True)
                if col.size and (col.min() < 0 or col.max() >= len(spec.levels)):
                    raise ValueError(f"level code out of range in column {spec.name!r}")
            col.flags.writeable = False
            store[spec.name] = col
        self.schema = schema
        self._columns = store
        self.n_rows = 0 if n is None else int(n)

    def column(self, name: str) -> np.ndarray:
        """Raw column in row order: floats for continuous, level codes for categorical."""
        if name not in self._columns:
            raise KeyError(f"unknown variable {name!r}")
        return self._columns[name]

    def labels(self, name: str) -> np.ndarray:
        """Categorical column as label strings."""
        spec = self.schema.var(name)
        if spec.is_continuous:
            raise ValueError(f"{name!r} is continuous, has no labels")
        lut = np.asarray(spec.levels, dtype=object)
        return lut[self._columns[name]]

    def row(self, i: int) -> dict[str, float | str]:
        """Row ``i`` as a name -> value mapping, categorical cells as labels."""
        out: dict[str, float | str] = {}
        for spec in self.schema.variables:
            v = self._columns[spec.name][i]
            out[spec.name] = float(v) if spec.is_continuous else spec.levels[int(v)]
        return out

    def with_column(self, name: str, values: np.ndarray) -> "Dataset":
        """New dataset with one column replaced (schema unchanged)."""
        cols = dict(self._columns)
        if name not in cols:
            raise KeyError(f"unknown variable {name!r}")
        cols[name] = np.asarray(values)
        return Dataset(self.schema, cols)

    def equals(self, other: "Dataset", float_tol: float = 0.0) -> bool:
        """Value equality: same variables/kinds/rows, labels compared for categoricals."""
        if self.schema.names != other.schema.names or self.n_rows != other.n_rows:
            return False
        for spec in self.schema.variables:
            ospec = other.schema.var(spec.name)
            if spec.kind is not ospec.kind:
                return False
            if spec.is_continuous:
                a, b = self.column(spec.name), other.column(spec.name)
                if not np.all(np.abs(a - b) <= float_tol):
                    return False
            else:
                if not np.array_equal(self.labels(spec.name), other.labels(spec.name)):
                    return False
        return True


def _parse_number(token: str) -> float | None:
    try:
        value = float(token)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(
    path: str | Path,
    schema_hint: Schema | None = None,
    categorical: Iterable[str] = (),
) -> Dataset:
    """Load an RFC-4180 CSV (UTF-8, header row) into a Dataset.

    Without ``schema_hint``, a column whose cells all parse as finite numbers
    becomes continuous; anything else becomes categorical with levels in
    first-appearance order.  Names in ``categorical`` are forced categorical
    with inferred levels.  With a hint, cells are validated against it.
    Empty cells are an error.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: missing header row") from None
        rows = list(reader)

    if len(set(header)) != len(header):
        raise ValueError(f"{path}: duplicate column names in header")
    width = len(header)
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise ValueError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
        for name, cell in zip(header, row):
            if cell == "":
                raise ValueError(f"{path}: line {lineno}: empty cell in column {name!r} (missing values are rejected)")

    if schema_hint is not None:
        if list(schema_hint.names) != header:
            raise ValueError(f"{path}: header {header} does not match hinted schema {list(schema_hint.names)}")
        specs = list(schema_hint.variables)
    else:
        forced = set(categorical)
        unknown = forced - set(header)
        if unknown:
            raise ValueError(f"{path}: categorical names not in header: {sorted(unknown)}")
        specs = []
        for j, name in enumerate(header):
            cells = [row[j] for row in rows]
            numeric = name not in forced and all(_parse_number(c) is not None for c in cells)
            if numeric:
                specs.append(VariableSpec(name, VarKind.CONTINUOUS))
            else:
                levels: list[str] = []
                seen = set()
                for c in cells:
                    if c not in seen:
                        seen.add(c)
                        levels.append(c)
                if not levels:
                    levels = ["<none>"]  # 0-row forced-categorical column
                specs.append(VariableSpec(name, VarKind.CATEGORICAL, tuple(levels)))
        # 0-row file with no hints: nothing to infer from, default continuous
        if not rows and not forced:
            specs = [VariableSpec(name, VarKind.CONTINUOUS) for name in header]

    columns: dict[str, np.ndarray] = {}
    for j, spec in enumerate(specs):
        cells = [row[j] for row in rows]
        if spec.is_continuous:
            values = np.empty(len(cells), dtype=np.float64)
            for i, c in enumerate(cells):
                num = _parse_number(c)
                if num is None:
                    raise ValueError(
                        f"{path}: line {i + 2}: cell {c!r} in continuous column {spec.name!r} is not a finite number"
                    )
                values[i] = num
        else:
            index = {lab: k for k, lab in enumerate(spec.levels)}
            values = np.empty(len(cells), dtype=np.int64)
            for i, c in enumerate(cells):
                if c not in index:
                    raise ValueError(f"{path}: line {i + 2}: value {c!r} not in levels of column {spec.name!r}")
                values[i] = index[c]
        columns[spec.name] = values

    return Dataset(Schema(tuple(specs)), columns)


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset as UTF-8 RFC-4180 CSV with a header row.

    Continuous cells use shortest round-trip float formatting, so
    ``load_csv(write_csv(ds))`` reproduces values exactly.
    """
    path = Path(path)
    cols = []
    for spec in ds.schema.variables:
        if spec.is_continuous:
            cols.append([repr(float(v)) for v in ds.column(spec.name)])
        else:
            cols.append([spec.levels[int(v)] for v in ds.column(spec.name)])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ds.schema.names)
        for i in range(ds.n_rows):
            writer.writerow([col[i] for col in cols])


def check_compatible(orig: Dataset, syn: Dataset) -> None:
    """Require same column names, same kinds, and same row count."""
    if orig.schema.names != syn.schema.names:
        raise ValueError("synthetic dataset columns do not match the original schema")
    for spec in orig.schema.variables:
        if syn.schema.var(spec.name).kind is not spec.kind:
            raise ValueError(f"variable {spec.name!r} has different kinds in original and synthetic data")
    if orig.n_rows != syn.n_rows:
        raise ValueError(f"row count mismatch: original {orig.n_rows}, synthetic {syn.n_rows}")


def aligned_codes(orig: Dataset, syn: Dataset, name: str) -> np.ndarray:
    """Synthetic level codes re-expressed in the original dataset's level order.

    Alignment is by label, so the two schemas may enumerate levels
    differently.  A synthetic label that never occurs is tolerated; one that
    occurs but is absent from the original levels is an error.
    """
    ospec = orig.schema.var(name)
    sspec = syn.schema.var(name)
    if sspec.levels == ospec.levels:
        return syn.column(name)
    index = {lab: k for k, lab in enumerate(ospec.levels)}
    mapping = np.array([index.get(lab, -1) for lab in sspec.levels], dtype=np.int64)
    codes = mapping[syn.column(name)]
    if codes.size and codes.min() < 0:
        bad = sorted({sspec.levels[v] for v in np.unique(syn.column(name)[codes < 0])})
        raise ValueError(f"column {name!r}: synthetic labels {bad} absent from original levels")
    return codes


def schema_from_json_dict(obj: Sequence[Mapping]) -> Schema:
    """Build a Schema from a JSON-style list of {name, kind, levels?} entries."""
    specs = []
    for entry in obj:
        kind = VarKind(entry["kind"])
        levels = tuple(str(x) for x in entry.get("levels", ()))
        specs.append(VariableSpec(str(entry["name"]), kind, levels))
    return Schema(tuple(specs))


def schema_to_json_dict(schema: Schema) -> list[dict]:
    out = []
    for spec in schema.variables:
        entry: dict = {"name": spec.name, "kind": spec.kind.value}
        if not spec.is_continuous:
            entry["levels"] = list(spec.levels)
        out.append(entry)
    return out
