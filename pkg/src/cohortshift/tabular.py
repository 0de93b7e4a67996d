"""Mixed-type cohort data model: schemas, CSV ingestion, encoding, domain projection.

Categorical cells are stored as integer level indices inside the same float
matrix as numerical values, so a single ``n x d`` array flows through the whole
solver and predictors receive that encoded form directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvParseError, DomainValidationError, SchemaError

NUMERICAL = "numerical"
CATEGORICAL = "categorical"


def default_embed_dim(n_levels: int) -> int:
    """Deterministic embedding width for a categorical feature with ``n_levels`` levels."""
    return min(8, max(2, math.ceil(math.log2(n_levels)) + 1))


@dataclass(frozen=True)
class FeatureSchema:
    """One feature's kind, domain and actionability rules.

    ``range`` applies to numerical features, ``levels`` / ``admissible_levels`` /
    ``embed_dim`` to categorical ones. ``immutable`` features are never edited
    by proposals regardless of kind.
    """

    name: str
    kind: str
    range: tuple[float, float] | None = None
    levels: tuple[str, ...] | None = None
    immutable: bool = False
    admissible_levels: tuple[str, ...] | None = None
    embed_dim: int | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind == NUMERICAL:
            if self.range is None:
                raise SchemaError(f"numerical feature {self.name!r} needs a range")
            lo, hi = float(self.range[0]), float(self.range[1])
            if not (lo < hi):
                raise SchemaError(f"feature {self.name!r}: range must satisfy lo < hi, got [{lo}, {hi}]")
            if self.levels is not None:
                raise SchemaError(f"numerical feature {self.name!r} must not declare levels")
            object.__setattr__(self, "range", (lo, hi))
        elif self.kind == CATEGORICAL:
            if self.levels is None or len(self.levels) < 2:
                raise SchemaError(f"categorical feature {self.name!r} needs at least 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"categorical feature {self.name!r} has duplicate levels")
            if self.range is not None:
                raise SchemaError(f"categorical feature {self.name!r} must not declare a range")
            object.__setattr__(self, "levels", tuple(self.levels))
            if self.admissible_levels is None:
                object.__setattr__(self, "admissible_levels", tuple(self.levels))
            else:
                extra = set(self.admissible_levels) - set(self.levels)
                if extra:
                    raise SchemaError(
                        f"feature {self.name!r}: admissible levels {sorted(extra)} are not levels"
                    )
                object.__setattr__(self, "admissible_levels", tuple(self.admissible_levels))
            if self.embed_dim is None:
                object.__setattr__(self, "embed_dim", default_embed_dim(len(self.levels)))
            elif self.embed_dim < 1:
                raise SchemaError(f"feature {self.name!r}: embed_dim must be >= 1")
        else:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")

    @property
    def n_levels(self) -> int:
        return len(self.levels) if self.levels is not None else 0

    def level_index(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise DomainValidationError(f"unknown level {label!r} for feature {self.name!r}") from None

    def admissible_indices(self) -> tuple[int, ...]:
        return tuple(self.levels.index(v) for v in self.admissible_levels)


def validate_schema(schema: tuple[FeatureSchema, ...]) -> tuple[FeatureSchema, ...]:
    schema = tuple(schema)
    if not schema:
        raise SchemaError("schema must contain at least one feature")
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise SchemaError("feature names must be unique within a schema")
    return schema


@dataclass(frozen=True)
class CohortMatrix:
    """An encoded ``n x d`` sample set tied to its schema.

    Numerical cells hold raw values, categorical cells hold level indices.
    The value matrix is frozen after validation and safe to share read-only.
    """

    schema: tuple[FeatureSchema, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        schema = validate_schema(self.schema)
        object.__setattr__(self, "schema", schema)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(schema):
            raise SchemaError(
                f"values must be n x {len(schema)}, got shape {values.shape}"
            )
        _validate_cells(values, schema)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "CohortMatrix":
        return CohortMatrix(self.schema, values)


def _validate_cells(values: np.ndarray, schema: tuple[FeatureSchema, ...]) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise DomainValidationError(
            f"non-finite value at row {bad[0] + 1}, column {schema[bad[1]].name!r}"
        )
    for j, feat in enumerate(schema):
        col = values[:, j]
        if feat.kind == NUMERICAL:
            lo, hi = feat.range
            bad = np.nonzero((col < lo) | (col > hi))[0]
            if bad.size:
                raise DomainValidationError(
                    f"value {col[bad[0]]!r} out of range [{lo}, {hi}] "
                    f"at row {bad[0] + 1}, column {feat.name!r}"
                )
        else:
            bad = np.nonzero((col != np.round(col)) | (col < 0) | (col >= feat.n_levels))[0]
            if bad.size:
                raise DomainValidationError(
                    f"value {col[bad[0]]!r} is not a level index in [0, {feat.n_levels}) "
                    f"at row {bad[0] + 1}, column {feat.name!r}"
                )


def project_to_domain(row: np.ndarray, schema: tuple[FeatureSchema, ...]) -> np.ndarray:
    """Clamp a d-vector into the schema's domain.

    Numerical coordinates are clipped into their range; categorical coordinates
    are rounded to the nearest integer then clamped into the valid index range.
    Total on any real input and idempotent.
    """
    row = np.asarray(row, dtype=float)
    if row.shape != (len(schema),):
        raise SchemaError(f"row has shape {row.shape}, expected ({len(schema)},)")
    out = row.copy()
    for j, feat in enumerate(schema):
        if feat.kind == NUMERICAL:
            lo, hi = feat.range
            out[j] = min(max(out[j], lo), hi)
        else:
            out[j] = min(max(float(np.rint(out[j])), 0.0), float(feat.n_levels - 1))
    return out


def project_rows(values: np.ndarray, schema: tuple[FeatureSchema, ...]) -> np.ndarray:
    """Vectorized :func:`project_to_domain` over an ``n x d`` matrix."""
    values = np.asarray(values, dtype=float)
    out = values.copy()
    for j, feat in enumerate(schema):
        if feat.kind == NUMERICAL:
            lo, hi = feat.range
            np.clip(out[:, j], lo, hi, out=out[:, j])
        else:
            out[:, j] = np.clip(np.rint(out[:, j]), 0, feat.n_levels - 1)
    return out


def _split_line(line: str, n_cols: int, row_label: str) -> list[str]:
    if '"' in line:
        raise CsvParseError(f"{row_label}: quoted fields are not supported")
    cells = line.split(",")
    if len(cells) != n_cols:
        raise CsvParseError(f"{row_label}: expected {n_cols} cells, got {len(cells)}")
    return cells


def load_csv(path: str, schema: tuple[FeatureSchema, ...]) -> CohortMatrix:
    """Read a strict header-first CSV and encode it under ``schema``.

    Header names must match the schema's names (any order, no extras or
    duplicates); categorical labels are mapped to level indices in schema
    order. Out-of-range numbers and unknown labels raise
    :class:`DomainValidationError` naming the offending row and column.
    """
    schema = validate_schema(tuple(schema))
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvParseError(f"{path}: empty file, expected a header line")
    header = _split_line(lines[0], len(lines[0].split(",")), "header")
    names = [f.name for f in schema]
    if sorted(header) != sorted(names):
        missing = set(names) - set(header)
        extra = set(header) - set(names)
        detail = []
        if missing:
            detail.append(f"missing columns {sorted(missing)}")
        if extra:
            detail.append(f"unexpected columns {sorted(extra)}")
        raise SchemaError(f"{path}: header does not match schema ({'; '.join(detail) or 'duplicates'})")
    col_of = {name: header.index(name) for name in names}

    n = len(lines) - 1
    values = np.empty((n, len(schema)), dtype=float)
    for i, line in enumerate(lines[1:]):
        cells = _split_line(line, len(header), f"row {i + 1}")
        for j, feat in enumerate(schema):
            cell = cells[col_of[feat.name]]
            if feat.kind == NUMERICAL:
                try:
                    val = float(cell)
                except ValueError:
                    raise CsvParseError(
                        f"row {i + 1}, column {feat.name!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not np.isfinite(val):
                    raise DomainValidationError(
                        f"non-finite value {cell!r} at row {i + 1}, column {feat.name!r}"
                    )
                lo, hi = feat.range
                if val < lo or val > hi:
                    raise DomainValidationError(
                        f"value {cell!r} out of range [{lo}, {hi}] at row {i + 1}, column {feat.name!r}"
                    )
                values[i, j] = val
            else:
                if cell not in feat.levels:
                    raise DomainValidationError(
                        f"unknown level {cell!r} at row {i + 1}, column {feat.name!r}"
                    )
                values[i, j] = feat.levels.index(cell)
    return CohortMatrix(schema, values)


def decode_csv(cohort: CohortMatrix, path: str) -> None:
    """Write a cohort back to CSV, restoring category labels.

    Numerical values are printed with 17 significant digits so that
    ``load_csv`` reproduces the matrix bit-exactly.
    """
    lines = [",".join(f.name for f in cohort.schema)]
    for i in range(cohort.row_count):
        cells = []
        for j, feat in enumerate(cohort.schema):
            v = cohort.values[i, j]
            if feat.kind == NUMERICAL:
                cells.append(format(v, ".17g"))
            else:
                cells.append(feat.levels[int(v)])
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def schema_to_json(schema: tuple[FeatureSchema, ...]) -> list[dict]:
    out = []
    for f in schema:
        entry: dict = {"name": f.name, "kind": f.kind, "immutable": f.immutable}
        if f.kind == NUMERICAL:
            entry["range"] = list(f.range)
        else:
            entry["levels"] = list(f.levels)
            entry["admissible_levels"] = list(f.admissible_levels)
            entry["embed_dim"] = f.embed_dim
        out.append(entry)
    return out


def schema_from_json(doc: list[dict]) -> tuple[FeatureSchema, ...]:
    if not isinstance(doc, list):
        raise SchemaError("schema document must be a JSON array of feature objects")
    feats = []
    for entry in doc:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise SchemaError(f"feature entry {entry!r} needs at least 'name' and 'kind'")
        feats.append(
            FeatureSchema(
                name=entry["name"],
                kind=entry["kind"],
                range=tuple(entry["range"]) if entry.get("range") is not None else None,
                levels=tuple(entry["levels"]) if entry.get("levels") is not None else None,
                immutable=bool(entry.get("immutable", False)),
                admissible_levels=(
                    tuple(entry["admissible_levels"])
                    if entry.get("admissible_levels") is not None
                    else None
                ),
                embed_dim=entry.get("embed_dim"),
            )
        )
    return validate_schema(tuple(feats))


def load_schema(path: str) -> tuple[FeatureSchema, ...]:
    with open(path, encoding="utf-8") as fh:
        return schema_from_json(json.load(fh))


def save_schema(schema: tuple[FeatureSchema, ...], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_json(schema), fh, indent=2, sort_keys=True)
        fh.write("\n")
