"""File formats: edge list CSV, node attribute CSV, and the schema sidecar.

Edge lists are two-column CSVs with a ``source,target`` header. Attribute
files put ids in the first column and one attribute per remaining column;
an empty cell is a missing value. The schema JSON declares each column
categorical (with level order) or continuous, plus optional recode maps
and reference levels/pairs used by the model builders.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .graph import (
    AttributeTable,
    CategoricalColumn,
    ContinuousColumn,
    Graph,
    categorical,
    continuous,
    load_graph,
)


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # categorical | continuous
    levels: tuple[str, ...] = ()
    units: str = ""

    def __post_init__(self):
        if self.kind not in ("categorical", "continuous"):
            raise ConfigError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical" and not self.levels:
            raise ConfigError(f"column {self.name!r}: categorical needs levels")


@dataclass(frozen=True)
class Schema:
    columns: tuple[ColumnSchema, ...]
    recode: dict = field(default_factory=dict)  # column -> {raw: analysis level}
    reference_levels: dict = field(default_factory=dict)
    reference_pairs: dict = field(default_factory=dict)

    def column(self, name: str) -> ColumnSchema:
        for c in self.columns:
            if c.name == name:
                return c
        raise ConfigError(f"column {name!r} not declared in schema")

    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    columns = []
    for name, c in raw.get("columns", {}).items():
        columns.append(
            ColumnSchema(
                name=name,
                kind=c.get("type", ""),
                levels=tuple(c.get("levels", ())),
                units=c.get("units", ""),
            )
        )
    pairs = {
        k: (v[0], v[1]) for k, v in raw.get("reference_pairs", {}).items()
    }
    return Schema(
        columns=tuple(columns),
        recode=raw.get("recode", {}),
        reference_levels=raw.get("reference_levels", {}),
        reference_pairs=pairs,
    )


def schema_to_dict(schema: Schema) -> dict:
    return {
        "columns": {
            c.name: (
                {"type": "categorical", "levels": list(c.levels)}
                if c.kind == "categorical"
                else {"type": "continuous", "units": c.units}
            )
            for c in schema.columns
        },
        "recode": schema.recode,
        "reference_levels": schema.reference_levels,
        "reference_pairs": {k: list(v) for k, v in schema.reference_pairs.items()},
    }


def read_edge_csv(path) -> list[tuple[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["source", "target"]:
            raise DataError(f"{path}: edge CSV must start with a source,target header")
        out = []
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise DataError(f"{path}: edge row with fewer than two fields: {row!r}")
            out.append((row[0].strip(), row[1].strip()))
    return out


def read_attribute_csv(path) -> tuple[list[str], dict[str, list[str | None]]]:
    """Node ids (first column) and raw string values per attribute column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "id":
            raise DataError(f"{path}: attribute CSV must start with an id column")
        names = [h.strip() for h in header[1:]]
        ids: list[str] = []
        values: dict[str, list[str | None]] = {name: [] for name in names}
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            ids.append(row[0].strip())
            for k, name in enumerate(names):
                cell = row[k + 1].strip() if k + 1 < len(row) else ""
                values[name].append(cell if cell != "" else None)
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate node ids")
    return ids, values


def raw_attribute_table(
    ids: list[str], values: dict[str, list[str | None]], schema: Schema
) -> AttributeTable:
    """Typed table of the raw data: continuous parsed, categorical as found.

    Raw categorical levels are the distinct observed labels in first
    appearance order; the recode stage maps them onto the analysis levels.
    """
    cols = []
    for cs in schema.columns:
        if cs.name not in values:
            raise DataError(f"attribute CSV lacks declared column {cs.name!r}")
        vals = values[cs.name]
        if cs.kind == "continuous":
            try:
                cols.append(
                    continuous(
                        cs.name,
                        [None if v is None else float(v) for v in vals],
                        cs.units,
                    )
                )
            except ValueError as exc:
                raise DataError(f"column {cs.name!r}: {exc}") from None
        else:
            seen: list[str] = []
            for v in vals:
                if v is not None and v not in seen:
                    seen.append(v)
            cols.append(categorical(cs.name, seen, vals))
    return AttributeTable(cols)


def load_network(
    edge_path, attr_path, schema: Schema
) -> tuple[Graph, AttributeTable, list[str]]:
    """Graph plus raw attribute table, aligned on the attribute file's ids."""
    pairs = read_edge_csv(edge_path)
    ids, values = read_attribute_csv(attr_path)
    g = load_graph(pairs, ids)
    return g, raw_attribute_table(ids, values, schema), ids


def write_edge_csv(path, g: Graph, ids: list[str] | None = None) -> None:
    names = ids if ids is not None else [str(k) for k in range(g.n)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target"])
        for i, j in sorted(g.edges):
            writer.writerow([names[i], names[j]])


def write_attribute_csv(path, attrs: AttributeTable, ids: list[str] | None = None) -> None:
    names = ids if ids is not None else [str(k) for k in range(attrs.n)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + list(attrs.names))
        for row in range(attrs.n):
            cells = [names[row]]
            for col in attrs.columns():
                if isinstance(col, CategoricalColumn):
                    code = col.codes[row]
                    cells.append("" if code < 0 else col.levels[code])
                else:
                    v = col.values[row]
                    cells.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(cells)
