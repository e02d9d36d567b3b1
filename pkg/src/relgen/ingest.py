"""Relational database loading and the augmented full join.

A database is described by a JSON schema file declaring entity classes (name,
key column, categorical attributes) and relationship classes (name, ordered
participant entity classes, categorical attributes), plus one CSV file per
class in a data directory.  The augmented full join is the cross product of
all entity tables with one Boolean indicator column per relationship and the
relationship attributes carried along where the relationship exists.

The join is materialized in memory; loading refuses to build joins whose
estimated row count exceeds a configurable cap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import LoadError, QueryError, TooLargeError

# Marker for a relationship attribute on a row where the relationship does not
# exist.  Excluded from counting and never a legal range value.
ABSENT = "__absent__"

DEFAULT_MAX_JOIN_ROWS = 10_000_000

BOOL_RANGE = ("true", "false")


@dataclass(frozen=True)
class Attribute:
    name: str
    range: tuple[str, ...]


@dataclass(frozen=True)
class EntityClass:
    name: str
    key: str
    attributes: tuple[Attribute, ...]


@dataclass(frozen=True)
class RelationshipClass:
    name: str
    participants: tuple[str, ...]
    attributes: tuple[Attribute, ...]


@dataclass(frozen=True)
class ERSchema:
    entities: tuple[EntityClass, ...]
    relationships: tuple[RelationshipClass, ...]

    def entity(self, name: str) -> EntityClass:
        for e in self.entities:
            if e.name == name:
                return e
        raise KeyError(name)

    def relationship(self, name: str) -> RelationshipClass:
        for r in self.relationships:
            if r.name == name:
                return r
        raise KeyError(name)

    def validate(self) -> None:
        names = [e.name for e in self.entities] + [r.name for r in self.relationships]
        if len(set(names)) != len(names):
            raise LoadError("entity and relationship names must be unique")
        if not self.entities:
            raise LoadError("schema declares no entity classes")
        # RV names are built from bare attribute/relationship names, so those
        # plus the key columns must not collide anywhere in the schema.
        columns = []
        for e in self.entities:
            columns.append(e.key)
            columns.extend(a.name for a in e.attributes)
        for r in self.relationships:
            columns.append(r.name)
            columns.extend(a.name for a in r.attributes)
        if len(set(columns)) != len(columns):
            raise LoadError("attribute, relationship, and key column names must be globally unique")
        entity_names = {e.name for e in self.entities}
        for r in self.relationships:
            if len(r.participants) < 2:
                raise LoadError(f"relationship {r.name!r} needs at least 2 participants")
            if len(set(r.participants)) != len(r.participants):
                raise LoadError(f"relationship {r.name!r} repeats a participant class")
            missing = set(r.participants) - entity_names
            if missing:
                raise LoadError(f"relationship {r.name!r} references unknown entities {sorted(missing)}")
        for b in list(self.entities) + list(self.relationships):
            for a in b.attributes:
                if len(a.range) < 2 or len(set(a.range)) != len(a.range):
                    raise LoadError(
                        f"attribute {a.name!r} of {b.name!r} needs >=2 distinct range values"
                    )
                if ABSENT in a.range:
                    raise LoadError(f"attribute {a.name!r} uses the reserved value {ABSENT!r}")


@dataclass
class RelationalInstance:
    """Loaded tables: one DataFrame per entity and relationship class."""

    entity_tables: dict[str, pd.DataFrame]
    relationship_tables: dict[str, pd.DataFrame]

    def size(self, class_name: str) -> int:
        if class_name in self.entity_tables:
            return len(self.entity_tables[class_name])
        return len(self.relationship_tables[class_name])


def parse_schema(text: str) -> ERSchema:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise LoadError(f"schema is not valid JSON at line {e.lineno}: {e.msg}") from e
    try:
        entities = tuple(
            EntityClass(
                e["name"],
                e["key"],
                tuple(Attribute(a["name"], tuple(a["range"])) for a in e.get("attributes", [])),
            )
            for e in doc["entities"]
        )
        relationships = tuple(
            RelationshipClass(
                r["name"],
                tuple(r["participants"]),
                tuple(Attribute(a["name"], tuple(a["range"])) for a in r.get("attributes", [])),
            )
            for r in doc.get("relationships", [])
        )
    except (KeyError, TypeError) as e:
        raise LoadError(f"schema is missing or mistypes field: {e}") from e
    schema = ERSchema(entities, relationships)
    schema.validate()
    return schema


def load_schema(path) -> ERSchema:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise LoadError(f"cannot read schema file {path}: {e}") from e
    return parse_schema(text)


def _read_csv(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except OSError as e:
        raise LoadError(f"cannot read {path}: {e}") from e
    except pd.errors.ParserError as e:
        raise LoadError(f"cannot parse {path}: {e}") from e


def _check_columns(df: pd.DataFrame, expected: Sequence[str], path: Path) -> pd.DataFrame:
    unknown = set(df.columns) - set(expected)
    if unknown:
        raise LoadError(f"{path}: unknown columns {sorted(unknown)}")
    missing = set(expected) - set(df.columns)
    if missing:
        raise LoadError(f"{path}: missing columns {sorted(missing)}")
    return df[list(expected)]


def load_instance(schema_path, data_dir) -> tuple[ERSchema, RelationalInstance]:
    """Load and validate a database: one CSV per class, named ``<Class>.csv``.

    Validation covers column sets, duplicate keys, referential integrity of
    relationship tuples, and attribute values against their declared ranges,
    with errors naming the offending file and row.
    """
    schema = load_schema(schema_path)
    data_dir = Path(data_dir)
    entity_tables = {}
    for e in schema.entities:
        path = data_dir / f"{e.name}.csv"
        df = _check_columns(_read_csv(path), [e.key] + [a.name for a in e.attributes], path)
        dupes = df[e.key][df[e.key].duplicated()]
        if not dupes.empty:
            raise LoadError(f"{path}: duplicate key {dupes.iloc[0]!r} (row {dupes.index[0] + 2})")
        for a in e.attributes:
            bad = df.index[~df[a.name].isin(a.range)]
            if len(bad):
                raise LoadError(
                    f"{path}: value {df[a.name][bad[0]]!r} in column {a.name!r} "
                    f"(row {bad[0] + 2}) is outside the declared range"
                )
        entity_tables[e.name] = df.reset_index(drop=True)
    relationship_tables = {}
    for r in schema.relationships:
        path = data_dir / f"{r.name}.csv"
        key_cols = [schema.entity(p).key for p in r.participants]
        df = _check_columns(_read_csv(path), key_cols + [a.name for a in r.attributes], path)
        for p, kc in zip(r.participants, key_cols):
            known = set(entity_tables[p][schema.entity(p).key])
            bad = df.index[~df[kc].isin(known)]
            if len(bad):
                raise LoadError(
                    f"{path}: key {df[kc][bad[0]]!r} (row {bad[0] + 2}) does not exist in {p}"
                )
        dupes = df[key_cols][df[key_cols].duplicated()]
        if not dupes.empty:
            raise LoadError(f"{path}: duplicate relationship tuple at row {dupes.index[0] + 2}")
        for a in r.attributes:
            bad = df.index[~df[a.name].isin(a.range)]
            if len(bad):
                raise LoadError(
                    f"{path}: value {df[a.name][bad[0]]!r} in column {a.name!r} "
                    f"(row {bad[0] + 2}) is outside the declared range"
                )
        relationship_tables[r.name] = df.reset_index(drop=True)
    return schema, RelationalInstance(entity_tables, relationship_tables)


@dataclass
class AugmentedJoin:
    """Cross product of all entity tables plus relationship indicator columns.

    ``frame`` holds one row per element of the cross product; ``column_ranges``
    maps every non-key column to its categorical range (indicator columns are
    Boolean, relationship attributes additionally admit the absent marker).
    """

    schema: ERSchema
    frame: pd.DataFrame
    key_columns: dict[str, str]  # entity class -> key column name
    column_ranges: dict[str, tuple[str, ...]]
    column_classes: dict[str, tuple[str, ...]]  # column -> entity classes it depends on

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def test_columns(self) -> tuple[str, ...]:
        """Attribute and relationship columns, in canonical frame order."""
        keys = set(self.key_columns.values())
        return tuple(c for c in self.frame.columns if c not in keys)

    def to_csv(self, path) -> None:
        self.frame.to_csv(path, index=False, lineterminator="\n")


def augmented_full_join(
    schema: ERSchema,
    inst: RelationalInstance,
    max_rows: int = DEFAULT_MAX_JOIN_ROWS,
) -> AugmentedJoin:
    """Materialize the augmented full join.

    Row order is canonical: lexicographic in the entity key tuple, entity
    classes in declaration order.  Column order is entity keys, entity
    attributes, then per relationship its indicator followed by its
    attributes.
    """
    estimated = math.prod(max(len(inst.entity_tables[e.name]), 1) for e in schema.entities)
    if estimated > max_rows:
        raise TooLargeError(
            f"augmented join would have {estimated} rows, cap is {max_rows}"
        )
    for e in schema.entities:
        if inst.entity_tables[e.name].empty:
            raise LoadError(f"entity table {e.name!r} is empty; the join would be empty")
    frame = None
    for e in schema.entities:
        t = inst.entity_tables[e.name]
        frame = t.copy() if frame is None else frame.merge(t, how="cross")
    key_columns = {e.name: e.key for e in schema.entities}
    column_ranges: dict[str, tuple[str, ...]] = {}
    column_classes: dict[str, tuple[str, ...]] = {}
    for e in schema.entities:
        for a in e.attributes:
            column_ranges[a.name] = a.range
            column_classes[a.name] = (e.name,)
    for r in schema.relationships:
        rel = inst.relationship_tables[r.name]
        key_cols = [key_columns[p] for p in r.participants]
        stored = {tuple(row): i for i, row in enumerate(rel[key_cols].itertuples(index=False, name=None))}
        join_keys = list(frame[key_cols].itertuples(index=False, name=None))
        indicator = ["true" if k in stored else "false" for k in join_keys]
        frame[r.name] = indicator
        column_ranges[r.name] = BOOL_RANGE
        column_classes[r.name] = r.participants
        for a in r.attributes:
            values = [
                rel[a.name].iloc[stored[k]] if k in stored else ABSENT for k in join_keys
            ]
            frame[a.name] = values
            column_ranges[a.name] = a.range
            column_classes[a.name] = r.participants
    order = list(key_columns.values())
    frame = frame.sort_values(order, kind="mergesort").reset_index(drop=True)
    canonical = (
        order
        + [a.name for e in schema.entities for a in e.attributes]
        + [c for r in schema.relationships for c in [r.name] + [a.name for a in r.attributes]]
    )
    return AugmentedJoin(schema, frame[canonical], key_columns, column_ranges, column_classes)


def count_rows(
    join: AugmentedJoin,
    cluster_filter: Mapping[str, Sequence[str]],
    column_values: Mapping[str, str],
) -> int:
    """Rows whose entity keys lie in the given clusters and whose columns match.

    ``cluster_filter`` maps entity class names to collections of keys; classes
    not mentioned are unrestricted.  ``column_values`` is a partial assignment
    of non-key columns.
    """
    mask = np.ones(len(join.frame), dtype=bool)
    for cls, keys in cluster_filter.items():
        if cls not in join.key_columns:
            raise QueryError(f"unknown entity class {cls!r} in cluster filter")
        mask &= join.frame[join.key_columns[cls]].isin(set(keys)).to_numpy()
    for col, value in column_values.items():
        if col not in join.column_ranges:
            raise QueryError(f"unknown column {col!r}")
        mask &= (join.frame[col] == value).to_numpy()
    return int(mask.sum())


def equal_frequency_bins(values: Sequence[float], bins: int) -> tuple[list[str], list[float]]:
    """Bucket numeric values into equal-frequency categorical labels.

    Returns the per-value labels and the bin edges.  Useful when a raw table
    carries a continuous column that the schema needs as categorical.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    arr = np.asarray(values, dtype=float)
    edges = np.unique(np.quantile(arr, np.linspace(0, 1, bins + 1)[1:-1]))
    idx = np.searchsorted(edges, arr, side="right")
    all_edges = [float("-inf"), *[float(e) for e in edges], float("inf")]
    labels = []
    for i in idx:
        lo, hi = all_edges[i], all_edges[i + 1]
        labels.append(f"[{lo:g},{hi:g})")
    return labels, [float(e) for e in edges]
