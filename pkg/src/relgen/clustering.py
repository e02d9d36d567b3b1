"""Partitioning each entity class into clusters of similarly behaving objects.

Entities are described by categorical feature vectors (their attribute values
plus, per relationship they participate in, their participation degree
bucketed into ``0 / 1 / 2+``) and clustered with k-modes under Hamming
dissimilarity.  Several seeded restarts with farthest-point initialization are
run and the best-objective result kept, so the output is deterministic in the
seed and does not depend on input row order.

Cluster labels are canonical: clusters of one entity class are ordered by
their lexicographically smallest member key and labelled ``<prefix>1``,
``<prefix>2``, ... where the prefix is the shortest lowercase prefix that
distinguishes the entity class from its peers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import LoadError, ParameterError
from .ingest import ERSchema, RelationalInstance


@dataclass(frozen=True)
class ClusterAssignment:
    """Per entity class, a total mapping from entity key to cluster label."""

    by_class: dict[str, dict[str, str]]

    def labels(self, entity_class: str) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for label in self.by_class[entity_class].values():
            seen[label] = None
        return tuple(sorted(seen))

    def members(self, entity_class: str, label: str) -> tuple[str, ...]:
        return tuple(
            sorted(k for k, c in self.by_class[entity_class].items() if c == label)
        )

    def sizes(self, entity_class: str) -> dict[str, int]:
        out: dict[str, int] = {}
        for label in self.by_class[entity_class].values():
            out[label] = out.get(label, 0) + 1
        return out

    def validate_against(self, schema: ERSchema, inst: RelationalInstance) -> None:
        for e in schema.entities:
            keys = set(inst.entity_tables[e.name][e.key])
            if e.name not in self.by_class:
                raise LoadError(f"no clusters declared for entity class {e.name!r}")
            assigned = set(self.by_class[e.name])
            if assigned != keys:
                missing = sorted(keys - assigned)
                extra = sorted(assigned - keys)
                raise LoadError(
                    f"cluster assignment for {e.name!r} is not a partition of the table: "
                    f"missing {missing}, unknown {extra}"
                )


def class_prefixes(schema: ERSchema) -> dict[str, str]:
    """Shortest lowercase prefixes that tell the entity classes apart."""
    names = [e.name.lower() for e in schema.entities]
    out = {}
    for e in schema.entities:
        low = e.name.lower()
        n = 1
        while n < len(low) and sum(other.startswith(low[:n]) for other in names) > 1:
            n += 1
        out[e.name] = low[:n]
    return out


def _degree_bucket(count: int) -> str:
    return "0" if count == 0 else ("1" if count == 1 else "2+")


def entity_features(
    schema: ERSchema, inst: RelationalInstance, entity_class: str
) -> tuple[list[str], list[tuple[str, ...]]]:
    """Sorted entity keys and their categorical feature vectors."""
    e = schema.entity(entity_class)
    table = inst.entity_tables[entity_class]
    keys = sorted(table[e.key])
    rows = {row[e.key]: row for _, row in table.iterrows()}
    degree_cols = []
    for r in schema.relationships:
        if entity_class in r.participants:
            rel = inst.relationship_tables[r.name]
            counts = rel[e.key].value_counts().to_dict() if len(rel) else {}
            degree_cols.append(counts)
    features = []
    for k in keys:
        vec = [rows[k][a.name] for a in e.attributes]
        vec += [_degree_bucket(int(counts.get(k, 0))) for counts in degree_cols]
        features.append(tuple(vec))
    return keys, features


def _hamming(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    return sum(x != y for x, y in zip(a, b))


def _mode(vectors: Sequence[tuple[str, ...]]) -> tuple[str, ...]:
    out = []
    for col in zip(*vectors):
        counts: dict[str, int] = {}
        for v in col:
            counts[v] = counts.get(v, 0) + 1
        # most frequent value, ties broken by lexicographic order
        out.append(min(counts, key=lambda v: (-counts[v], v)))
    return tuple(out)


def _kmodes_once(
    keys: list[str], features: list[tuple[str, ...]], k: int, rng: np.random.Generator
) -> tuple[list[int], int]:
    n = len(keys)
    first = int(rng.integers(n))
    centers = [features[first]]
    chosen = {first}
    while len(centers) < k:
        # farthest point from the chosen centers, ties by key order
        best_i, best_d = None, -1
        for i in range(n):
            if i in chosen:
                continue
            d = min(_hamming(features[i], c) for c in centers)
            if d > best_d:
                best_i, best_d = i, d
        centers.append(features[best_i])
        chosen.add(best_i)

    assign = [-1] * n
    for _ in range(100):
        new_assign = [
            min(range(k), key=lambda c: (_hamming(features[i], centers[c]), c))
            for i in range(n)
        ]
        # reseed empty clusters with the point farthest from its own center
        for c in range(k):
            if c not in new_assign:
                far = max(
                    (i for i in range(n) if new_assign.count(new_assign[i]) > 1),
                    key=lambda i: (_hamming(features[i], centers[new_assign[i]]), keys[i]),
                )
                new_assign[far] = c
        if new_assign == assign:
            break
        assign = new_assign
        centers = [
            _mode([features[i] for i in range(n) if assign[i] == c]) for c in range(k)
        ]
    cost = sum(_hamming(features[i], centers[assign[i]]) for i in range(n))
    return assign, cost


def cluster_entities(
    schema: ERSchema,
    inst: RelationalInstance,
    k_per_entity: Mapping[str, int],
    seed: int,
    restarts: int = 8,
) -> ClusterAssignment:
    """Seeded k-modes partition of every entity class.

    ``k_per_entity`` maps each entity class to its cluster count (classes not
    mentioned default to 2, capped at the table size).
    """
    prefixes = class_prefixes(schema)
    by_class: dict[str, dict[str, str]] = {}
    for e in schema.entities:
        keys, features = entity_features(schema, inst, e.name)
        k = int(k_per_entity.get(e.name, 2))
        if not 1 <= k:
            raise ParameterError(f"cluster count for {e.name!r} must be positive")
        if k > len(keys):
            raise ParameterError(
                f"cluster count {k} for {e.name!r} exceeds its {len(keys)} entities"
            )
        best = None
        for restart in range(max(1, restarts)):
            rng = np.random.default_rng([seed, restart, len(keys)])
            assign, cost = _kmodes_once(keys, features, k, rng)
            if best is None or cost < best[1]:
                best = (assign, cost)
        assign = best[0]
        clusters = [
            sorted(keys[i] for i in range(len(keys)) if assign[i] == c) for c in range(k)
        ]
        clusters.sort(key=lambda members: members[0])
        mapping: dict[str, str] = {}
        for idx, members in enumerate(clusters, start=1):
            for key in members:
                mapping[key] = f"{prefixes[e.name]}{idx}"
        by_class[e.name] = mapping
    return ClusterAssignment(by_class)


def kmodes_cost(
    schema: ERSchema,
    inst: RelationalInstance,
    entity_class: str,
    groups: Sequence[Sequence[str]],
) -> int:
    """Hamming-to-mode objective of an arbitrary partition, for comparisons."""
    keys, features = entity_features(schema, inst, entity_class)
    index = {k: i for i, k in enumerate(keys)}
    cost = 0
    for members in groups:
        vecs = [features[index[m]] for m in members]
        center = _mode(vecs)
        cost += sum(_hamming(v, center) for v in vecs)
    return cost


def fixed_clusters(path, inst: RelationalInstance) -> ClusterAssignment:
    """Read a cluster assignment CSV with columns entity_class, key, cluster.

    The file must mention every entity key of the instance exactly once.
    """
    path = Path(path)
    by_class: dict[str, dict[str, str]] = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["entity_class", "key", "cluster"]:
                raise LoadError(
                    f"{path}: expected header entity_class,key,cluster, got {reader.fieldnames}"
                )
            for i, row in enumerate(reader, start=2):
                cls, key, cluster = row["entity_class"], row["key"], row["cluster"]
                if key in by_class.setdefault(cls, {}):
                    raise LoadError(f"{path}: key {key!r} assigned twice (row {i})")
                by_class[cls][key] = cluster
    except OSError as e:
        raise LoadError(f"cannot read cluster file {path}: {e}") from e
    assignment = ClusterAssignment(by_class)
    known = set(inst.entity_tables)
    unknown = set(by_class) - known
    if unknown:
        raise LoadError(f"{path}: unknown entity classes {sorted(unknown)}")
    for cls in known:
        key_col = inst.entity_tables[cls].columns[0]  # loader puts the key first
        keys = set(inst.entity_tables[cls][key_col])
        declared = set(by_class.get(cls, {}))
        if declared != keys:
            missing = sorted(keys - declared)
            extra = sorted(declared - keys)
            raise LoadError(
                f"{path}: assignment for {cls!r} is not a partition: missing {missing}, unknown {extra}"
            )
    return assignment


def save_clusters(assignment: ClusterAssignment, path) -> None:
    lines = ["entity_class,key,cluster"]
    for cls in sorted(assignment.by_class):
        for key in sorted(assignment.by_class[cls]):
            lines.append(f"{cls},{key},{assignment.by_class[cls][key]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
