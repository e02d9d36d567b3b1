"""A small bundled example database of patients and the medications they take.

Two entity classes (Patient with an age bracket, Medication with a cost
level) are connected by a Treat relationship.  Five patients, five
medications, five treatments: small enough that every pipeline stage can be
checked by hand, which is why the docs, demos, and tests all use it.
"""

from __future__ import annotations

import json
from pathlib import Path

PATIENTS = [
    ("alice", ">=18"),
    ("bob", ">=18"),
    ("charlie", ">=18"),
    ("dave", "<18"),
    ("eve", "<18"),
]

MEDICATIONS = [
    ("myalept", "high"),
    ("danyelza", "high"),
    ("paracetamol", "low"),
    ("ibuprofen", "low"),
    ("eliquis", "high"),
]

TREATMENTS = [
    ("alice", "myalept"),
    ("alice", "danyelza"),
    ("bob", "paracetamol"),
    ("charlie", "ibuprofen"),
    ("eve", "eliquis"),
]

SCHEMA = {
    "entities": [
        {
            "name": "Patient",
            "key": "PatientId",
            "attributes": [{"name": "Age", "range": ["<18", ">=18"]}],
        },
        {
            "name": "Medication",
            "key": "MedicationId",
            "attributes": [{"name": "Costs", "range": ["low", "high"]}],
        },
    ],
    "relationships": [
        {"name": "Treat", "participants": ["Patient", "Medication"], "attributes": []}
    ],
}

# The hand-checkable reference clustering used throughout the docs: patients
# and medications each split into two groups.
REFERENCE_CLUSTERS = {
    "Patient": {"alice": "p1", "eve": "p1", "bob": "p2", "charlie": "p2", "dave": "p2"},
    "Medication": {
        "myalept": "m1",
        "danyelza": "m1",
        "eliquis": "m1",
        "paracetamol": "m2",
        "ibuprofen": "m2",
    },
}


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)] + [",".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_toy_database(directory) -> tuple[Path, Path]:
    """Write the example schema and CSVs; returns (schema_path, data_dir)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    schema_path = directory / "schema.json"
    schema_path.write_text(json.dumps(SCHEMA, indent=1) + "\n", encoding="utf-8")
    _write_csv(directory / "Patient.csv", ["PatientId", "Age"], PATIENTS)
    _write_csv(directory / "Medication.csv", ["MedicationId", "Costs"], MEDICATIONS)
    _write_csv(directory / "Treat.csv", ["PatientId", "MedicationId"], TREATMENTS)
    return schema_path, directory


def write_reference_clusters(path) -> Path:
    """Write the reference cluster assignment in the importable CSV format."""
    path = Path(path)
    rows = [["entity_class", "key", "cluster"]]
    for cls, mapping in REFERENCE_CLUSTERS.items():
        for key in sorted(mapping):
            rows.append([cls, key, mapping[key]])
    path.write_text("\n".join(",".join(r) for r in rows) + "\n", encoding="utf-8")
    return path


def load_toy(directory):
    """Write the toy database into ``directory`` and load it back."""
    from .ingest import load_instance

    schema_path, data_dir = write_toy_database(directory)
    return load_instance(schema_path, data_dir)
