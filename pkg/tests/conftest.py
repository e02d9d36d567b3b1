import pytest

from relgen.datasets import load_toy, write_reference_clusters
from relgen.ingest import augmented_full_join


@pytest.fixture(scope="session")
def toy(tmp_path_factory):
    """(schema, instance) for the bundled patients/medications example."""
    return load_toy(tmp_path_factory.mktemp("toydb"))


@pytest.fixture(scope="session")
def toy_join(toy):
    schema, inst = toy
    return augmented_full_join(schema, inst)


@pytest.fixture(scope="session")
def reference_clusters_file(tmp_path_factory):
    return write_reference_clusters(tmp_path_factory.mktemp("clusters") / "clusters.csv")
