import json

import pytest

from src.services.dataset_store import SCHEMA_VERSION, DatasetStore
from src.services.errors import DatasetFormatError
from src.services.social_graph import EdgeKind, SocialGraph


@pytest.fixture
def annotated_graph(small_profiles):
    g = SocialGraph(len(small_profiles), small_profiles)
    for u in range(0, 39):
        g.add_follow_edge(u, u + 1)
    g.add_follow_edge(39, 0)
    g.attach_interaction(0, 1, EdgeKind.LIKE)
    g.attach_interaction(5, 6, EdgeKind.COMMENT)
    g.attach_interaction(0, 1, EdgeKind.RETWEET)
    return g


@pytest.mark.parametrize("gzip", [False, True])
def test_round_trip_is_byte_identical(tmp_path, annotated_graph, gzip):
    first = DatasetStore(tmp_path / "a", gzip=gzip)
    manifest = first.save(annotated_graph, {"seed": 7, "config_hash": "abc"})
    assert manifest["edge_count"] == 40 and manifest["interaction_count"] == 3
    loaded, loaded_manifest = DatasetStore(tmp_path / "a").load()
    assert loaded_manifest == manifest
    assert list(loaded.edges()) == list(annotated_graph.edges())
    assert loaded.interactions == annotated_graph.interactions
    assert loaded.profiles.equals(annotated_graph.profiles)

    second = DatasetStore(tmp_path / "b", gzip=gzip)
    second.save(loaded, {"seed": 7, "config_hash": "abc"})
    for name in ("nodes", "edges"):
        a = getattr(first, f"{name}_path")
        b = getattr(second, f"{name}_path")
        assert a.name.endswith(".gz") == gzip
        assert a.read_bytes() == b.read_bytes()
    assert first.manifest_path.read_bytes() == second.manifest_path.read_bytes()


def test_round_trip_without_profiles(tmp_path, three_cycle):
    store = DatasetStore(tmp_path)
    store.save(three_cycle)
    assert store.nodes_path.read_text().splitlines() == ['{"id":0}', '{"id":1}', '{"id":2}']
    loaded, manifest = DatasetStore(tmp_path).load()
    assert loaded.profiles is None
    assert manifest["has_profiles"] is False
    assert list(loaded.edges()) == list(three_cycle.edges())


def test_edge_records_put_follows_first(annotated_graph):
    records = DatasetStore.edge_records(annotated_graph)
    kinds = [r["kind"] for r in records]
    assert kinds[:40] == ["follow"] * 40
    assert kinds[40:] == ["like", "comment", "retweet"]


def test_count_mismatch_is_rejected(tmp_path, three_cycle):
    store = DatasetStore(tmp_path)
    store.save(three_cycle)
    manifest = json.loads(store.manifest_path.read_text())
    manifest["edge_count"] = 4
    store.manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(DatasetFormatError):
        store.load()


def test_schema_mismatch_is_rejected(tmp_path, three_cycle):
    store = DatasetStore(tmp_path)
    store.save(three_cycle)
    manifest = json.loads(store.manifest_path.read_text())
    manifest["schema_version"] = SCHEMA_VERSION + 1
    store.manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(DatasetFormatError):
        store.load_manifest()


def test_dangling_interaction_is_rejected(tmp_path, three_cycle):
    store = DatasetStore(tmp_path)
    store.save(three_cycle)
    with store.edges_path.open("a") as fh:
        fh.write('{"source":1,"target":0,"kind":"like"}\n')
    manifest = json.loads(store.manifest_path.read_text())
    manifest["interaction_count"] = 1
    store.manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(DatasetFormatError):
        store.load()


def test_missing_files(tmp_path):
    with pytest.raises(DatasetFormatError):
        DatasetStore(tmp_path).load()
    store = DatasetStore(tmp_path)
    with pytest.raises(DatasetFormatError):
        store.load_chain_log()
    assert store.load_interaction_records() == []
    assert store.load_report() is None


def test_chain_log_and_report(tmp_path, three_cycle):
    store = DatasetStore(tmp_path, gzip=True)
    manifest = store.save(three_cycle, chain_log=[{"nodes": [0, 1]}], report={"iterations_used": 2},
                          interaction_records=[{"actor": 0, "target": 1, "kind": "like"}])
    assert manifest["chains_logged"] == 1
    reader = DatasetStore(tmp_path)
    assert reader.load_chain_log() == [{"nodes": [0, 1]}]
    assert reader.load_report() == {"iterations_used": 2}
    assert reader.load_interaction_records()[0]["kind"] == "like"
