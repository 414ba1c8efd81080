import json

import pytest

from main import EXIT_OK, EXIT_PARTIAL, EXIT_VALIDATION, main
from src.services.dataset_store import DatasetStore
from src.services.profiles import load_profiles

GUIDED = ["build", "--strategy", "guided", "--n-bots", "40", "--communities", "4", "--tau", "0.9"]


def read_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


@pytest.fixture
def built(tmp_path):
    out = tmp_path / "gm"
    assert main(["--seed", "5", "--out", str(out), *GUIDED]) == EXIT_OK
    return out


def test_synth_writes_profiles(tmp_path):
    out = tmp_path / "synth"
    code = main(["--seed", "7", "--out", str(out), "synth", "--n", "30", "--communities", "3", "--dim", "8"])
    assert code == EXIT_OK
    table = load_profiles(out / "profiles.jsonl")
    assert len(table) == 30 and table.dimension == 8 and table.community_count == 3


def test_synth_rejects_bad_sizes(tmp_path):
    code = main(["--out", str(tmp_path), "synth", "--n", "3", "--communities", "5"])
    assert code == EXIT_VALIDATION


def test_build_writes_dataset(built):
    graph, manifest = DatasetStore(built).load()
    assert manifest["seed"] == 5
    assert manifest["strategy"] == "guided"
    assert manifest["partial"] is False
    assert manifest["composition"]["bots"] == 40
    assert graph.reachability_fraction().fraction >= 0.9
    assert (built / "config.json").exists()
    report = json.loads((built / "report.json").read_text())
    assert report["build"]["final_reachability"] >= 0.9


def test_build_is_deterministic(tmp_path, built):
    again = tmp_path / "again"
    assert main(["--seed", "5", "--out", str(again), *GUIDED]) == EXIT_OK
    for name in ("nodes.jsonl", "edges.jsonl", "interactions.jsonl", "chain_log.jsonl", "manifest.json", "config.json"):
        assert (built / name).read_bytes() == (again / name).read_bytes()


def test_build_output_same_on_more_threads(tmp_path, built):
    threaded = tmp_path / "threaded"
    assert main(["--seed", "5", "--threads", "3", "--out", str(threaded), *GUIDED]) == EXIT_OK
    for name in ("edges.jsonl", "interactions.jsonl", "chain_log.jsonl"):
        assert (built / name).read_bytes() == (threaded / name).read_bytes()


def test_changing_seed_changes_graph(tmp_path, built):
    other = tmp_path / "seed6"
    assert main(["--seed", "6", "--out", str(other), *GUIDED]) == EXIT_OK
    _, manifest = DatasetStore(other).load()
    assert manifest["seed"] == 6
    assert (built / "edges.jsonl").read_bytes() != (other / "edges.jsonl").read_bytes()


def test_build_hop_horizon_flag(tmp_path):
    out = tmp_path / "horizon"
    assert main(["--seed", "4", "--out", str(out), *GUIDED, "--hop-horizon", "3"]) == EXIT_OK
    graph, _ = DatasetStore(out).load()
    assert graph.reachability_fraction(max_hops=3).fraction >= 0.9
    report = json.loads((out / "report.json").read_text())
    assert report["build"]["hop_horizon"] == 3
    assert main(["--out", str(tmp_path / "bad"), *GUIDED, "--hop-horizon", "0"]) == EXIT_VALIDATION


def test_build_rejects_invalid_config(tmp_path):
    code = main(["--out", str(tmp_path), "build", "--n-bots", "10", "--communities", "50"])
    assert code == EXIT_VALIDATION
    assert main(["--threads", "0", "--out", str(tmp_path), "build"]) == EXIT_VALIDATION


def test_build_partial_exit_code(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "strategy": "guided",
        "guided": {"n_bots": 40, "n_communities": 4, "tau": 1.0, "max_completion_iters": 1},
    }))
    out = tmp_path / "partial"
    assert main(["--config", str(config), "--out", str(out), "build"]) == EXIT_PARTIAL
    _, manifest = DatasetStore(out).load()
    assert manifest["partial"] is True


@pytest.mark.parametrize("flags", [
    ["--strategy", "chung-lu", "--n", "50", "--weight", "3"],
    ["--strategy", "kronecker", "--k", "5"],
    ["--strategy", "random-mhop", "--n-bots", "30", "--communities", "3", "--m", "4", "--tau", "0.9"],
])
def test_build_baselines(tmp_path, flags):
    out = tmp_path / "baseline"
    assert main(["--seed", "3", "--out", str(out), "--threads", "1", "build", *flags]) == EXIT_OK
    graph, manifest = DatasetStore(out).load()
    assert manifest["edge_count"] == graph.edge_count > 0


def test_build_with_human_side(tmp_path):
    out = tmp_path / "mixed"
    code = main(["--seed", "2", "--out", str(out), *GUIDED, "--humans", "30", "--bridges", "5"])
    assert code == EXIT_OK
    _, manifest = DatasetStore(out).load()
    assert manifest["composition"]["humans"] == 30
    assert manifest["composition"]["bots"] == 40


def test_metrics_command(built):
    assert main(["metrics", str(built)]) == EXIT_OK
    data = json.loads((built / "metrics.json").read_text())
    assert data["node_count"] == 40
    assert data["neighborhood"]["p"][-1] >= 0.9
    assert (built / "metrics.csv").exists()


def test_compare_needs_two_graphs(tmp_path, built):
    assert main(["--out", str(tmp_path / "cmp"), "compare", str(built)]) == EXIT_VALIDATION
    other = tmp_path / "kron"
    assert main(["--out", str(other), "build", "--strategy", "kronecker", "--k", "5"]) == EXIT_OK
    assert main(["--out", str(tmp_path / "cmp"), "compare", str(built), str(other)]) == EXIT_OK
    assert (tmp_path / "cmp" / "compare.csv").read_text().startswith("graph,avg_hop,p6")


def test_export_chains(tmp_path, built):
    output = tmp_path / "chains.jsonl"
    assert main(["export-chains", str(built), "--output", str(output), "--walks", "5"]) == EXIT_OK
    _, manifest = DatasetStore(built).load()
    records = read_lines(output)
    assert len(records) == manifest["chains_generated"]
    assert all(r["nodes"][0] == r["source"] for r in records)
    assert (tmp_path / "walks.jsonl").exists()


def test_export_chains_without_log(tmp_path):
    out = tmp_path / "nolog"
    assert main(["--out", str(out), *GUIDED, "--no-chain-log"]) == EXIT_OK
    assert main(["export-chains", str(out)]) == EXIT_VALIDATION


def test_missing_dataset_is_a_validation_error(tmp_path):
    assert main(["metrics", str(tmp_path / "nothing")]) == EXIT_VALIDATION


@pytest.mark.slow
def test_large_mixed_build_composition(tmp_path):
    out = tmp_path / "large"
    code = main(["--seed", "42", "--out", str(out), "build", "--strategy", "guided",
                 "--n-bots", "1000", "--communities", "50", "--humans", "1000"])
    assert code == EXIT_OK
    _, manifest = DatasetStore(out).load()
    composition = manifest["composition"]
    assert composition["bots"] == 1000
    assert composition["humans"] == 1000
    assert composition["communities"] == 50
