import json

import pytest

from src.services.errors import ConfigValidationError
from src.services.schemas import BuildConfig, GsiConfig, HumanConfig, RandomMhopConfig, RunConfig, SynthConfig


def test_for_strategy_defaults():
    run = RunConfig.for_strategy("guided", seed=9)
    assert isinstance(run.strategy_config, BuildConfig)
    assert run.strategy_config.seed == 9
    assert run.strategy_config.tau == 0.97
    assert run.strategy_config.gsi.max_hops == 6
    with pytest.raises(ConfigValidationError):
        RunConfig.for_strategy("watts-strogatz")


def test_exactly_one_strategy_block():
    with pytest.raises(ConfigValidationError):
        RunConfig.load_dict({"strategy": "guided"})
    with pytest.raises(ConfigValidationError):
        RunConfig.load_dict({"strategy": "guided", "guided": {}, "kronecker": {}})
    with pytest.raises(ConfigValidationError):
        RunConfig.load_dict({"strategy": "guided", "kronecker": {}})
    run = RunConfig.load_dict({"strategy": "chung-lu", "chung-lu": {"n": 10}})
    assert run.strategy_config.n == 10


def test_unknown_fields_are_rejected():
    with pytest.raises(ConfigValidationError):
        RunConfig.load_dict({"strategy": "kronecker", "kronecker": {"k": 4, "kk": 1}})


def test_config_hash_tracks_content():
    a = RunConfig.for_strategy("kronecker", seed=1)
    b = RunConfig.for_strategy("kronecker", seed=1)
    c = RunConfig.for_strategy("kronecker", seed=2)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert json.loads(a.canonical_json())["kronecker"]["k"] == 10


def test_from_file_seed_override(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"strategy": "guided", "seed": 3, "guided": {"n_bots": 20, "n_communities": 2}}))
    run = RunConfig.from_file(path, seed=11)
    assert run.seed == 11 and run.strategy_config.seed == 11
    path.write_text("{not json")
    with pytest.raises(ConfigValidationError):
        RunConfig.from_file(path)
    with pytest.raises(ConfigValidationError):
        RunConfig.from_file(tmp_path / "missing.json")


@pytest.mark.parametrize("model, payload", [
    (BuildConfig, {"n_bots": 5, "n_communities": 6}),
    (SynthConfig, {"n": 3, "n_communities": 4}),
    (HumanConfig, {"n_humans": 2, "n_communities": 3}),
    (GsiConfig, {"min_hops": 5, "max_hops": 4}),
    (GsiConfig, {"max_hops": 7}),
    (BuildConfig, {"tau": 1.5}),
    (BuildConfig, {"hop_horizon": 0}),
    (RandomMhopConfig, {"m": 5, "hop_horizon": 3}),
])
def test_block_validation(model, payload):
    with pytest.raises(ValueError):
        model.model_validate(payload)


def test_human_config_with_graph_path_skips_size_check():
    assert HumanConfig(graph_path="runs/humans", n_humans=2, n_communities=3).graph_path == "runs/humans"


def test_fim_level_table_validation():
    rows = {str(level): [0.25] * 4 for level in (1, 2, 3, 4)}
    run = RunConfig.load_dict({"strategy": "guided", "guided": {"fim": {"level_table": rows}}})
    assert run.strategy_config.fim.level_table["1"] == [0.25] * 4
    rows["3"] = [0.5, 0.5, 0.5, 0.5]
    with pytest.raises(ConfigValidationError):
        RunConfig.load_dict({"strategy": "guided", "guided": {"fim": {"level_table": rows}}})


def test_hop_horizon_defaults():
    assert BuildConfig().hop_horizon == 6
    assert HumanConfig().hop_horizon == 6
    assert RandomMhopConfig().hop_horizon is None
    assert RandomMhopConfig(hop_horizon=4).hop_horizon == 4
