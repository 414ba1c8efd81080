import json

import numpy as np
import pytest

from src.services.errors import ProfileError
from src.services.profiles import (
    Population,
    ProfileTable,
    community_cosine_gap,
    cosine,
    load_profiles,
    save_profiles,
    synth_profiles,
)


def test_cosine_basic_values():
    assert cosine([1, 0], [1, 0]) == 1.0
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 0], [-1, 0]) == -1.0
    with pytest.raises(ProfileError):
        cosine([1, 0], [1, 0, 0])
    with pytest.raises(ProfileError):
        cosine([0, 0], [1, 0])


def test_build_normalizes_rows():
    table = ProfileTable.build([[3.0, 4.0], [0.0, 2.0]])
    assert np.allclose(np.linalg.norm(table.embeddings, axis=1), 1.0)
    assert table.cosine(0, 1) == pytest.approx(0.8)
    assert table.populations == (Population.BOT, Population.BOT)
    with pytest.raises(ProfileError):
        ProfileTable.build([[0.0, 0.0]])
    with pytest.raises(ProfileError):
        table.embedding(2)


def test_synth_profiles_planted_labels():
    table = synth_profiles(100, 5, d=32, seed=1)
    assert len(table) == 100
    assert table.dimension == 32
    assert table.communities == tuple(i % 5 for i in range(100))
    assert table.community_count == 5


def test_synth_profiles_deterministic():
    a = synth_profiles(50, 5, seed=9)
    b = synth_profiles(50, 5, seed=9)
    c = synth_profiles(50, 5, seed=10)
    assert a.equals(b)
    assert not a.equals(c)


def test_synth_profiles_intra_exceeds_inter():
    intra, inter = community_cosine_gap(synth_profiles(200, 4, d=32, intra_spread=0.3, seed=4))
    assert intra > inter


def test_synth_profiles_rejects_bad_arguments():
    with pytest.raises(ProfileError):
        synth_profiles(3, 5)
    with pytest.raises(ProfileError):
        synth_profiles(10, 2, d=1)
    with pytest.raises(ProfileError):
        synth_profiles(10, 2, intra_spread=0.0)


@pytest.mark.parametrize("suffix", ["profiles.jsonl", "profiles.jsonl.gz"])
def test_save_and_load_round_trip(tmp_path, suffix):
    table = synth_profiles(30, 3, d=8, seed=2, population="human")
    path = save_profiles(table, tmp_path / suffix)
    loaded = load_profiles(path)
    assert loaded.equals(table)
    again = save_profiles(loaded, tmp_path / ("again-" + suffix))
    assert again.read_bytes() == path.read_bytes()


def test_load_renormalizes_and_keeps_labels(tmp_path):
    path = tmp_path / "p.jsonl"
    rows = [
        {"id": 1, "label": "human", "community": None, "embedding": [0.0, 5.0]},
        {"id": 0, "label": "bot", "community": 2, "embedding": [2.0, 0.0]},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    table = load_profiles(path)
    assert np.allclose(table.embeddings, [[1.0, 0.0], [0.0, 1.0]])
    assert table.communities == (2, None)
    assert table.populations == (Population.BOT, Population.HUMAN)


@pytest.mark.parametrize("rows", [
    [{"id": 0, "label": "bot", "embedding": [1.0, 0.0]}, {"id": 1, "label": "bot", "embedding": [1.0]}],
    [{"id": 0, "label": "bot", "embedding": [1.0]}, {"id": 2, "label": "bot", "embedding": [1.0]}],
    [{"id": 0, "label": "alien", "embedding": [1.0]}],
    [{"id": 0, "label": "bot", "embedding": [0.0]}],
])
def test_load_rejects_malformed(tmp_path, rows):
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    with pytest.raises(ProfileError):
        load_profiles(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(ProfileError):
        load_profiles(tmp_path / "missing.jsonl")
