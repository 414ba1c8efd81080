import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from src.services.errors import DivergenceError, LevelTableError
from src.services.fim import (
    ACTION_ORDER,
    ActionDistribution,
    InteractionModel,
    LevelTable,
    RelationshipLevel,
    annotate_levels_by_frequency,
    empirical_distribution,
    generate_interactions,
    infer_level,
    reward_fine,
    reward_r1,
    reward_r2,
    similarity_thresholds,
)
from src.services.social_graph import EdgeKind


def decimal_kl(p, q):
    getcontext().prec = 50
    total = Decimal(0)
    for a, b in zip(p, q):
        if a > 0:
            da, db = Decimal(a), Decimal(b)
            total += da * (da / db).ln()
    return float(total)


def test_default_table_rows_are_distributions():
    table = LevelTable.default()
    for level in RelationshipLevel:
        assert math.fsum(table.rows[level].probabilities) == pytest.approx(1.0)
    assert table.rows[RelationshipLevel.SUPPORT_CLIQUE].argmax() is EdgeKind.COMMENT
    assert table.rows[RelationshipLevel.ACTIVE_NETWORK].argmax() is EdgeKind.LIKE


def test_level_table_validation():
    with pytest.raises(LevelTableError):
        LevelTable.from_mapping({1: [0.5, 0.5, 0.0, 0.0]})
    rows = {lvl: [0.25] * 4 for lvl in (1, 2, 3, 4)}
    rows[2] = [0.5, 0.5, 0.5, 0.0]
    with pytest.raises(LevelTableError):
        LevelTable.from_mapping(rows)
    rows[2] = {"like": 1.0}
    assert LevelTable.from_mapping(rows).rows[RelationshipLevel.SYMPATHY_GROUP]["like"] == 1.0


def test_infer_level_thresholds():
    t = (0.9, 0.7, 0.4)
    assert infer_level([1, 0], [1, 0], t) is RelationshipLevel.SUPPORT_CLIQUE
    assert infer_level([1, 0], [0.8, 0.6], t) is RelationshipLevel.SYMPATHY_GROUP
    assert infer_level([1, 0], [0.5, math.sqrt(0.75)], t) is RelationshipLevel.AFFINITY_GROUP
    assert infer_level([1, 0], [0, 1], t) is RelationshipLevel.ACTIVE_NETWORK
    with pytest.raises(ValueError):
        infer_level([1, 0], [1, 0], (0.4, 0.7, 0.9))


def test_similarity_thresholds_descending(small_profiles):
    t = similarity_thresholds(small_profiles, n_pairs=2000, seed=5)
    assert 1 > t[0] > t[1] > t[2] > -1
    assert t == similarity_thresholds(small_profiles, n_pairs=2000, seed=5)


def test_annotate_levels_by_frequency():
    counts = {(0, i): i for i in range(1, 9)}
    levels = annotate_levels_by_frequency(counts)
    assert levels[(0, 8)] is RelationshipLevel.SUPPORT_CLIQUE
    assert levels[(0, 1)] is RelationshipLevel.ACTIVE_NETWORK
    assert annotate_levels_by_frequency({}) == {}


@pytest.mark.parametrize("delta", [0, 1, 2, 3])
def test_reward_r1(delta):
    assert abs(reward_r1(1 + delta, 1) - math.exp(-delta)) <= 1e-12
    assert reward_r1(1, 1 + delta) == reward_r1(1 + delta, 1)


def test_reward_r2_matches_high_precision_kl():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p = ActionDistribution(tuple(rng.dirichlet(np.ones(4))))
        q = ActionDistribution(tuple(rng.dirichlet(np.ones(4))))
        r2 = reward_r2(p, q)
        assert r2 <= 0
        assert abs(r2 + decimal_kl(p.probabilities, q.probabilities)) <= 1e-9
        assert reward_r2(p, p) == 0.0


def test_reward_r2_zero_reference_mass():
    p = ActionDistribution((0.5, 0.5, 0.0, 0.0))
    q = ActionDistribution((1.0, 0.0, 0.0, 0.0))
    with pytest.raises(DivergenceError):
        reward_r2(p, q)
    assert reward_r2(q, p) == pytest.approx(-math.log(2))


def test_generate_interactions_deterministic():
    table = LevelTable.default()
    a = generate_interactions(3, 7, 2, 25, table, seed=11)
    b = generate_interactions(3, 7, 2, 25, table, seed=11)
    assert a == b
    assert [r.tweet_ref for r in a[:2]] == ["t-3-7-0", "t-3-7-1"]
    assert all(r.actor == 3 and r.target == 7 for r in a)
    assert generate_interactions(3, 7, 2, 0, table, seed=11) == []
    with pytest.raises(ValueError):
        generate_interactions(3, 7, 2, -1, table, seed=11)


@pytest.mark.parametrize("level", list(RelationshipLevel))
def test_generated_frequencies_converge_to_table(level):
    table = LevelTable.default()
    records = generate_interactions(0, 1, level, 10_000, table, seed=level.value)
    empirical = empirical_distribution(records, epsilon=0.0)
    row = table.rows[level]
    for kind in ACTION_ORDER:
        assert abs(empirical[kind] - row[kind]) <= 0.02
    assert reward_fine(level, level, empirical, row).total >= 0.99


@pytest.mark.parametrize("level", list(RelationshipLevel))
def test_frequency_error_shrinks_with_sample_count(level):
    table = LevelTable.default()
    row = table.rows[level].as_array()
    medians = []
    for count in (100, 1_000, 10_000):
        errors = []
        for trial in range(3):
            records = generate_interactions(0, 1, level, count, table, seed=17 + trial)
            empirical = empirical_distribution(records, epsilon=0.0).as_array()
            errors.append(np.abs(empirical - row).max())
        medians.append(np.median(errors))
    assert medians[0] >= medians[1] >= medians[2]


def test_empirical_distribution_smoothing():
    dist = empirical_distribution([], epsilon=1.0)
    assert dist.probabilities == (0.25, 0.25, 0.25, 0.25)
    with pytest.raises(ValueError):
        empirical_distribution([], epsilon=0.0)


def test_interaction_model_end_to_end(small_profiles):
    model = InteractionModel(count_per_edge=12)
    with pytest.raises(ValueError):
        model.level_for(small_profiles, 0, 1)
    model.calibrate(small_profiles, seed=1)
    level, records = model.generate_for_edge(small_profiles, 0, 4, seed=1)
    assert len(records) == 12
    score = model.score_sequence(level, records)
    assert score is not None and score <= 1.0
