import math

import numpy as np
import pytest

from src.services.baselines import (
    KroneckerInitiator,
    RandomMhopPolicy,
    WeightSequence,
    chung_lu,
    kronecker,
    kronecker_naive,
    power_law_weights,
    random_mhop_completion,
    weights_from_config,
)
from src.services.errors import ChainError, InsufficientNodesError
from src.services.seeding import derive_rng
from src.services.social_graph import SocialGraph


def reference_chung_lu(w, seed):
    w = np.asarray(w, dtype=float)
    rng = derive_rng(seed, "chung-lu")
    edges = []
    for i in range(len(w)):
        u = rng.random(len(w))
        for j in range(len(w)):
            if j != i and u[j] < min(1.0, w[i] * w[j] / w.sum()):
                edges.append((i, j))
    return edges


# -- random m-hop ------------------------------------------------------------------

def test_random_mhop_m2_adds_direct_edges():
    g = SocialGraph(5)
    report = random_mhop_completion(g, 2, 1.0, 500, seed=3)
    assert report.converged
    assert g.reachability_fraction().fraction == 1.0


def test_random_mhop_validation():
    with pytest.raises(InsufficientNodesError):
        RandomMhopPolicy(SocialGraph(3), 4)
    with pytest.raises(ChainError):
        RandomMhopPolicy(SocialGraph(10), 1)
    with pytest.raises(ChainError):
        RandomMhopPolicy(SocialGraph(10), 8)


def test_random_mhop_chain_shape():
    policy = RandomMhopPolicy(SocialGraph(10), 5)
    chain = policy(0, 9, derive_rng(0, "test"))
    assert chain.source == 0 and chain.target == 9
    assert chain.hops == 4
    assert len(set(chain.nodes)) == 5


def test_random_mhop_joins_disjoint_cliques():
    g = SocialGraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    assert g.reachability_fraction().fraction == pytest.approx(4 / 12)
    report = random_mhop_completion(g, 3, 1.0, 200, seed=1, debug=True)
    assert report.converged
    assert report.final_reachability == 1.0
    assert report.edges_added > 0


# -- Chung-Lu ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_chung_lu_matches_reference_draw(n):
    w = [1.0 + i for i in range(n)]
    g = chung_lu(WeightSequence(tuple(w)), seed=n)
    assert sorted(g.edges()) == sorted(reference_chung_lu(w, n))


def test_chung_lu_deterministic():
    weights = power_law_weights(200, seed=1)
    a = chung_lu(weights, seed=4)
    b = chung_lu(weights, seed=4)
    assert list(a.edges()) == list(b.edges())


def test_chung_lu_rejects_bad_weights():
    with pytest.raises(ValueError):
        WeightSequence((1.0, 0.0))
    with pytest.raises(InsufficientNodesError):
        chung_lu(WeightSequence((1.0,)), seed=0)


@pytest.mark.slow
def test_chung_lu_constant_weight_degree():
    means = []
    for seed in range(20):
        g = chung_lu(WeightSequence.constant(1000, 5.0), seed=seed)
        means.append(g.edge_count / 1000)
    assert abs(np.mean(means) - 999 * 25 / 5000) <= 0.05


def test_power_law_weights():
    w = power_law_weights(100, exponent=2.5, seed=2)
    assert len(w) == 100
    assert all(1 <= x <= 99 for x in w.weights)
    assert w == power_law_weights(100, exponent=2.5, seed=2)
    with pytest.raises(ValueError):
        power_law_weights(100, exponent=1.0)


def test_weights_from_config_precedence():
    assert weights_from_config(3, [1, 2, 3], 5.0, 2.5, 0).weights == (1.0, 2.0, 3.0)
    assert weights_from_config(3, None, 5.0, 2.5, 0).weights == (5.0, 5.0, 5.0)
    assert len(weights_from_config(30, None, None, 2.5, 0)) == 30


# -- Kronecker ---------------------------------------------------------------------

def test_initiator_validation_and_expectation():
    with pytest.raises(ValueError):
        KroneckerInitiator(((1.2, 0.5), (0.5, 0.2)))
    init = KroneckerInitiator()
    assert init.max_entry == 0.9
    assert init.edge_probability(0b10, 0b01, 2) == pytest.approx(0.25)
    assert init.expected_edges(3) == pytest.approx(2.1 ** 3 - 1.1 ** 3)


def test_kronecker_all_ones_is_complete():
    g = kronecker(KroneckerInitiator(((1.0, 1.0), (1.0, 1.0))), 4, seed=0)
    assert g.edge_count == 16 * 15


def test_kronecker_all_zeros_is_empty():
    g = kronecker(KroneckerInitiator(((0.0, 0.0), (0.0, 0.0))), 5, seed=0)
    assert g.node_count == 32
    assert g.edge_count == 0


@pytest.mark.parametrize("k", range(1, 7))
def test_pruned_sampler_matches_naive(k):
    init = KroneckerInitiator()
    for seed in range(5):
        assert list(kronecker(init, k, seed).edges()) == list(kronecker_naive(init, k, seed).edges())


def test_kronecker_no_self_loops_and_in_range():
    g = kronecker(KroneckerInitiator(), 6, seed=3)
    assert all(u != v and 0 <= u < 64 and 0 <= v < 64 for u, v in g.edges())


def test_kronecker_edge_count_near_expectation():
    init = KroneckerInitiator()
    counts = [kronecker(init, 10, seed).edge_count for seed in range(20)]
    expected = init.expected_edges(10)
    assert math.fabs(np.mean(counts) - expected) <= 0.05 * expected


def test_kronecker_rejects_large_k():
    with pytest.raises(ValueError):
        kronecker(KroneckerInitiator(), 21, seed=0)
