import itertools
import json

import pandas as pd
import pytest

from src.services.errors import DegenerateGraphError
from src.services.metrics import (
    COMPARE_COLUMNS,
    MetricsManager,
    average_hop_distance,
    clustering_by_degree,
    degeneracy,
    degree_histogram,
    effective_diameter,
    interaction_diversity,
    isolated_fraction,
    neighborhood_function,
    tail_ratio,
)
from src.services.social_graph import EdgeKind, SocialGraph


def complete_graph(n):
    return SocialGraph.from_edges(n, [(u, v) for u in range(n) for v in range(n) if u != v])


def undirected_pairs(g):
    return {frozenset(e) for e in g.edges()}


def brute_force_clustering(g):
    pairs = undirected_pairs(g)
    neighbors = {v: {w for p in pairs if v in p for w in p if w != v} for v in range(g.node_count)}
    per_degree = {}
    for v, nbrs in neighbors.items():
        k = len(nbrs)
        if k < 2:
            continue
        links = sum(1 for a, b in itertools.combinations(sorted(nbrs), 2) if frozenset((a, b)) in pairs)
        per_degree.setdefault(k, []).append(2 * links / (k * (k - 1)))
    return {k: sum(cs) / len(cs) for k, cs in per_degree.items()}


def brute_force_degeneracy(g):
    pairs = undirected_pairs(g)
    best = 0
    nodes = range(g.node_count)
    for size in range(1, g.node_count + 1):
        for subset in itertools.combinations(nodes, size):
            members = set(subset)
            inner = [p for p in pairs if p <= members]
            min_deg = min(sum(1 for p in inner if v in p) for v in members)
            best = max(best, min_deg)
    return best


def test_three_cycle_paths(three_cycle):
    nf = neighborhood_function(three_cycle)
    assert nf.p == [0.5, 1.0]
    assert average_hop_distance(three_cycle) == 1.5
    assert effective_diameter(nf) == 2
    assert nf.at(6) == 1.0


def test_complete_graph_paths():
    g = complete_graph(5)
    nf = neighborhood_function(g)
    assert nf.p == [1.0] * 4
    assert average_hop_distance(g) == 1.0


def test_edgeless_graph():
    g = SocialGraph(4)
    nf = neighborhood_function(g)
    assert nf.p == [0.0, 0.0, 0.0]
    with pytest.raises(DegenerateGraphError):
        average_hop_distance(g)
    assert effective_diameter(nf) is None
    with pytest.raises(DegenerateGraphError):
        neighborhood_function(SocialGraph(1))


@pytest.mark.parametrize("seed", range(10))
def test_neighborhood_tail_equals_reachability(random_graph, seed):
    g = random_graph(15, 0.1, seed)
    nf = neighborhood_function(g)
    assert nf.p[-1] == pytest.approx(g.reachability_fraction().fraction, abs=1e-12)
    assert all(b >= a for a, b in zip(nf.p, nf.p[1:]))


def test_triangle_and_star_clustering(three_cycle):
    assert clustering_by_degree(three_cycle).buckets == {2: (1.0, 3)}
    star = SocialGraph.from_edges(5, [(0, v) for v in range(1, 5)])
    assert clustering_by_degree(star).buckets == {4: (0.0, 1)}
    assert clustering_by_degree(star).mean_below(4) is None


@pytest.mark.parametrize("seed", range(100))
def test_clustering_matches_brute_force(random_graph, seed):
    g = random_graph(6 + seed % 8, 0.25, seed)
    got = {k: c for k, (c, _) in clustering_by_degree(g).buckets.items()}
    expected = brute_force_clustering(g)
    assert got.keys() == expected.keys()
    for k in expected:
        assert got[k] == pytest.approx(expected[k], abs=1e-12)


def test_degeneracy_known_graphs():
    assert degeneracy(complete_graph(4)) == 3
    tree = SocialGraph.from_edges(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)])
    assert degeneracy(tree) == 1
    assert degeneracy(SocialGraph(3)) == 0


@pytest.mark.parametrize("seed", range(20))
def test_degeneracy_matches_subset_search(random_graph, seed):
    g = random_graph(8, 0.3, seed)
    assert degeneracy(g) == brute_force_degeneracy(g)


def test_degree_histogram_and_ccdf():
    g = SocialGraph.from_edges(4, [(0, 1), (2, 1), (3, 1), (0, 2)])
    hist = degree_histogram(g, "in")
    assert hist.counts == {0: 2, 1: 1, 3: 1}
    assert hist.ccdf == {0: 1.0, 1: 0.5, 3: 0.25}
    assert degree_histogram(g, "out", nodes=[0, 1]).counts == {0: 1, 2: 1}
    with pytest.raises(ValueError):
        degree_histogram(g, "both")


def test_log_binned_histogram():
    g = SocialGraph.from_edges(8, [(v, 0) for v in range(1, 8)] + [(1, 2), (3, 2)])
    hist = degree_histogram(g, "in", log_bins=True)
    assert hist.counts == {0: 6, 2: 1, 4: 1}


def test_tail_ratio():
    star = SocialGraph.from_edges(5, [(v, 0) for v in range(1, 5)])
    assert tail_ratio(star) == 4.0
    cycle = SocialGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    assert tail_ratio(cycle) == 1.0
    with pytest.raises(DegenerateGraphError):
        tail_ratio(SocialGraph(3))


def test_isolated_fraction_and_diversity():
    g = SocialGraph.from_edges(4, [(0, 1), (1, 2)])
    assert isolated_fraction(g) == 0.25
    assert interaction_diversity(g) is None
    g.attach_interaction(0, 1, EdgeKind.LIKE)
    g.attach_interaction(1, 2, EdgeKind.LIKE)
    assert interaction_diversity(g) == 0.0
    for kind in (EdgeKind.RETWEET, EdgeKind.COMMENT):
        g.attach_interaction(0, 1, kind)
    assert interaction_diversity(g) == pytest.approx(0.5)


def test_report_and_save(tmp_path, three_cycle):
    manager = MetricsManager(threads=1)
    report = manager.compute_report(three_cycle)
    assert report.avg_hop == 1.5
    assert report.reachability == 1.0
    assert report.degeneracy == 2
    json_path, csv_path = manager.save_report(report, tmp_path)
    data = json.loads(json_path.read_text())
    assert data["neighborhood"]["p"] == [0.5, 1.0]
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ["metric", "key", "value"]
    assert "avg_hop" in set(frame["metric"])


def test_report_on_edgeless_graph():
    report = MetricsManager(threads=1).compute_report(SocialGraph(3))
    assert report.avg_hop is None
    assert report.reachability == 0.0
    assert report.tail_ratio is None
    assert report.isolated_fraction == 1.0


def test_compare(random_graph, three_cycle):
    manager = MetricsManager(threads=2)
    frame = manager.compare({"cycle": three_cycle, "random": random_graph(20, 0.1, 1)})
    assert list(frame.columns) == COMPARE_COLUMNS
    assert list(frame["graph"]) == ["cycle", "random"]
    assert frame.loc[0, "avg_hop"] == 1.5
    with pytest.raises(ValueError):
        manager.compare({"cycle": three_cycle})
