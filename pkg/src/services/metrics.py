"""
Metrics Service

Structural-realism metrics: neighborhood function, hop distances, clustering
by degree, degeneracy, degree distributions and tail statistics.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from scipy.sparse import csgraph

from config.settings import DEFAULT_THREADS
from .errors import DegenerateGraphError
from .social_graph import INTERACTION_KINDS, SocialGraph

logger = logging.getLogger(__name__)

DIRECTIONS = ("in", "out")
COMPARE_COLUMNS = ["graph", "avg_hop", "p6", "degeneracy", "tail_ratio", "clustering_lt20"]


@dataclass(frozen=True)
class NeighborhoodFunction:
    """
    Cumulative hop-distance distribution over ordered pairs.

    ``counts[h]`` is the number of ordered pairs at distance exactly h;
    ``p[h - 1]`` is the fraction of all ordered pairs within h hops.
    """

    counts: Tuple[int, ...]
    total_pairs: int
    max_h: int

    @property
    def p(self) -> List[float]:
        out, running = [], 0
        for h in range(1, self.max_h + 1):
            running += self.counts[h] if h < len(self.counts) else 0
            out.append(running / self.total_pairs)
        return out

    def at(self, h: int) -> float:
        """P(h); values past max_h are clamped to P(max_h)."""
        if h < 1:
            raise ValueError("h must be at least 1")
        reached = sum(self.counts[1:min(h, self.max_h) + 1])
        return reached / self.total_pairs

    @property
    def reachable_pairs(self) -> int:
        return sum(self.counts[1:])


@dataclass(frozen=True)
class ClusteringByDegree:
    buckets: Dict[int, Tuple[float, int]]

    def mean_below(self, degree_limit: int) -> Optional[float]:
        """Node-weighted mean clustering over degrees below ``degree_limit``."""
        parts = [(c * n, n) for k, (c, n) in self.buckets.items() if k < degree_limit]
        nodes = sum(n for _, n in parts)
        if nodes == 0:
            return None
        return math.fsum(s for s, _ in parts) / nodes


@dataclass(frozen=True)
class DegreeHistogram:
    direction: str
    counts: Dict[int, int]
    ccdf: Dict[int, float]
    log_bins: bool = False


@dataclass
class MetricsReport:
    """Every structural metric of one graph snapshot; None marks undefined values."""

    node_count: int
    edge_count: int
    neighborhood: Optional[NeighborhoodFunction]
    avg_hop: Optional[float]
    effective_diameter: Optional[int]
    reachability: Optional[float]
    clustering: ClusteringByDegree
    degeneracy: int
    core_by_degree: Dict[int, float]
    in_degree_hist: DegreeHistogram
    out_degree_hist: DegreeHistogram
    tail_ratio: Optional[float]
    tail_ratio_out: Optional[float]
    isolated_fraction: Optional[float]
    interaction_diversity: Optional[float]
    populations: Dict[str, dict] = field(default_factory=dict)

    def p_at(self, h: int) -> Optional[float]:
        return self.neighborhood.at(h) if self.neighborhood is not None else None

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "neighborhood": None if self.neighborhood is None else {
                "max_h": self.neighborhood.max_h,
                "p": self.neighborhood.p,
            },
            "avg_hop": self.avg_hop,
            "effective_diameter": self.effective_diameter,
            "reachability": self.reachability,
            "clustering": {str(k): {"mean": c, "nodes": n} for k, (c, n) in sorted(self.clustering.buckets.items())},
            "degeneracy": self.degeneracy,
            "core_by_degree": {str(k): v for k, v in sorted(self.core_by_degree.items())},
            "in_degree_hist": _hist_dict(self.in_degree_hist),
            "out_degree_hist": _hist_dict(self.out_degree_hist),
            "tail_ratio": self.tail_ratio,
            "tail_ratio_out": self.tail_ratio_out,
            "isolated_fraction": self.isolated_fraction,
            "interaction_diversity": self.interaction_diversity,
            "populations": self.populations,
        }

    def to_rows(self) -> List[dict]:
        """Tidy (metric, key, value) rows for plotting."""
        rows = []
        if self.neighborhood is not None:
            rows += [{"metric": "p", "key": h, "value": v} for h, v in enumerate(self.neighborhood.p, 1)]
        for name in ("avg_hop", "effective_diameter", "reachability", "degeneracy", "tail_ratio",
                     "tail_ratio_out", "isolated_fraction", "interaction_diversity"):
            rows.append({"metric": name, "key": "", "value": getattr(self, name)})
        for k, (c, n) in sorted(self.clustering.buckets.items()):
            rows.append({"metric": "clustering", "key": k, "value": c})
            rows.append({"metric": "clustering_nodes", "key": k, "value": n})
        rows += [{"metric": "core_by_degree", "key": k, "value": v} for k, v in sorted(self.core_by_degree.items())]
        for hist in (self.in_degree_hist, self.out_degree_hist):
            rows += [{"metric": f"{hist.direction}_degree_count", "key": d, "value": c} for d, c in hist.counts.items()]
            rows += [{"metric": f"{hist.direction}_degree_ccdf", "key": d, "value": c} for d, c in hist.ccdf.items()]
        return rows


def _hist_dict(hist: DegreeHistogram) -> dict:
    return {
        "log_bins": hist.log_bins,
        "counts": {str(k): v for k, v in hist.counts.items()},
        "ccdf": {str(k): v for k, v in hist.ccdf.items()},
    }


# -- paths -------------------------------------------------------------------------

def _distance_counts(g: SocialGraph) -> np.ndarray:
    """Number of ordered pairs (u != v) at each finite directed distance."""
    n = g.node_count
    if n < 2:
        raise DegenerateGraphError("path metrics need at least two nodes")
    if g.edge_count == 0:
        return np.zeros(1, dtype=np.int64)
    dist = csgraph.shortest_path(g.to_csr(), method="D", directed=True, unweighted=True)
    finite = dist[np.isfinite(dist)].astype(np.int64)
    counts = np.bincount(finite)
    counts[0] = 0
    return counts


def neighborhood_function(g: SocialGraph, max_h: Optional[int] = None,
                          counts: Optional[np.ndarray] = None) -> NeighborhoodFunction:
    """
    Exact P(h) over ordered pairs for h = 1..max_h (default n - 1).

    Raises:
        DegenerateGraphError: If the graph has fewer than two nodes
    """
    n = g.node_count
    if n < 2:
        raise DegenerateGraphError("neighborhood function needs at least two nodes")
    max_h = n - 1 if max_h is None else max_h
    if max_h < 1:
        raise ValueError("max_h must be at least 1")
    counts = _distance_counts(g) if counts is None else counts
    return NeighborhoodFunction(tuple(int(c) for c in counts), n * (n - 1), max_h)


def average_hop_distance(g: SocialGraph, counts: Optional[np.ndarray] = None) -> float:
    """
    Mean shortest-path length over reachable ordered pairs only.

    Raises:
        DegenerateGraphError: If no ordered pair is reachable
    """
    counts = _distance_counts(g) if counts is None else counts
    reachable = int(counts.sum())
    if reachable == 0:
        raise DegenerateGraphError("no reachable ordered pairs")
    weighted = int(np.dot(np.arange(len(counts), dtype=np.int64), counts))
    return weighted / reachable


def effective_diameter(nf: NeighborhoodFunction, q: float = 0.9) -> Optional[int]:
    """Smallest h with P(h) >= q * P(max_h); None when nothing is reachable."""
    p = nf.p
    if not p or p[-1] == 0:
        return None
    goal = q * p[-1]
    for h, value in enumerate(p, 1):
        if value >= goal:
            return h
    return nf.max_h


# -- undirected structure -------------------------------------------------------

def undirected_projection(g: SocialGraph) -> nx.Graph:
    """Simple undirected graph with {u, v} iff u -> v or v -> u."""
    ug = nx.Graph()
    ug.add_nodes_from(range(g.node_count))
    ug.add_edges_from(g.edges())
    return ug


def clustering_by_degree(g: SocialGraph, projection: Optional[nx.Graph] = None) -> ClusteringByDegree:
    """
    Mean local clustering coefficient per undirected degree k >= 2.

    C_v = 2 T_v / (k (k - 1)) with T_v the triangles through v.
    """
    ug = undirected_projection(g) if projection is None else projection
    triangles = nx.triangles(ug)
    per_degree: Dict[int, List[float]] = {}
    for v in sorted(ug.nodes):
        k = ug.degree(v)
        if k < 2:
            continue
        per_degree.setdefault(k, []).append(2 * triangles[v] / (k * (k - 1)))
    return ClusteringByDegree({k: (math.fsum(cs) / len(cs), len(cs)) for k, cs in sorted(per_degree.items())})


def degeneracy(g: SocialGraph, projection: Optional[nx.Graph] = None) -> int:
    """Largest k with a non-empty k-core of the undirected projection (0 if empty)."""
    ug = undirected_projection(g) if projection is None else projection
    if ug.number_of_nodes() == 0:
        return 0
    return max(nx.core_number(ug).values())


def core_number_by_degree(g: SocialGraph, projection: Optional[nx.Graph] = None) -> Dict[int, float]:
    """Mean core number per undirected degree."""
    ug = undirected_projection(g) if projection is None else projection
    if ug.number_of_nodes() == 0:
        return {}
    cores = nx.core_number(ug)
    per_degree: Dict[int, List[int]] = {}
    for v in sorted(ug.nodes):
        per_degree.setdefault(ug.degree(v), []).append(cores[v])
    return {k: sum(cs) / len(cs) for k, cs in sorted(per_degree.items())}


# -- degrees -----------------------------------------------------------------------

def _degrees(g: SocialGraph, direction: str, nodes: Optional[Sequence[int]]) -> np.ndarray:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")
    deg = g.in_degrees() if direction == "in" else g.out_degrees()
    if nodes is not None:
        deg = deg[np.asarray(list(nodes), dtype=np.int64)]
    return deg


def degree_histogram(g: SocialGraph, direction: str, nodes: Optional[Sequence[int]] = None,
                     log_bins: bool = False) -> DegreeHistogram:
    """
    Exact per-degree counts and CCDF(d) = fraction of nodes with degree >= d.

    Args:
        g: Graph
        direction: "in" or "out"
        nodes: Restrict to this node subset (e.g. one population)
        log_bins: Bucket degrees into [0], [1], [2, 4), [4, 8), ...
    """
    deg = _degrees(g, direction, nodes)
    if log_bins:
        keys = np.where(deg == 0, 0, 2 ** np.floor(np.log2(np.maximum(deg, 1))).astype(np.int64))
    else:
        keys = deg
    values, freq = np.unique(keys, return_counts=True)
    counts = {int(d): int(c) for d, c in zip(values, freq)}
    total = len(deg)
    ccdf: Dict[int, float] = {}
    if total:
        ccdf[0] = 1.0
        remaining = total
        for d, c in counts.items():
            ccdf[d] = remaining / total
            remaining -= c
    return DegreeHistogram(direction, counts, dict(sorted(ccdf.items())), log_bins)


def tail_ratio(g: SocialGraph, direction: str = "in", nodes: Optional[Sequence[int]] = None) -> float:
    """
    max degree / max(1, median degree).

    Raises:
        DegenerateGraphError: If every selected node has degree zero
    """
    deg = _degrees(g, direction, nodes)
    if deg.size == 0 or deg.max() == 0:
        raise DegenerateGraphError("tail ratio undefined when all degrees are zero")
    return float(deg.max()) / max(1.0, float(np.median(deg)))


def isolated_fraction(g: SocialGraph) -> float:
    """Share of nodes with neither in- nor out-edges."""
    if g.node_count == 0:
        raise DegenerateGraphError("empty graph")
    isolated = (g.in_degrees() + g.out_degrees()) == 0
    return float(isolated.sum()) / g.node_count


def interaction_diversity(g: SocialGraph) -> Optional[float]:
    """Mean normalized Shannon entropy of interaction kinds per annotated follow edge."""
    counts = g.interaction_counts()
    if not counts:
        return None
    scale = math.log(len(INTERACTION_KINDS))
    entropies = []
    for pair in sorted(counts):
        c = np.array([counts[pair].get(kind, 0) for kind in INTERACTION_KINDS], dtype=np.float64)
        p = c[c > 0] / c.sum()
        entropies.append(float(-(p * np.log(p)).sum()) / scale)
    return math.fsum(entropies) / len(entropies)


def _optional(fn, *args):
    try:
        return fn(*args)
    except DegenerateGraphError:
        return None


class MetricsManager:
    """
    Computes and exports structural metrics.

    This class handles:
    - Computing a full MetricsReport from one graph snapshot
    - JSON and tidy CSV export
    - Side-by-side comparison of several graphs
    """

    def __init__(self, threads: int = DEFAULT_THREADS, max_h: Optional[int] = None, log_bins: bool = False):
        """
        Initialize the MetricsManager.

        Args:
            threads: Worker threads for multi-graph comparison
            max_h: Neighborhood horizon (default n - 1)
            log_bins: Log-binned degree histograms
        """
        self.threads = max(1, threads)
        self.max_h = max_h
        self.log_bins = log_bins

    def compute_report(self, g: SocialGraph) -> MetricsReport:
        """Compute every metric of ``g``."""
        n = g.node_count
        nf = avg = diam = reach = None
        if n >= 2:
            counts = _distance_counts(g)
            nf = neighborhood_function(g, self.max_h, counts)
            avg = _optional(average_hop_distance, g, counts)
            diam = effective_diameter(nf)
            reach = nf.reachable_pairs / nf.total_pairs
        ug = undirected_projection(g)
        report = MetricsReport(
            node_count=n,
            edge_count=g.edge_count,
            neighborhood=nf,
            avg_hop=avg,
            effective_diameter=diam,
            reachability=reach,
            clustering=clustering_by_degree(g, ug),
            degeneracy=degeneracy(g, ug),
            core_by_degree=core_number_by_degree(g, ug),
            in_degree_hist=degree_histogram(g, "in", log_bins=self.log_bins),
            out_degree_hist=degree_histogram(g, "out", log_bins=self.log_bins),
            tail_ratio=_optional(tail_ratio, g, "in"),
            tail_ratio_out=_optional(tail_ratio, g, "out"),
            isolated_fraction=_optional(isolated_fraction, g),
            interaction_diversity=interaction_diversity(g),
        )
        if g.profiles is not None:
            for population in sorted({p.value for p in g.profiles.populations}):
                members = g.profiles.nodes_in_population(population)
                report.populations[population] = {
                    "nodes": len(members),
                    "tail_ratio": _optional(tail_ratio, g, "in", members),
                    "in_degree_counts": {str(k): v for k, v in degree_histogram(g, "in", members).counts.items()},
                }
        logger.info("metrics computed for %d nodes / %d edges", n, g.edge_count)
        return report

    def save_report(self, report: MetricsReport, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
        """Write metrics.json and metrics.csv (columns: metric, key, value)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / "metrics.json"
        csv_path = out_dir / "metrics.csv"
        json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        pd.DataFrame(report.to_rows(), columns=["metric", "key", "value"]).to_csv(csv_path, index=False)
        return json_path, csv_path

    @staticmethod
    def comparison_row(label: str, report: MetricsReport) -> dict:
        return {
            "graph": label,
            "avg_hop": report.avg_hop,
            "p6": report.p_at(6),
            "degeneracy": report.degeneracy,
            "tail_ratio": report.tail_ratio,
            "clustering_lt20": report.clustering.mean_below(20),
        }

    def compare(self, graphs: Mapping[str, SocialGraph]) -> pd.DataFrame:
        """
        One row per graph, in input order.

        Args:
            graphs: Label -> graph

        Returns:
            pd.DataFrame: Columns graph, avg_hop, p6, degeneracy, tail_ratio, clustering_lt20
        """
        if len(graphs) < 2:
            raise ValueError("compare needs at least two graphs")
        labels = list(graphs)
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            reports = list(pool.map(self.compute_report, (graphs[k] for k in labels)))
        rows = [self.comparison_row(label, rep) for label, rep in zip(labels, reports)]
        return pd.DataFrame(rows, columns=COMPARE_COLUMNS)

    def print_summary(self, report: MetricsReport) -> None:
        print("=" * 60)
        print("METRICS SUMMARY")
        print("=" * 60)
        print(f"Nodes: {report.node_count}   Edges: {report.edge_count}")
        if report.neighborhood is not None:
            print(f"Reachability: {report.reachability:.4f}")
            print(f"P(6): {report.p_at(6):.4f}")
        if report.avg_hop is not None:
            print(f"Average hop distance: {report.avg_hop:.3f}")
        if report.effective_diameter is not None:
            print(f"Effective diameter (90%): {report.effective_diameter}")
        print(f"Degeneracy: {report.degeneracy}")
        if report.tail_ratio is not None:
            print(f"In-degree tail ratio: {report.tail_ratio:.2f}")
        lt20 = report.clustering.mean_below(20)
        if lt20 is not None:
            print(f"Mean clustering (degree < 20): {lt20:.3f}")
        print()
