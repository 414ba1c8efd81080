"""
Social Graph Service

Directed follow graph with typed interaction annotations, reachability and
connectivity computation, and the mutation primitives used by every generator.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from config.settings import EXACT_REACHABILITY_LIMIT, REACHABILITY_SAMPLE_SOURCES
from .errors import (
    DanglingInteractionError,
    DegenerateGraphError,
    EdgeKindError,
    InvalidNodeError,
    SelfLoopError,
)
from .seeding import derive_rng

if TYPE_CHECKING:
    from .profiles import ProfileTable

logger = logging.getLogger(__name__)


class EdgeKind(str, Enum):
    """Edge type tag. FOLLOW edges form the topology, the rest annotate it."""

    FOLLOW = "follow"
    LIKE = "like"
    RETWEET = "retweet"
    COMMENT = "comment"


INTERACTION_KINDS = (EdgeKind.LIKE, EdgeKind.RETWEET, EdgeKind.COMMENT)


@dataclass(frozen=True)
class Interaction:
    """One interaction annotation on an existing follow edge."""

    source: int
    target: int
    kind: EdgeKind
    sequence_index: int


@dataclass(frozen=True)
class ReachabilityStats:
    """Ordered-pair reachability of a graph."""

    reachable_ordered_pairs: int
    total_ordered_pairs: int
    exact: bool = True

    @property
    def fraction(self) -> float:
        return self.reachable_ordered_pairs / self.total_ordered_pairs


class SocialGraph:
    """
    Directed social graph with interaction annotations.

    This class handles:
    - Follow-edge insertion with self-loop and duplicate rejection
    - The append-only interaction log keyed by (source, target)
    - BFS distances, path queries and ordered-pair reachability

    Node ids are dense integers in [0, node_count) and never change.
    """

    def __init__(self, node_count: int, profiles: Optional["ProfileTable"] = None):
        """
        Initialize an edgeless graph.

        Args:
            node_count: Number of nodes
            profiles: Optional profile table, one row per node
        """
        if node_count < 0:
            raise InvalidNodeError(f"node_count must be non-negative, got {node_count}")
        self.node_count = node_count
        self.profiles = profiles
        self._out: List[List[int]] = [[] for _ in range(node_count)]
        self._in: List[List[int]] = [[] for _ in range(node_count)]
        self._edges = set()
        self._interactions: List[Interaction] = []

    # -- basic accessors -------------------------------------------------

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def interactions(self) -> List[Interaction]:
        return list(self._interactions)

    def out_neighbors(self, u: int) -> List[int]:
        self._check_node(u)
        return list(self._out[u])

    def in_neighbors(self, u: int) -> List[int]:
        self._check_node(u)
        return list(self._in[u])

    def out_degree(self, u: int) -> int:
        return len(self._out[u])

    def in_degree(self, u: int) -> int:
        return len(self._in[u])

    def in_degrees(self) -> np.ndarray:
        return np.fromiter((len(x) for x in self._in), dtype=np.int64, count=self.node_count)

    def out_degrees(self) -> np.ndarray:
        return np.fromiter((len(x) for x in self._out), dtype=np.int64, count=self.node_count)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edges

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Follow edges by ascending source, then insertion order."""
        for u in range(self.node_count):
            for v in self._out[u]:
                yield u, v

    def _check_node(self, u: int) -> None:
        if not isinstance(u, (int, np.integer)) or u < 0 or u >= self.node_count:
            raise InvalidNodeError(f"node {u} outside [0, {self.node_count})")

    # -- mutation --------------------------------------------------------

    def add_follow_edge(self, u: int, v: int) -> bool:
        """
        Add the follow edge u -> v.

        Args:
            u: Follower
            v: Followee

        Returns:
            bool: False if the edge already existed
        """
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise SelfLoopError(f"self-loop on node {u}")
        u, v = int(u), int(v)
        if (u, v) in self._edges:
            return False
        self._edges.add((u, v))
        self._out[u].append(v)
        self._in[v].append(u)
        return True

    def attach_interaction(self, u: int, v: int, kind: EdgeKind) -> Interaction:
        """
        Append an interaction annotation to the follow edge u -> v.

        Raises:
            EdgeKindError: If kind is FOLLOW
            DanglingInteractionError: If there is no follow edge u -> v
        """
        kind = EdgeKind(kind)
        if kind is EdgeKind.FOLLOW:
            raise EdgeKindError("follow is topology, not an interaction annotation")
        self._check_node(u)
        self._check_node(v)
        if (u, v) not in self._edges:
            raise DanglingInteractionError(f"no follow edge {u}->{v} for {kind.value}")
        record = Interaction(int(u), int(v), kind, len(self._interactions))
        self._interactions.append(record)
        return record

    def interaction_counts(self) -> Dict[Tuple[int, int], Dict[EdgeKind, int]]:
        """Per-pair counts of each interaction kind."""
        counts: Dict[Tuple[int, int], Dict[EdgeKind, int]] = {}
        for rec in self._interactions:
            per_pair = counts.setdefault((rec.source, rec.target), {})
            per_pair[rec.kind] = per_pair.get(rec.kind, 0) + 1
        return counts

    def copy(self) -> "SocialGraph":
        g = SocialGraph(self.node_count, self.profiles)
        g._out = [list(x) for x in self._out]
        g._in = [list(x) for x in self._in]
        g._edges = set(self._edges)
        g._interactions = list(self._interactions)
        return g

    # -- traversal -------------------------------------------------------

    def bfs_distances(self, source: int, max_hops: Optional[int] = None) -> Dict[int, int]:
        """
        Hop distances from source along directed follow edges.

        Args:
            source: Start node
            max_hops: Stop expanding past this distance (None for no bound)

        Returns:
            Dict[int, int]: Reached node -> distance (unreached nodes absent)
        """
        self._check_node(source)
        dist = {int(source): 0}
        queue = deque([int(source)])
        while queue:
            v = queue.popleft()
            d = dist[v] + 1
            if max_hops is not None and d > max_hops:
                continue
            for w in self._out[v]:
                if w not in dist:
                    dist[w] = d
                    queue.append(w)
        return dist

    def has_path(self, u: int, v: int, max_hops: Optional[int] = None) -> bool:
        """True iff a directed path u ~> v exists (with at most ``max_hops`` hops if given)."""
        self._check_node(u)
        self._check_node(v)
        if u == v:
            return True
        if max_hops is not None:
            return v in self.bfs_distances(u, max_hops)
        seen = {u}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for w in self._out[x]:
                if w == v:
                    return True
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return False

    def _reach_bitsets(self) -> Tuple[List[int], List[int], List[int]]:
        """
        Reachability through the SCC condensation.

        Returns:
            (component of each node, reach bitset per component, size per component);
            a component's bitset holds every node reachable from it, its own members included.
        """
        cond = nx.condensation(self.to_networkx())
        mapping = cond.graph["mapping"]
        k = cond.number_of_nodes()
        reach = [0] * k
        sizes = [0] * k
        for c in reversed(list(nx.topological_sort(cond))):
            bits = 0
            members = cond.nodes[c]["members"]
            for m in members:
                bits |= 1 << m
            for succ in cond.successors(c):
                bits |= reach[succ]
            reach[c] = bits
            sizes[c] = len(members)
        component = [mapping[u] for u in range(self.node_count)]
        return component, reach, sizes

    def _within_hops_exact(self, max_hops: int, chunk: int = 512) -> int:
        csr = self.to_csr()
        reached = 0
        for start in range(0, self.node_count, chunk):
            rows = np.arange(start, min(self.node_count, start + chunk))
            dist = csgraph.shortest_path(csr, method="D", directed=True, unweighted=True, indices=rows)
            reached += int(np.count_nonzero(dist <= max_hops)) - len(rows)
        return reached

    def reachability_fraction(self, exact_limit: int = EXACT_REACHABILITY_LIMIT,
                              sample_sources: int = REACHABILITY_SAMPLE_SOURCES,
                              seed: int = 0, max_hops: Optional[int] = None) -> ReachabilityStats:
        """
        Fraction of ordered pairs (u, v), u != v, with a directed path u ~> v.

        Exact up to ``exact_limit`` nodes; above that the fraction is estimated
        from ``sample_sources`` uniformly sampled BFS sources. With ``max_hops``
        only paths of at most that many hops count.

        Raises:
            DegenerateGraphError: If the graph has fewer than two nodes
        """
        n = self.node_count
        if n < 2:
            raise DegenerateGraphError("reachability needs at least two nodes")
        if max_hops is not None and max_hops < 1:
            raise ValueError(f"max_hops must be at least 1, got {max_hops}")
        total = n * (n - 1)
        if n <= exact_limit:
            if max_hops is not None:
                return ReachabilityStats(self._within_hops_exact(max_hops), total, exact=True)
            _, reach, sizes = self._reach_bitsets()
            reachable = sum(size * (bits.bit_count() - 1) for bits, size in zip(reach, sizes))
            return ReachabilityStats(reachable, total, exact=True)

        rng = derive_rng(seed, "reachability")
        sources = rng.choice(n, size=min(sample_sources, n), replace=False)
        reached = sum(len(self.bfs_distances(int(s), max_hops)) - 1 for s in sources)
        estimate = reached / (len(sources) * (n - 1))
        logger.debug("sampled reachability from %d sources: %.6f", len(sources), estimate)
        return ReachabilityStats(int(round(estimate * total)), total, exact=False)

    def unreachable_pairs(self) -> List[Tuple[int, int]]:
        """All ordered pairs (u, v), u != v, with no directed path u ~> v, in row-major order."""
        component, reach, _ = self._reach_bitsets()
        pairs = []
        for u in range(self.node_count):
            bits = reach[component[u]]
            for v in range(self.node_count):
                if v != u and not (bits >> v) & 1:
                    pairs.append((u, v))
        return pairs

    # -- validation and export -------------------------------------------

    def check_consistency(self) -> bool:
        """Full cross-scan of the adjacency and interaction invariants."""
        edge_total = 0
        for u in range(self.node_count):
            if len(set(self._out[u])) != len(self._out[u]) or u in self._out[u]:
                return False
            for v in self._out[u]:
                if u not in self._in[v] or (u, v) not in self._edges:
                    return False
            edge_total += len(self._out[u])
        for v in range(self.node_count):
            for u in self._in[v]:
                if v not in self._out[u]:
                    return False
        if edge_total != len(self._edges):
            return False
        for i, rec in enumerate(self._interactions):
            if rec.sequence_index != i or (rec.source, rec.target) not in self._edges:
                return False
        return True

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges())
        return g

    def to_csr(self) -> sparse.csr_matrix:
        """Follow adjacency as a sparse 0/1 matrix."""
        rows, cols = [], []
        for u, v in self.edges():
            rows.append(u)
            cols.append(v)
        data = np.ones(len(rows), dtype=np.int8)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.node_count, self.node_count))

    @classmethod
    def from_edges(cls, node_count: int, edges, profiles: Optional["ProfileTable"] = None) -> "SocialGraph":
        g = cls(node_count, profiles)
        for u, v in edges:
            g.add_follow_edge(u, v)
        return g

    def __repr__(self) -> str:
        return (f"SocialGraph(nodes={self.node_count}, follows={self.edge_count}, "
                f"interactions={len(self._interactions)})")


class HopDistanceIndex:
    """
    Exact all-pairs hop distances of a graph that only gains edges.

    Unreached pairs hold ``UNREACHED``. Each inserted edge a -> b relaxes
    every pair through it: d(x, y) = min(d(x, y), d(x, a) + 1 + d(b, y)),
    which keeps the matrix exact under insertions.
    """

    UNREACHED = 2 ** 29

    def __init__(self, g: SocialGraph):
        n = g.node_count
        if n < 2:
            raise DegenerateGraphError("distance index needs at least two nodes")
        self.node_count = n
        dist = csgraph.shortest_path(g.to_csr(), method="D", directed=True, unweighted=True)
        self.dist = np.where(np.isfinite(dist), dist, self.UNREACHED).astype(np.int32)

    def add_edge(self, a: int, b: int) -> None:
        """Account for a newly inserted follow edge a -> b."""
        if self.dist[a, b] <= 1:
            return
        via = self.dist[:, [a]] + (self.dist[[b], :] + 1)
        np.minimum(self.dist, via, out=self.dist)

    def distance(self, u: int, v: int) -> Optional[int]:
        d = int(self.dist[u, v])
        return None if d >= self.UNREACHED else d

    def stats(self, max_hops: Optional[int] = None) -> ReachabilityStats:
        """Ordered pairs u != v reachable at all, or within ``max_hops`` hops."""
        n = self.node_count
        if max_hops is None:
            reached = int(np.count_nonzero(self.dist < self.UNREACHED)) - n
        else:
            reached = int(np.count_nonzero(self.dist <= max_hops)) - n
        return ReachabilityStats(reached, n * (n - 1), exact=True)

    def sample_far_pair(self, max_hops: Optional[int], rng: np.random.Generator) -> Optional[Tuple[int, int]]:
        """
        Uniformly sample an ordered pair farther apart than ``max_hops``.

        With ``max_hops=None`` the pair is unreachable. Returns None when no
        such pair exists.
        """
        limit = self.UNREACHED - 1 if max_hops is None else max_hops
        far = np.flatnonzero(self.dist.ravel() > limit)
        if far.size == 0:
            return None
        u, v = divmod(int(far[int(rng.integers(far.size))]), self.node_count)
        return u, v
