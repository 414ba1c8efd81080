"""
Baseline Generators

Comparison graphs: random m-hop chain completion, Chung-Lu and stochastic
Kronecker graphs.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import MAX_HOPS
from .botnet_builder import BuildReport, complete_multi_hop
from .errors import ChainError, InsufficientNodesError
from .gsi_policy import Chain
from .seeding import derive_rng, derive_seed, hashed_uniform
from .social_graph import SocialGraph

logger = logging.getLogger(__name__)

DEFAULT_INITIATOR = ((0.9, 0.5), (0.5, 0.2))


@dataclass(frozen=True)
class KroneckerInitiator:
    matrix: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_INITIATOR

    def __post_init__(self):
        if len(self.matrix) != 2 or any(len(row) != 2 for row in self.matrix):
            raise ValueError("initiator must be 2x2")
        if any(not 0.0 <= p <= 1.0 for row in self.matrix for p in row):
            raise ValueError(f"initiator entries must lie in [0, 1]: {self.matrix}")

    @property
    def max_entry(self) -> float:
        return max(max(row) for row in self.matrix)

    def edge_probability(self, i: int, j: int, k: int) -> float:
        """Product of initiator entries over the k binary digits of i and j."""
        p = 1.0
        for t in range(k):
            p *= self.matrix[(i >> t) & 1][(j >> t) & 1]
        return p

    def expected_edges(self, k: int) -> float:
        """Expected edge count excluding self-pairs: (sum P)^k - (trace P)^k."""
        total = sum(sum(row) for row in self.matrix)
        diag = self.matrix[0][0] + self.matrix[1][1]
        return total ** k - diag ** k


@dataclass(frozen=True)
class WeightSequence:
    """Expected-degree weights for the Chung-Lu model."""

    weights: Tuple[float, ...]

    def __post_init__(self):
        if any(not w > 0 for w in self.weights):
            raise ValueError("Chung-Lu weights must be positive")
        if self.weights and sum(self.weights) <= max(self.weights) ** 2:
            logger.warning("sum(w) <= max(w)^2: some edge probabilities will be capped at 1")

    @classmethod
    def constant(cls, n: int, value: float) -> "WeightSequence":
        return cls(tuple([float(value)] * n))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


# -- random m-hop ------------------------------------------------------------------

class RandomMhopPolicy:
    """Joins (u, v) through m - 2 intermediates drawn uniformly from V minus {u, v}."""

    def __init__(self, graph: SocialGraph, m: int):
        if m < 2:
            raise ChainError(f"m must be at least 2, got {m}")
        if m > MAX_HOPS + 1:
            raise ChainError(f"m must not exceed {MAX_HOPS + 1}, got {m}")
        if m - 2 > graph.node_count - 2:
            raise InsufficientNodesError(
                f"{m - 2} intermediates requested but only {graph.node_count - 2} nodes available")
        self.graph = graph
        self.m = m

    def __call__(self, source: int, target: int, rng: np.random.Generator) -> Optional[Chain]:
        if self.m == 2:
            return Chain((source, target))
        others = np.array([v for v in range(self.graph.node_count) if v != source and v != target])
        picks = rng.choice(others, size=self.m - 2, replace=False)
        return Chain((source, *(int(x) for x in picks), target))


def random_mhop_completion(g: SocialGraph, m: int, tau: float, max_iters: int, seed: int,
                           debug: bool = False, chain_log: Optional[List[dict]] = None) -> BuildReport:
    """Completion loop with random m-hop chains in place of the GSI policy."""
    return complete_multi_hop(g, RandomMhopPolicy(g, m), tau, max_iters, seed,
                              debug=debug, chain_log=chain_log)


# -- Chung-Lu ----------------------------------------------------------------------

def power_law_weights(n: int, exponent: float = 2.5, seed: int = 0) -> WeightSequence:
    """
    Discrete power-law weight sequence with P(k) proportional to k^-exponent.

    Args:
        n: Number of nodes
        exponent: Tail exponent (> 1)
        seed: Run seed

    Returns:
        WeightSequence: n weights drawn from [1, n - 1]
    """
    if n < 2:
        raise InsufficientNodesError("need at least two nodes")
    if exponent <= 1:
        raise ValueError("exponent must exceed 1")
    support = np.arange(1, n, dtype=np.float64)
    p = support ** -exponent
    rng = derive_rng(seed, "power-law")
    draws = rng.choice(support, size=n, p=p / p.sum())
    return WeightSequence(tuple(float(w) for w in draws))


def chung_lu(weights: WeightSequence, seed: int) -> SocialGraph:
    """
    Chung-Lu directed graph.

    Row i draws n uniforms u_ij in column order (the self entry is drawn and
    discarded); i -> j is added iff u_ij < min(1, w_i * w_j / sum(w)).
    """
    n = len(weights)
    if n < 2:
        raise InsufficientNodesError("Chung-Lu needs at least two nodes")
    w = np.asarray(weights.weights, dtype=np.float64)
    total = weights.total
    rng = derive_rng(seed, "chung-lu")
    g = SocialGraph(n)
    for i in range(n):
        u = rng.random(n)
        p = np.minimum(1.0, w[i] * w / total)
        hits = np.flatnonzero(u < p)
        for j in hits:
            if j != i:
                g.add_follow_edge(i, int(j))
    logger.info("chung-lu graph: %d nodes, %d edges", n, g.edge_count)
    return g


# -- Kronecker ---------------------------------------------------------------------

def _child_minima(key: int, level: int, row: int, col: int, mu: float,
                  child_leaves: float) -> List[float]:
    """Minimum leaf uniform of each of the four children of a quadtree node."""
    argmin = min(3, int(4 * hashed_uniform(key, level, row, col, 0)))
    minima = []
    for slot in range(4):
        if slot == argmin:
            minima.append(mu)
        else:
            v = hashed_uniform(key, level, row, col, slot + 1)
            # min of child_leaves uniforms on (mu, 1)
            minima.append(mu + (1.0 - mu) * -math.expm1(math.log(v) / child_leaves))
    return minima


def _kronecker_edges(initiator: KroneckerInitiator, k: int, seed: int, prune: bool) -> List[Tuple[int, int]]:
    if not 1 <= k <= 20:
        raise ValueError(f"k must lie in [1, 20], got {k}")
    P = initiator.matrix
    pmax = initiator.max_entry
    key = derive_seed(seed, "kronecker")
    root_mu = -math.expm1(math.log(hashed_uniform(key, 0xFFFF, 0, 0, 0)) / 4.0 ** k)

    edges = []
    stack = [(0, 0, 0, root_mu, 1.0)]
    while stack:
        level, row, col, mu, q = stack.pop()
        remaining = k - level
        if remaining == 0:
            if row != col and mu < q:
                edges.append((row, col))
            continue
        if prune and mu >= q * pmax ** remaining:
            continue
        minima = _child_minima(key, level, row, col, mu, 4.0 ** (remaining - 1))
        for slot, child_mu in enumerate(minima):
            rb, cb = slot >> 1, slot & 1
            stack.append((level + 1, (row << 1) | rb, (col << 1) | cb, child_mu, q * P[rb][cb]))
    edges.sort()
    return edges


def kronecker(initiator: KroneckerInitiator, k: int, seed: int) -> SocialGraph:
    """
    Stochastic Kronecker graph on 2^k nodes.

    Pair (i, j), i != j, is an edge with probability equal to the product of
    initiator entries over the binary digits of i and j. Sampling descends a
    quadtree of leaf-uniform minima and skips every block whose minimum
    already exceeds the largest probability it could contain.
    """
    g = SocialGraph.from_edges(2 ** k, _kronecker_edges(initiator, k, seed, prune=True))
    logger.info("kronecker graph: k=%d, %d edges (expected %.1f)", k, g.edge_count,
                initiator.expected_edges(k))
    return g


def kronecker_naive(initiator: KroneckerInitiator, k: int, seed: int) -> SocialGraph:
    """Per-pair reference sampler; expands all 4^k leaves. Identical output to kronecker()."""
    return SocialGraph.from_edges(2 ** k, _kronecker_edges(initiator, k, seed, prune=False))


def weights_from_config(n: int, weights: Optional[Sequence[float]], constant_weight: Optional[float],
                        exponent: float, seed: int) -> WeightSequence:
    """Explicit weights, a constant weight, or the default power-law sequence, in that order."""
    if weights is not None:
        return WeightSequence(tuple(float(w) for w in weights))
    if constant_weight is not None:
        return WeightSequence.constant(n, constant_weight)
    return power_law_weights(n, exponent, seed)
