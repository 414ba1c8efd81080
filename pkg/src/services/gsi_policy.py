"""
Chain Policy Service

Multi-hop follow-chain generation guided by profile similarity and node
influence, the chain reward calculus, best-of-N chain selection, and
chain-to-text serialization.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from config.settings import BEAM_WIDTH, GROUP_SIZE, MAX_HOPS, MIN_HOPS
from .errors import ChainError, ProfileError, RewardError
from .profiles import ProfileTable
from .seeding import derive_rng
from .social_graph import SocialGraph

logger = logging.getLogger(__name__)

CandidateFn = Callable[[int, Set[int]], Iterable[int]]

POOL_COMMUNITY = "community"
POOL_GLOBAL = "global"
MODE_ALL = "all"
MODE_OUT_NEIGHBORS = "out-neighbors"


@dataclass(frozen=True)
class Chain:
    """Ordered follow chain [v_0, ..., v_k]; distinct nodes, one to six hops."""

    nodes: Tuple[int, ...]

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not 2 <= len(nodes) <= MAX_HOPS + 1:
            raise ChainError(f"chain must have 2..{MAX_HOPS + 1} nodes, got {len(nodes)}")
        if len(set(nodes)) != len(nodes):
            raise ChainError(f"chain revisits a node: {nodes}")

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    def edges(self) -> List[Tuple[int, int]]:
        return list(zip(self.nodes[:-1], self.nodes[1:]))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class GsiReward:
    r_len: float
    r_homo: float
    r_inf: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.r_len + self.r_homo + self.r_inf)

    def to_dict(self) -> Dict[str, float]:
        return {"len": self.r_len, "homo": self.r_homo, "inf": self.r_inf, "total": self.total}


@dataclass(frozen=True)
class ChainGroup:
    """Chains from one source (and to one target, if given) scored together for group-relative selection."""

    chains: Tuple[Chain, ...]
    rewards: Tuple[GsiReward, ...]
    target: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))
        object.__setattr__(self, "rewards", tuple(self.rewards))
        if len(self.chains) != len(self.rewards):
            raise ChainError("chains and rewards must have equal lengths")
        if len({c.source for c in self.chains}) > 1:
            raise ChainError("all chains in a group must share a source")
        if self.target is not None and any(c.target != self.target for c in self.chains):
            raise ChainError(f"all chains in a group must end at target {self.target}")


# -- scoring ---------------------------------------------------------------

def _profiles_for(g: SocialGraph, profiles: Optional[ProfileTable]) -> ProfileTable:
    table = profiles if profiles is not None else g.profiles
    if table is None:
        raise ProfileError("graph has no profile table")
    return table


def normalized_in_degree(g: SocialGraph, v: int, candidates: Iterable[int]) -> float:
    """
    In-degree of v divided by the largest in-degree among the candidates.

    All-zero candidate in-degrees give 0.0.

    Raises:
        ValueError: If v is not a candidate
    """
    candidates = set(candidates)
    if v not in candidates:
        raise ValueError(f"node {v} is not in the candidate set")
    top = max(g.in_degree(u) for u in candidates)
    if top == 0:
        return 0.0
    return g.in_degree(v) / top


def score_candidate(anchor: int, v: int, candidates: Iterable[int], g: SocialGraph,
                    profiles: Optional[ProfileTable] = None) -> float:
    """
    Next-hop score: cos(x_anchor, x_v) + normalized in-degree of v.

    Returns:
        float: Value in [-1, 2]
    """
    table = _profiles_for(g, profiles)
    return table.cosine(anchor, v) + normalized_in_degree(g, v, candidates)


def _out_neighbor_candidates(g: SocialGraph) -> CandidateFn:
    def candidates(current: int, visited: Set[int]) -> List[int]:
        return [w for w in g.out_neighbors(current) if w not in visited]
    return candidates


def extend_chain_greedy(g: SocialGraph, profiles: Optional[ProfileTable], anchor: int,
                        candidate_fn: Optional[CandidateFn] = None,
                        max_hops: int = MAX_HOPS) -> Optional[Chain]:
    """
    Grow a chain from anchor by repeatedly taking the best-scoring candidate.

    Scores are anchored at v_0 and normalized over each step's candidate set;
    ties go to the smallest node id. Stops at ``max_hops`` hops or when no
    candidate remains.

    Returns:
        Optional[Chain]: None when the anchor cannot be extended at all
    """
    table = _profiles_for(g, profiles)
    candidate_fn = candidate_fn or _out_neighbor_candidates(g)
    nodes = [anchor]
    visited = {anchor}
    while len(nodes) - 1 < min(max_hops, MAX_HOPS):
        cands = sorted(set(candidate_fn(nodes[-1], visited)) - visited)
        if not cands:
            break
        best, best_score = None, -math.inf
        for w in cands:
            s = score_candidate(anchor, w, cands, g, table)
            if s > best_score:
                best, best_score = w, s
        nodes.append(best)
        visited.add(best)
    if len(nodes) < 2:
        return None
    return Chain(tuple(nodes))


def sample_walk_chains(g: SocialGraph, profiles: Optional[ProfileTable], n_seeds: int,
                       seed: int, max_hops: int = MAX_HOPS) -> List[Chain]:
    """
    Sample training-style chains from uniformly drawn anchors along existing follow edges.

    Anchors that cannot be extended are skipped.
    """
    if g.node_count == 0 or n_seeds <= 0:
        return []
    rng = derive_rng(seed, "walk-chains")
    anchors = rng.choice(g.node_count, size=n_seeds, replace=n_seeds > g.node_count)
    chains = []
    for a in anchors:
        chain = extend_chain_greedy(g, profiles, int(a), max_hops=max_hops)
        if chain is not None:
            chains.append(chain)
    return chains


# -- path generation -------------------------------------------------------

class GsiPolicy:
    """
    Similarity- and influence-guided path generator.

    This class handles:
    - Choosing the intermediate candidate pool for a (source, target) pair
    - Beam search for the best-scoring source -> target chain
    - Stochastic chain sampling and best-of-N group selection

    The graph is held by reference, so in-degrees reflect edges added by the
    completion loop between calls.
    """

    def __init__(self, graph: SocialGraph, profiles: Optional[ProfileTable] = None,
                 labels: Optional[Sequence[Optional[int]]] = None,
                 min_hops: int = MIN_HOPS, max_hops: int = MAX_HOPS,
                 beam_width: Optional[int] = BEAM_WIDTH,
                 candidate_pool: str = POOL_COMMUNITY, candidate_mode: str = MODE_ALL,
                 group_size: int = GROUP_SIZE, temperature: float = 0.5):
        """
        Initialize the GsiPolicy.

        Args:
            graph: Graph the chains are proposed for
            profiles: Profile table (defaults to graph.profiles)
            labels: Community label per node (defaults to the profile table's)
            min_hops: Minimum hop count of generated chains
            max_hops: Maximum hop count, capped at six
            beam_width: Beam width; None searches exhaustively
            candidate_pool: "community" (source and target communities) or "global"
            candidate_mode: "all" nodes or existing "out-neighbors" of the current node
            group_size: Chains per best-of-N group (1 disables sampling)
            temperature: Softmax temperature for sampled chains
        """
        if not 1 <= min_hops <= max_hops <= MAX_HOPS:
            raise ChainError(f"need 1 <= min_hops <= max_hops <= {MAX_HOPS}")
        if candidate_pool not in (POOL_COMMUNITY, POOL_GLOBAL):
            raise ValueError(f"unknown candidate pool {candidate_pool!r}")
        if candidate_mode not in (MODE_ALL, MODE_OUT_NEIGHBORS):
            raise ValueError(f"unknown candidate mode {candidate_mode!r}")
        if beam_width is not None and beam_width < 1:
            raise ValueError("beam_width must be positive or None")
        self.graph = graph
        self.profiles = _profiles_for(graph, profiles)
        self.labels = list(labels) if labels is not None else list(self.profiles.communities)
        self.min_hops = min_hops
        self.max_hops = max_hops
        self.beam_width = beam_width
        self.candidate_pool = candidate_pool
        self.candidate_mode = candidate_mode
        self.group_size = group_size
        self.temperature = temperature

    def _pool(self, source: int, target: int) -> List[int]:
        n = self.graph.node_count
        if self.candidate_pool == POOL_COMMUNITY and self.labels[source] is not None:
            wanted = {self.labels[source], self.labels[target]}
            nodes = [v for v in range(n) if self.labels[v] in wanted]
        else:
            nodes = range(n)
        return [v for v in nodes if v != source and v != target]

    def _step_candidates(self, path: Sequence[int], pool: List[int], pool_set: Set[int],
                         target: int) -> List[int]:
        """Intermediate candidates after ``path`` (the target is never among them)."""
        visited = set(path)
        if self.candidate_mode == MODE_ALL:
            return [v for v in pool if v not in visited]
        return sorted(w for w in self.graph.out_neighbors(path[-1])
                      if w in pool_set and w not in visited)

    def _normalizer_set(self, step_candidates: List[int], pool: List[int], target: int) -> List[int]:
        if self.candidate_mode == MODE_ALL:
            return pool + [target]
        return step_candidates + [target]

    def _step_scores(self, source: int, nodes: List[int], norm_set: List[int]) -> Dict[int, float]:
        top = max(self.graph.in_degree(u) for u in norm_set)
        scores = {}
        for v in nodes:
            d = 0.0 if top == 0 else self.graph.in_degree(v) / top
            scores[v] = self.profiles.cosine(source, v) + d
        return scores

    def path_score(self, chain: Chain) -> float:
        """Sum of per-step scores of a chain, as optimized by :meth:`generate_path`."""
        source, target = chain.source, chain.target
        pool = self._pool(source, target)
        pool_set = set(pool)
        total = 0.0
        for i in range(1, len(chain.nodes)):
            prefix = chain.nodes[:i]
            step = self._step_candidates(prefix, pool, pool_set, target)
            norm = self._normalizer_set(step, pool, target)
            total += self._step_scores(source, [chain.nodes[i]], norm)[chain.nodes[i]]
        return total

    def generate_path(self, source: int, target: int) -> Optional[Chain]:
        """
        Best-scoring chain from source to target with min_hops..max_hops hops.

        Intermediates are existing nodes chosen by beam search maximizing the
        summed step scores anchored at source; chain edges need not exist yet.

        Returns:
            Optional[Chain]: None when too few intermediate candidates exist
        """
        if source == target:
            raise ChainError("source and target must differ")
        self.graph._check_node(source)
        self.graph._check_node(target)
        pool = self._pool(source, target)
        if len(pool) < self.min_hops - 1:
            return None
        pool_set = set(pool)
        static = None
        if self.candidate_mode == MODE_ALL:
            static = self._step_scores(source, pool + [target], pool + [target])

        best: Optional[Tuple[float, Tuple[int, ...]]] = None
        states: List[Tuple[float, Tuple[int, ...]]] = [(0.0, (source,))]
        while states:
            expanded: Dict[Tuple[frozenset, int], Tuple[float, Tuple[int, ...]]] = {}
            for score, path in states:
                step = self._step_candidates(path, pool, pool_set, target)
                if static is not None:
                    scores = static
                else:
                    scores = self._step_scores(source, step + [target],
                                               self._normalizer_set(step, pool, target))
                hops_if_closed = len(path)
                if self.min_hops <= hops_if_closed <= self.max_hops:
                    full = path + (target,)
                    closed = score + scores[target]
                    if best is None or closed > best[0] or (closed == best[0] and full < best[1]):
                        best = (closed, full)
                if len(path) + 1 > self.max_hops:
                    continue
                for w in step:
                    cand = (score + scores[w], path + (w,))
                    key = (frozenset(cand[1]), w)
                    held = expanded.get(key)
                    if held is None or cand[0] > held[0] or (cand[0] == held[0] and cand[1] < held[1]):
                        expanded[key] = cand
            ranked = sorted(expanded.values(), key=lambda s: (-s[0], s[1]))
            states = ranked if self.beam_width is None else ranked[:self.beam_width]

        if best is None:
            return None
        return Chain(best[1])

    def sample_path(self, source: int, target: int, rng: np.random.Generator,
                    temperature: Optional[float] = None) -> Optional[Chain]:
        """
        Draw a chain by sampling each intermediate from a softmax over step scores.

        The hop count is drawn uniformly from the feasible range first.
        """
        temperature = self.temperature if temperature is None else temperature
        pool = self._pool(source, target)
        pool_set = set(pool)
        longest = min(self.max_hops, len(pool) + 1)
        if longest < self.min_hops:
            return None
        hops = int(rng.integers(self.min_hops, longest + 1))
        path = [source]
        while len(path) < hops:
            step = self._step_candidates(path, pool, pool_set, target)
            if not step:
                break
            scores = self._step_scores(source, step, self._normalizer_set(step, pool, target))
            logits = np.array([scores[w] for w in step]) / max(temperature, 1e-9)
            weights = np.exp(logits - logits.max())
            path.append(step[int(rng.choice(len(step), p=weights / weights.sum()))])
        if len(path) < self.min_hops:
            return None
        return Chain(tuple(path) + (target,))

    def propose(self, source: int, target: int, rng: np.random.Generator) -> Optional[Chain]:
        """
        Chain proposal used by the completion loop.

        Builds a group from the beam-search chain plus sampled chains, scores
        it with :func:`reward_gsi`, and keeps the best-of-N.
        """
        best = self.generate_path(source, target)
        if best is None or self.group_size < 2 or len(best) < 3:
            return best
        chains = [best]
        for _ in range(self.group_size - 1):
            sampled = self.sample_path(source, target, rng)
            if sampled is not None and len(sampled) >= 3:
                chains.append(sampled)
        if len(chains) < 2:
            return best
        group = ChainGroup(tuple(chains),
                           tuple(reward_gsi(c, self.graph, self.profiles) for c in chains),
                           target=target)
        return select_best_of_n(group)

    __call__ = propose


# -- rewards -----------------------------------------------------------------

def reward_len(c: Chain) -> float:
    """(|C| - 1) / 6 with |C| counted in nodes."""
    if len(c.nodes) < 2:
        raise RewardError("chain too short")
    return (len(c.nodes) - 1) / MAX_HOPS


def reward_homo(c: Chain, profiles: ProfileTable) -> float:
    """Mean cosine to the anchor over all chain nodes, the anchor's own term included."""
    terms = [1.0] + profiles.cosines_to(c.nodes[0], c.nodes[1:]).tolist()
    return math.fsum(terms) / len(c.nodes)


def reward_inf(c: Chain, g: SocialGraph) -> float:
    """
    Mean normalized in-degree of the interior nodes.

    Normalization is over the interior-node set itself.
    """
    interior = c.nodes[1:-1]
    if not interior:
        raise RewardError("chain has no interior node")
    degrees = [g.in_degree(v) for v in interior]
    top = max(degrees)
    if top == 0:
        return 0.0
    return math.fsum(d / top for d in degrees) / len(interior)


def reward_gsi(c: Chain, g: SocialGraph, profiles: Optional[ProfileTable] = None) -> GsiReward:
    table = _profiles_for(g, profiles)
    return GsiReward(reward_len(c), reward_homo(c, table), reward_inf(c, g))


def select_best_of_n(group: ChainGroup) -> Chain:
    """
    Pick the chain with the largest group-normalized advantage (total - mean) / std.

    A zero standard deviation gives every chain advantage 0; ties go to the
    first chain.
    """
    if len(group.chains) < 2:
        raise ChainError("best-of-N needs at least two chains")
    totals = np.array([r.total for r in group.rewards], dtype=np.float64)
    std = totals.std()
    if std == 0:
        advantages = np.zeros_like(totals)
    else:
        advantages = (totals - totals.mean()) / std
    return group.chains[int(np.argmax(advantages))]


# -- serialization ------------------------------------------------------------

def serialize_chain(c: Chain, g: SocialGraph, profiles: Optional[ProfileTable] = None) -> str:
    """
    Encode a chain as interleaved user tokens and templated hop rationales.

    Each hop v_k -> v_{k+1} gets "follows due to similarity S and relative
    in-degree D", S = cos(v_k, v_{k+1}) and D = in-degree of v_{k+1} over the
    largest in-degree among the non-anchor chain nodes, both at 4 decimals.
    """
    table = _profiles_for(g, profiles)
    followed = c.nodes[1:]
    top = max(g.in_degree(v) for v in followed)
    segments = [f"<user>{c.nodes[0]}</user>"]
    for u, v in c.edges():
        s = table.cosine(u, v)
        d = 0.0 if top == 0 else g.in_degree(v) / top
        segments.append(f"follows due to similarity {s:.4f} and relative in-degree {d:.4f}")
        segments.append(f"<user>{v}</user>")
    return " ".join(segments)


def chain_record(c: Chain, g: SocialGraph, profiles: Optional[ProfileTable] = None,
                 target: Optional[int] = None) -> dict:
    """JSON-ready chain record: source, target, nodes, rewards and text."""
    table = _profiles_for(g, profiles)
    if len(c.nodes) >= 3:
        rewards = reward_gsi(c, g, table).to_dict()
    else:
        rewards = {"len": reward_len(c), "homo": reward_homo(c, table), "inf": None, "total": None}
    return {
        "source": c.source,
        "target": c.target if target is None else target,
        "nodes": list(c.nodes),
        "rewards": rewards,
        "text": serialize_chain(c, g, table),
    }
