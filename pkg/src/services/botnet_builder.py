"""
Botnet Builder Service

End-to-end bot network construction: community partitioning, intra-community
wiring, multi-hop follow completion, interaction refinement, and the
human/bot dataset assembly.
"""

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from sklearn.cluster import KMeans

from config.settings import DISTANCE_INDEX_LIMIT, PAIR_SAMPLE_ATTEMPTS, SIMILARITY_TEMPERATURE
from .errors import CompletionError, InsufficientNodesError, ProfileError
from .fim import InteractionModel, InteractionRecord, LevelTable
from .gsi_policy import Chain, GsiPolicy, chain_record
from .profiles import Population, ProfileTable, load_profiles, synth_profiles
from .schemas import BuildConfig, FimConfig
from .seeding import derive_rng, derive_seed
from .social_graph import EdgeKind, HopDistanceIndex, SocialGraph

logger = logging.getLogger(__name__)


class ChainPolicy(Protocol):
    """Proposes a chain from source to target, or None."""

    def __call__(self, source: int, target: int, rng: np.random.Generator) -> Optional[Chain]:
        ...


@dataclass
class BuildReport:
    iterations_used: int = 0
    edges_added: int = 0
    initial_reachability: float = 0.0
    final_reachability: float = 0.0
    chains_generated: int = 0
    converged: bool = True
    reachability_trace: List[float] = field(default_factory=list)
    hop_horizon: Optional[int] = None
    initial_within_horizon: Optional[float] = None
    final_within_horizon: Optional[float] = None
    horizon_trace: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RefinementReport:
    records: List[InteractionRecord] = field(default_factory=list)
    attached: int = 0
    level_counts: Dict[int, int] = field(default_factory=dict)
    kind_counts: Dict[str, int] = field(default_factory=dict)
    mean_fine_reward: Optional[float] = None
    thresholds: Optional[Tuple[float, float, float]] = None

    def to_dict(self) -> dict:
        return {
            "records": len(self.records),
            "attached": self.attached,
            "level_counts": {str(k): v for k, v in sorted(self.level_counts.items())},
            "kind_counts": dict(sorted(self.kind_counts.items())),
            "mean_fine_reward": self.mean_fine_reward,
            "thresholds": list(self.thresholds) if self.thresholds else None,
        }


# -- communities ----------------------------------------------------------------

def _farthest_point_centers(X: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [int(rng.integers(len(X)))]
    dist = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    while len(chosen) < n:
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[chosen].copy()


def _fill_empty_clusters(X: np.ndarray, labels: np.ndarray, centers: np.ndarray, n: int) -> np.ndarray:
    """Move the point farthest from its center into each empty cluster."""
    labels = labels.copy()
    while True:
        sizes = np.bincount(labels, minlength=n)
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            return labels
        dist = np.sum((X - centers[labels]) ** 2, axis=1)
        dist[sizes[labels] < 2] = -1.0
        far = int(np.argmax(dist))
        labels[far] = int(empty[0])
        centers[empty[0]] = X[far]


def partition_communities(profiles: ProfileTable, n: int, seed: int) -> np.ndarray:
    """
    Split nodes into n communities by k-means over the profile embeddings.

    Lloyd iterations (at most 100, tolerance 1e-6) from a farthest-point
    initialization; empty clusters are reseeded from the farthest point.
    Labels are renumbered by first appearance in node order.

    Returns:
        np.ndarray: Community label per node
    """
    X = np.asarray(profiles.embeddings, dtype=np.float64)
    if len(X) == 0:
        raise ProfileError("cannot partition an empty profile table")
    if n < 1 or n > len(X):
        raise InsufficientNodesError(f"cannot form {n} communities from {len(X)} nodes")
    if n == 1:
        return np.zeros(len(X), dtype=np.int64)

    rng = derive_rng(seed, "partition")
    init = _farthest_point_centers(X, n, rng)
    km = KMeans(n_clusters=n, init=init, n_init=1, max_iter=100, tol=1e-6,
                algorithm="lloyd", random_state=derive_seed(seed, "kmeans") % (2 ** 32))
    labels = km.fit_predict(X).astype(np.int64)
    labels = _fill_empty_clusters(X, labels, km.cluster_centers_.copy(), n)

    remap: Dict[int, int] = {}
    for lab in labels:
        remap.setdefault(int(lab), len(remap))
    return np.array([remap[int(lab)] for lab in labels], dtype=np.int64)


def build_intra_community(g: SocialGraph, profiles: ProfileTable, labels: Sequence[int],
                          mean_out_degree: float, seed: int,
                          temperature: float = SIMILARITY_TEMPERATURE) -> int:
    """
    Wire each community with similarity-weighted follow edges.

    Every node draws round(mean_out_degree) distinct same-community targets with
    probability proportional to exp(cos(x_u, x_v) / temperature).

    Returns:
        int: Number of follow edges added
    """
    labels = np.asarray(labels)
    if len(labels) != g.node_count:
        raise ValueError("labels must cover every node")
    k_target = int(math.floor(mean_out_degree + 0.5))
    if k_target <= 0:
        return 0
    rng = derive_rng(seed, "intra")
    added = 0
    for community in sorted(set(int(c) for c in labels)):
        members = np.flatnonzero(labels == community)
        if len(members) < 2:
            continue
        sims = profiles.embeddings[members] @ profiles.embeddings[members].T
        for idx, u in enumerate(members):
            others = np.delete(np.arange(len(members)), idx)
            logits = sims[idx, others] / temperature
            weights = np.exp(logits - logits.max())
            picks = rng.choice(others, size=min(k_target, len(others)), replace=False,
                               p=weights / weights.sum())
            for j in sorted(picks):
                added += g.add_follow_edge(int(u), int(members[j]))
    logger.info("intra-community wiring added %d edges", added)
    return added


# -- completion -----------------------------------------------------------------

def sample_no_path_pair(g: SocialGraph, rng: np.random.Generator,
                        attempts: int = PAIR_SAMPLE_ATTEMPTS,
                        max_hops: Optional[int] = None) -> Optional[Tuple[int, int]]:
    """
    Uniformly sample an ordered pair (u, v) with no path u ~> v.

    Rejection-samples up to ``attempts`` pairs, then falls back to an
    exhaustive scan. With ``max_hops`` a pair qualifies when no path of at
    most that many hops exists.
    """
    n = g.node_count
    for _ in range(attempts):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        if not g.has_path(u, v, max_hops):
            return u, v
    if max_hops is None:
        pairs = g.unreachable_pairs()
    else:
        pairs = []
        for u in range(n):
            near = g.bfs_distances(u, max_hops)
            pairs.extend((u, v) for v in range(n) if v != u and v not in near)
    if not pairs:
        return None
    return pairs[int(rng.integers(len(pairs)))]


class _Connectivity:
    """
    Connectivity bookkeeping for the completion loop.

    Small graphs keep an exact HopDistanceIndex in step with every inserted
    edge; larger ones fall back to the graph's own reachability queries.
    """

    def __init__(self, g: SocialGraph, hop_horizon: Optional[int], seed: int):
        self.g = g
        self.hop_horizon = hop_horizon
        self.seed = seed
        self.index = None
        if hop_horizon is not None and g.node_count <= DISTANCE_INDEX_LIMIT:
            self.index = HopDistanceIndex(g)

    def measure(self) -> Tuple[float, Optional[float]]:
        """(reachability, within-horizon fraction or None)."""
        if self.index is not None:
            within = self.index.stats(self.hop_horizon).fraction
            return self.index.stats().fraction, within
        reach = self.g.reachability_fraction(seed=self.seed).fraction
        if self.hop_horizon is None:
            return reach, None
        return reach, self.g.reachability_fraction(seed=self.seed, max_hops=self.hop_horizon).fraction

    def sample_pair(self, rng: np.random.Generator) -> Optional[Tuple[int, int]]:
        if self.index is not None:
            return self.index.sample_far_pair(self.hop_horizon, rng)
        return sample_no_path_pair(self.g, rng, max_hops=self.hop_horizon)

    def add_edge(self, a: int, b: int) -> bool:
        if not self.g.add_follow_edge(a, b):
            return False
        if self.index is not None:
            self.index.add_edge(a, b)
        return True


def complete_multi_hop(g: SocialGraph, policy: ChainPolicy, tau: float, max_iters: int, seed: int,
                       debug: bool = False, chain_log: Optional[List[dict]] = None,
                       hop_horizon: Optional[int] = None) -> BuildReport:
    """
    Add multi-hop follow chains until the reachable-pair fraction reaches tau.

    Each iteration samples a no-path pair (u, v), asks the policy for chains
    u -> v and v -> u, and materializes every missing chain edge.

    With ``hop_horizon`` a pair only counts as connected when a path of at
    most that many hops exists: the loop samples among the pairs farther
    apart and runs until the within-horizon fraction reaches tau. Chains
    never exceed six hops, so every iteration connects its own pair.

    Args:
        g: Graph, mutated in place
        policy: Chain proposer
        tau: Target fraction in (0, 1]
        max_iters: Iteration cap
        seed: Run seed
        debug: Check monotonicity after every iteration
        chain_log: If given, receives one record per generated chain
        hop_horizon: Optional hop bound on what counts as connected

    Returns:
        BuildReport: converged is False when max_iters ran out first
    """
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    if max_iters <= 0:
        raise ValueError("max_iters must be positive")
    if hop_horizon is not None and hop_horizon < 1:
        raise ValueError(f"hop_horizon must be at least 1, got {hop_horizon}")
    rng = derive_rng(seed, "completion")
    conn = _Connectivity(g, hop_horizon, seed)
    reach, within = conn.measure()
    report = BuildReport(initial_reachability=reach, final_reachability=reach,
                         reachability_trace=[reach], hop_horizon=hop_horizon,
                         initial_within_horizon=within, final_within_horizon=within)
    if within is not None:
        report.horizon_trace.append(within)
    progress = reach if within is None else within
    logger.info("completion start: reachability %.4f, connected %.4f, target %.4f", reach, progress, tau)

    while progress < tau:
        if report.iterations_used >= max_iters:
            report.converged = False
            logger.warning("completion stopped at max_iters=%d with connected fraction %.4f",
                           max_iters, progress)
            break
        pair = conn.sample_pair(rng)
        if pair is None:
            raise CompletionError(f"connected fraction {progress:.6f} < tau but no unconnected pair exists")
        report.iterations_used += 1
        u, v = pair
        for source, target in ((u, v), (v, u)):
            chain = policy(source, target, rng)
            if chain is None:
                continue
            report.chains_generated += 1
            if chain_log is not None and g.profiles is not None:
                chain_log.append(chain_record(chain, g, target=target))
            for a, b in chain.edges():
                if conn.add_edge(a, b):
                    report.edges_added += 1

        new_reach, new_within = conn.measure()
        if debug and (new_reach < reach or (within is not None and new_within < within)):
            raise CompletionError(f"connectivity decreased at iteration {report.iterations_used}")
        reach, within = new_reach, new_within
        progress = reach if within is None else within
        report.reachability_trace.append(reach)
        if within is not None:
            report.horizon_trace.append(within)
        logger.debug("iteration %d pair=%s edges_added=%d reachability=%.4f connected=%.4f",
                     report.iterations_used, pair, report.edges_added, reach, progress)
        if report.iterations_used % 100 == 0:
            logger.info("iteration %d: connected %.4f", report.iterations_used, progress)

    report.final_reachability = reach
    report.final_within_horizon = within
    return report


# -- interactions ---------------------------------------------------------------

def refine_interactions(g: SocialGraph, profiles: ProfileTable, model: InteractionModel,
                        seed: int, threads: int = 1) -> RefinementReport:
    """
    Generate the interaction sequence of every follow edge and attach it.

    Sequences are drawn per edge from streams keyed by (seed, u, v), on
    ``threads`` workers, and attached in sorted edge order. Follow-kind
    records are kept in the report but never attached or re-materialized
    as edges.
    """
    report = RefinementReport(thresholds=model.calibrate(profiles, seed))
    edges = sorted(g.edges())

    def generate(edge: Tuple[int, int]):
        return model.generate_for_edge(profiles, edge[0], edge[1], seed)

    if threads > 1 and len(edges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            generated = list(pool.map(generate, edges))
    else:
        generated = [generate(edge) for edge in edges]

    levels: Counter = Counter()
    kinds: Counter = Counter()
    scores = []
    for (u, v), (level, records) in zip(edges, generated):
        levels[int(level)] += 1
        for rec in records:
            kinds[rec.kind.value] += 1
            report.records.append(rec)
            if rec.kind is not EdgeKind.FOLLOW:
                g.attach_interaction(u, v, rec.kind)
                report.attached += 1
        score = model.score_sequence(level, records)
        if score is not None:
            scores.append(score)
    report.level_counts = dict(levels)
    report.kind_counts = dict(kinds)
    report.mean_fine_reward = math.fsum(scores) / len(scores) if scores else None
    logger.info("refinement generated %d records (%d attached)", len(report.records), report.attached)
    return report


def interaction_model_from_config(cfg: FimConfig, count_per_edge: int) -> InteractionModel:
    table = LevelTable.from_mapping(cfg.level_table) if cfg.level_table else None
    return InteractionModel(table=table, thresholds=cfg.thresholds, count_per_edge=count_per_edge,
                            epsilon=cfg.epsilon, threshold_pairs=cfg.threshold_pairs)


# -- dataset assembly -------------------------------------------------------------

def _add_bridges(g: SocialGraph, sims: np.ndarray, src_offset: int, dst_offset: int,
                 count: int, rng: np.random.Generator) -> int:
    n_src = sims.shape[0]
    ranked = np.argsort(-sims, axis=1, kind="stable")
    cursor = np.zeros(n_src, dtype=np.int64)
    order = rng.permutation(n_src)
    added = 0
    for i in range(count):
        s = int(order[i % n_src])
        t = int(ranked[s, cursor[s]])
        cursor[s] += 1
        added += g.add_follow_edge(src_offset + s, dst_offset + t)
    return added


def assemble_dataset(bot_graph: SocialGraph, human_graph: SocialGraph,
                     bridge_edges_per_side: int, seed: int) -> SocialGraph:
    """
    Disjoint union of a bot graph and a human graph.

    Bots keep ids [0, n_bots), humans are shifted to [n_bots, n_bots + n_humans).
    ``bridge_edges_per_side`` edges are added bot -> human and again
    human -> bot; sources are visited in a seeded random order and each
    follows its most similar not-yet-followed node on the other side.

    Raises:
        InsufficientNodesError: If the bridge count exceeds the possible pairs
    """
    nb, nh = bot_graph.node_count, human_graph.node_count
    if nb == 0 or nh == 0:
        raise InsufficientNodesError("both populations must be non-empty")
    if bot_graph.profiles is None or human_graph.profiles is None:
        raise ProfileError("both graphs need profile tables")
    if bot_graph.profiles.dimension != human_graph.profiles.dimension:
        raise ProfileError("bot and human embeddings differ in dimension")
    if bridge_edges_per_side > nb * nh:
        raise InsufficientNodesError(f"{bridge_edges_per_side} bridges exceed {nb * nh} possible pairs")

    bots, humans = bot_graph.profiles, human_graph.profiles
    offset = 1 + max((c for c in bots.communities if c is not None), default=-1)
    table = ProfileTable(
        np.vstack([bots.embeddings, humans.embeddings]),
        tuple(bots.communities) + tuple(None if c is None else c + offset for c in humans.communities),
        tuple(bots.populations) + tuple(humans.populations),
    )
    g = SocialGraph(nb + nh, table)
    for u, v in bot_graph.edges():
        g.add_follow_edge(u, v)
    for u, v in human_graph.edges():
        g.add_follow_edge(u + nb, v + nb)
    for rec in bot_graph.interactions:
        g.attach_interaction(rec.source, rec.target, rec.kind)
    for rec in human_graph.interactions:
        g.attach_interaction(rec.source + nb, rec.target + nb, rec.kind)

    if bridge_edges_per_side:
        rng = derive_rng(seed, "bridges")
        sims = bots.embeddings @ humans.embeddings.T
        _add_bridges(g, sims, 0, nb, bridge_edges_per_side, rng)
        _add_bridges(g, sims.T, nb, 0, bridge_edges_per_side, rng)
    return g


def dataset_composition(g: SocialGraph) -> dict:
    """Human/bot counts, edge count, edge types present and bot community count."""
    if g.profiles is None:
        return {"humans": 0, "bots": g.node_count, "edges": g.edge_count,
                "edge_types": 1 if g.edge_count else 0, "communities": 0}
    pops = g.profiles.populations
    kinds = {rec.kind for rec in g.interactions}
    if g.edge_count:
        kinds.add(EdgeKind.FOLLOW)
    bot_communities = {c for c, p in zip(g.profiles.communities, pops)
                       if p is Population.BOT and c is not None}
    return {
        "humans": sum(p is Population.HUMAN for p in pops),
        "bots": sum(p is Population.BOT for p in pops),
        "edges": g.edge_count,
        "edge_types": len(kinds),
        "communities": len(bot_communities),
    }


# -- orchestration ---------------------------------------------------------------

PolicyFactory = Callable[[SocialGraph, Sequence[int]], ChainPolicy]


@dataclass
class BuildResult:
    graph: SocialGraph
    report: BuildReport
    refinement: RefinementReport
    chain_log: List[dict]


class BotnetBuilder:
    """
    Runs the full construction pipeline for one population.

    This class handles:
    - Loading or synthesizing the profile table
    - Partitioning and intra-community wiring
    - Multi-hop completion with a pluggable chain policy
    - Interaction refinement
    """

    def __init__(self, config: BuildConfig, policy_factory: Optional[PolicyFactory] = None,
                 population: Population = Population.BOT, verbose: bool = False,
                 threads: int = 1):
        """
        Initialize the BotnetBuilder.

        Args:
            config: Build configuration
            policy_factory: Builds the chain policy from (graph, labels); GSI by default
            population: Population label for synthesized profiles
            verbose: Print stage banners
            threads: Worker threads for interaction refinement
        """
        self.config = config
        self.policy_factory = policy_factory or self._gsi_policy
        self.population = population
        self.verbose = verbose
        self.threads = max(1, threads)

    def _banner(self, title: str) -> None:
        if self.verbose:
            print("=" * 60)
            print(title)
            print("=" * 60)

    def _gsi_policy(self, graph: SocialGraph, labels: Sequence[int]) -> ChainPolicy:
        gsi = self.config.gsi
        # chains must fit inside the horizon to connect their own pair
        max_hops = min(gsi.max_hops, self.config.hop_horizon or gsi.max_hops)
        return GsiPolicy(graph, labels=labels, min_hops=min(gsi.min_hops, max_hops), max_hops=max_hops,
                         beam_width=gsi.beam_width, candidate_pool=gsi.candidate_pool,
                         candidate_mode=gsi.candidate_mode, group_size=gsi.group_size,
                         temperature=gsi.temperature)

    def prepare_profiles(self) -> ProfileTable:
        cfg = self.config
        if cfg.profiles_path:
            table = load_profiles(cfg.profiles_path)
            if len(table) != cfg.n_bots:
                raise ProfileError(f"profile file has {len(table)} rows, config expects {cfg.n_bots}")
            return table
        return synth_profiles(cfg.n_bots, cfg.n_communities, cfg.embedding_dim, cfg.intra_spread,
                              seed=derive_seed(cfg.seed, "profiles", self.population.value),
                              population=self.population)

    def build(self, profiles: Optional[ProfileTable] = None) -> BuildResult:
        """
        Run partition -> intra wiring -> completion -> refinement.

        Returns:
            BuildResult: Graph, completion report, refinement report and chain log
        """
        cfg = self.config
        profiles = profiles if profiles is not None else self.prepare_profiles()

        self._banner("STEP 1: Partitioning Communities")
        labels = partition_communities(profiles, cfg.n_communities, cfg.seed)
        profiles = profiles.with_communities(labels.tolist())
        graph = SocialGraph(len(profiles), profiles)
        if self.verbose:
            print(f"✓ {cfg.n_communities} communities over {len(profiles)} nodes")

        self._banner("STEP 2: Intra-Community Wiring")
        intra = build_intra_community(graph, profiles, labels, cfg.intra_mean_out_degree, cfg.seed)
        if self.verbose:
            print(f"✓ {intra} follow edges")

        self._banner("STEP 3: Multi-Hop Follow Completion")
        chain_log: List[dict] = []
        report = complete_multi_hop(graph, self.policy_factory(graph, labels.tolist()), cfg.tau,
                                    cfg.max_completion_iters, cfg.seed, debug=cfg.debug_monotonicity,
                                    chain_log=chain_log if cfg.log_chains else None,
                                    hop_horizon=cfg.hop_horizon)
        if self.verbose:
            print(f"✓ {report.iterations_used} iterations, {report.edges_added} edges added")
            print(f"✓ Reachability {report.initial_reachability:.4f} -> {report.final_reachability:.4f}")
            if report.hop_horizon is not None:
                print(f"✓ Within {report.hop_horizon} hops {report.initial_within_horizon:.4f}"
                      f" -> {report.final_within_horizon:.4f}")

        self._banner("STEP 4: Interaction Refinement")
        model = interaction_model_from_config(cfg.fim, cfg.interaction_count_per_edge)
        refinement = refine_interactions(graph, profiles, model, cfg.seed, threads=self.threads)
        if self.verbose:
            print(f"✓ {len(refinement.records)} interaction records")
            print()
        return BuildResult(graph, report, refinement, chain_log)
