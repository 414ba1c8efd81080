"""
Interaction Modeling Service

Relationship levels from profile similarity, strength-conditioned interaction
sequence generation, and the relationship/action reward calculus.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import KL_EPSILON, THRESHOLD_SAMPLE_PAIRS
from .errors import DivergenceError, LevelTableError
from .profiles import ProfileTable, cosine
from .seeding import derive_rng
from .social_graph import EdgeKind

logger = logging.getLogger(__name__)

ACTION_ORDER = (EdgeKind.LIKE, EdgeKind.RETWEET, EdgeKind.COMMENT, EdgeKind.FOLLOW)
DEFAULT_QUANTILES = (0.9, 0.7, 0.4)


class RelationshipLevel(IntEnum):
    """Ego-network circle; 1 is the strongest tie."""

    SUPPORT_CLIQUE = 1
    SYMPATHY_GROUP = 2
    AFFINITY_GROUP = 3
    ACTIVE_NETWORK = 4


@dataclass(frozen=True)
class ActionDistribution:
    """Categorical distribution over (like, retweet, comment, follow)."""

    probabilities: Tuple[float, float, float, float]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if len(probs) != len(ACTION_ORDER):
            raise ValueError(f"expected {len(ACTION_ORDER)} probabilities, got {len(probs)}")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise ValueError(f"probabilities must be finite and non-negative: {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {math.fsum(probs)}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[Union[EdgeKind, str], float]) -> "ActionDistribution":
        values = {EdgeKind(k): float(v) for k, v in mapping.items()}
        unknown = set(values) - set(ACTION_ORDER)
        if unknown:
            raise ValueError(f"unknown action kinds: {sorted(k.value for k in unknown)}")
        return cls(tuple(values.get(k, 0.0) for k in ACTION_ORDER))

    def __getitem__(self, kind: Union[EdgeKind, str]) -> float:
        return self.probabilities[ACTION_ORDER.index(EdgeKind(kind))]

    def as_array(self) -> np.ndarray:
        return np.array(self.probabilities, dtype=np.float64)

    def argmax(self) -> EdgeKind:
        return ACTION_ORDER[int(np.argmax(self.probabilities))]

    def to_dict(self) -> Dict[str, float]:
        return {k.value: p for k, p in zip(ACTION_ORDER, self.probabilities)}


@dataclass(frozen=True)
class InteractionRecord:
    actor: int
    target: int
    kind: EdgeKind
    tweet_ref: str

    def to_dict(self) -> dict:
        return {"actor": self.actor, "target": self.target, "type": self.kind.value,
                "tweet_id": self.tweet_ref}


@dataclass(frozen=True)
class FimReward:
    r1: float
    r2: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.r1 + self.r2)


DEFAULT_LEVEL_ROWS = {
    RelationshipLevel.SUPPORT_CLIQUE: (0.25, 0.30, 0.40, 0.05),
    RelationshipLevel.SYMPATHY_GROUP: (0.35, 0.25, 0.30, 0.10),
    RelationshipLevel.AFFINITY_GROUP: (0.55, 0.15, 0.15, 0.15),
    RelationshipLevel.ACTIVE_NETWORK: (0.75, 0.05, 0.05, 0.15),
}


@dataclass(frozen=True)
class LevelTable:
    """Action distribution per relationship level."""

    rows: Mapping[RelationshipLevel, ActionDistribution]

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "LevelTable":
        """
        Build a table from ``{level: {kind: p}}`` or ``{level: [like, retweet, comment, follow]}``.

        Raises:
            LevelTableError: If a level is missing or a row is not a distribution
        """
        rows = {}
        for key, row in mapping.items():
            try:
                level = RelationshipLevel(int(key))
                if isinstance(row, Mapping):
                    rows[level] = ActionDistribution.from_mapping(row)
                else:
                    rows[level] = ActionDistribution(tuple(row))
            except ValueError as e:
                raise LevelTableError(f"invalid row for level {key}: {e}") from e
        missing = [lvl.value for lvl in RelationshipLevel if lvl not in rows]
        if missing:
            raise LevelTableError(f"level table is missing levels {missing}")
        return cls(rows)

    @classmethod
    def default(cls) -> "LevelTable":
        return cls.from_mapping(DEFAULT_LEVEL_ROWS)

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {str(int(lvl)): self.rows[lvl].to_dict() for lvl in RelationshipLevel}


# -- relationship levels -------------------------------------------------------

def _check_thresholds(thresholds: Sequence[float]) -> Tuple[float, float, float]:
    t = tuple(float(x) for x in thresholds)
    if len(t) != 3 or not (1 > t[0] > t[1] > t[2] > -1):
        raise ValueError(f"thresholds must be 3 strictly descending values in (-1, 1), got {t}")
    return t


def infer_level(x_u, x_v, thresholds: Sequence[float]) -> RelationshipLevel:
    """
    Relationship level from profile cosine: level 1 if cos >= t1, 2 if >= t2, 3 if >= t3, else 4.
    """
    t1, t2, t3 = _check_thresholds(thresholds)
    c = cosine(x_u, x_v)
    if c >= t1:
        return RelationshipLevel.SUPPORT_CLIQUE
    if c >= t2:
        return RelationshipLevel.SYMPATHY_GROUP
    if c >= t3:
        return RelationshipLevel.AFFINITY_GROUP
    return RelationshipLevel.ACTIVE_NETWORK


def similarity_thresholds(profiles: ProfileTable, n_pairs: int = THRESHOLD_SAMPLE_PAIRS,
                          quantiles: Sequence[float] = DEFAULT_QUANTILES,
                          seed: int = 0) -> Tuple[float, float, float]:
    """
    Level thresholds as quantiles of the cosine over sampled distinct node pairs.

    Collapsed quantiles are pushed apart by one ulp so the result stays strictly descending.
    """
    n = len(profiles)
    if n < 2:
        raise ValueError("need at least two profiles to calibrate thresholds")
    rng = derive_rng(seed, "fim-thresholds")
    u = rng.integers(0, n, size=n_pairs)
    v = (u + rng.integers(1, n, size=n_pairs)) % n
    sims = np.clip(np.einsum("ij,ij->i", profiles.embeddings[u], profiles.embeddings[v]), -1.0, 1.0)
    raw = [float(np.quantile(sims, q)) for q in quantiles]
    out = []
    for value in raw:
        value = min(value, math.nextafter(1.0, 0.0))
        if out and value >= out[-1]:
            value = math.nextafter(out[-1], -math.inf)
        out.append(max(value, math.nextafter(-1.0, 0.0)))
    return _check_thresholds(out)


def annotate_levels_by_frequency(counts: Mapping[Tuple[int, int], int]) -> Dict[Tuple[int, int], RelationshipLevel]:
    """
    Relationship levels from observed per-pair interaction counts.

    The most frequent quartile is level 1, the least frequent level 4.
    """
    if not counts:
        return {}
    values = np.array(list(counts.values()), dtype=np.float64)
    q75, q50, q25 = np.quantile(values, [0.75, 0.5, 0.25])
    levels = {}
    for pair, c in counts.items():
        if c >= q75:
            levels[pair] = RelationshipLevel.SUPPORT_CLIQUE
        elif c >= q50:
            levels[pair] = RelationshipLevel.SYMPATHY_GROUP
        elif c >= q25:
            levels[pair] = RelationshipLevel.AFFINITY_GROUP
        else:
            levels[pair] = RelationshipLevel.ACTIVE_NETWORK
    return levels


# -- generation --------------------------------------------------------------

def level_action_distribution(level: Union[RelationshipLevel, int], table: LevelTable) -> ActionDistribution:
    try:
        return table.rows[RelationshipLevel(int(level))]
    except (KeyError, ValueError) as e:
        raise LevelTableError(f"level table has no row for level {level}") from e


def generate_interactions(u: int, v: int, level: Union[RelationshipLevel, int], count: int,
                          table: LevelTable, seed: Union[int, np.random.Generator]) -> List[InteractionRecord]:
    """
    Draw ``count`` i.i.d. actions for the edge u -> v from the level's row.

    Args:
        u: Actor
        v: Target
        level: Relationship level of v with respect to u
        count: Number of records
        table: Level table
        seed: Run seed (the stream is derived from (seed, u, v)) or a generator

    Returns:
        List[InteractionRecord]: Records with tweet_ref "t-{u}-{v}-{i}"
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    row = level_action_distribution(level, table)
    if count == 0:
        return []
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "fim", u, v)
    draws = rng.choice(len(ACTION_ORDER), size=count, p=row.as_array())
    return [InteractionRecord(int(u), int(v), ACTION_ORDER[k], f"t-{u}-{v}-{i}")
            for i, k in enumerate(draws)]


def empirical_distribution(records: Iterable, epsilon: float = KL_EPSILON) -> ActionDistribution:
    """
    Smoothed action frequencies of a record sequence.

    Each kind gets ``epsilon`` pseudo-counts on top of its observed count.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    counts = dict.fromkeys(ACTION_ORDER, 0)
    for rec in records:
        counts[EdgeKind(getattr(rec, "kind", rec))] += 1
    total = sum(counts.values()) + epsilon * len(ACTION_ORDER)
    if total == 0:
        raise ValueError("empty record sequence needs epsilon > 0")
    return ActionDistribution(tuple((counts[k] + epsilon) / total for k in ACTION_ORDER))


# -- rewards -----------------------------------------------------------------

def reward_r1(l_pred: Union[RelationshipLevel, int], l_true: Union[RelationshipLevel, int]) -> float:
    """exp(-|l_pred - l_true|)."""
    return math.exp(-abs(int(RelationshipLevel(int(l_pred))) - int(RelationshipLevel(int(l_true)))))


def reward_r2(p_gen: ActionDistribution, p_ref: ActionDistribution) -> float:
    """
    Negative KL divergence KL(p_gen || p_ref) in nats.

    Raises:
        DivergenceError: If p_gen has mass where p_ref has none
    """
    terms = []
    for kind, p, q in zip(ACTION_ORDER, p_gen.probabilities, p_ref.probabilities):
        if p == 0:
            continue
        if q == 0:
            raise DivergenceError(f"reference has no mass on {kind.value}; smooth it first")
        terms.append(p * math.log(p / q))
    kl = max(math.fsum(terms), 0.0)
    return -kl if kl else 0.0


def reward_fine(l_pred, l_true, p_gen: ActionDistribution, p_ref: ActionDistribution) -> FimReward:
    return FimReward(reward_r1(l_pred, l_true), reward_r2(p_gen, p_ref))


class InteractionModel:
    """
    Relationship-aware interaction generator.

    This class handles:
    - Calibrating similarity thresholds for relationship levels
    - Inferring the level of each follow edge
    - Generating and scoring the edge's interaction sequence
    """

    def __init__(self, table: Optional[LevelTable] = None,
                 thresholds: Optional[Sequence[float]] = None,
                 count_per_edge: int = 10, epsilon: float = KL_EPSILON,
                 threshold_pairs: int = THRESHOLD_SAMPLE_PAIRS):
        """
        Initialize the InteractionModel.

        Args:
            table: Level table (default table if omitted)
            thresholds: Fixed level thresholds; calibrated from profiles if omitted
            count_per_edge: Records generated per follow edge
            epsilon: Pseudo-count used when scoring generated sequences
            threshold_pairs: Pairs sampled for threshold calibration
        """
        self.table = table or LevelTable.default()
        self.thresholds = _check_thresholds(thresholds) if thresholds is not None else None
        self.count_per_edge = count_per_edge
        self.epsilon = epsilon
        self.threshold_pairs = threshold_pairs

    def calibrate(self, profiles: ProfileTable, seed: int) -> Tuple[float, float, float]:
        if self.thresholds is None:
            self.thresholds = similarity_thresholds(profiles, self.threshold_pairs, seed=seed)
            logger.info("calibrated level thresholds %s", tuple(round(t, 4) for t in self.thresholds))
        return self.thresholds

    def level_for(self, profiles: ProfileTable, u: int, v: int) -> RelationshipLevel:
        if self.thresholds is None:
            raise ValueError("thresholds not set; call calibrate() first")
        return infer_level(profiles.embedding(u), profiles.embedding(v), self.thresholds)

    def generate_for_edge(self, profiles: ProfileTable, u: int, v: int,
                          seed: int) -> Tuple[RelationshipLevel, List[InteractionRecord]]:
        level = self.level_for(profiles, u, v)
        return level, generate_interactions(u, v, level, self.count_per_edge, self.table, seed)

    def score_sequence(self, level: RelationshipLevel, records: List[InteractionRecord]) -> Optional[float]:
        """reward_fine of a generated sequence against its own level row, None if undefined."""
        if not records and self.epsilon == 0:
            return None
        try:
            p_gen = empirical_distribution(records, self.epsilon)
            return reward_fine(level, level, p_gen, level_action_distribution(level, self.table)).total
        except DivergenceError:
            return None
