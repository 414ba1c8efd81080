"""
Configuration Schemas

Pydantic models for every run configuration block, JSON loading and the
canonical configuration hash.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.settings import (
    BEAM_WIDTH,
    DEFAULT_SEED,
    DEFAULT_TAU,
    EMBEDDING_DIM,
    GROUP_SIZE,
    HOP_HORIZON,
    INTRA_SPREAD,
    KL_EPSILON,
    MAX_COMPLETION_ITERS,
    MAX_HOPS,
    MIN_HOPS,
    THRESHOLD_SAMPLE_PAIRS,
)
from .errors import ConfigValidationError, LevelTableError

STRATEGIES = ("guided", "random-mhop", "chung-lu", "kronecker")


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class SynthConfig(_Block):
    """Synthetic profile table parameters."""

    n: int = Field(500, ge=1)
    n_communities: int = Field(10, ge=1)
    dim: int = Field(EMBEDDING_DIM, ge=2)
    intra_spread: float = Field(INTRA_SPREAD, gt=0)
    population: Literal["human", "bot"] = "bot"

    @model_validator(mode="after")
    def _communities_fit(self):
        if self.n_communities > self.n:
            raise ValueError(f"n_communities ({self.n_communities}) exceeds n ({self.n})")
        return self


class GsiConfig(_Block):
    """Chain policy parameters."""

    min_hops: int = Field(MIN_HOPS, ge=1, le=MAX_HOPS)
    max_hops: int = Field(MAX_HOPS, ge=1, le=MAX_HOPS)
    beam_width: Optional[int] = Field(BEAM_WIDTH, ge=1)
    candidate_pool: Literal["community", "global"] = "community"
    candidate_mode: Literal["all", "out-neighbors"] = "all"
    group_size: int = Field(GROUP_SIZE, ge=1)
    temperature: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _hop_bounds(self):
        if self.min_hops > self.max_hops:
            raise ValueError("min_hops must not exceed max_hops")
        return self


class FimConfig(_Block):
    """Interaction modeling parameters."""

    level_table: Optional[Dict[str, Union[Dict[str, float], List[float]]]] = None
    thresholds: Optional[Tuple[float, float, float]] = None
    epsilon: float = Field(KL_EPSILON, ge=0)
    threshold_pairs: int = Field(THRESHOLD_SAMPLE_PAIRS, ge=1)

    @field_validator("level_table")
    @classmethod
    def _table_is_valid(cls, value):
        if value is not None:
            from .fim import LevelTable
            try:
                LevelTable.from_mapping(value)
            except LevelTableError as e:
                raise ValueError(str(e)) from e
        return value

    @field_validator("thresholds")
    @classmethod
    def _descending(cls, value):
        if value is not None and not (1 > value[0] > value[1] > value[2] > -1):
            raise ValueError("thresholds must be strictly descending in (-1, 1)")
        return value


class BuildConfig(_Block):
    """Bot network construction (guided strategy)."""

    n_bots: int = Field(500, ge=1)
    n_communities: int = Field(10, ge=1)
    tau: float = Field(DEFAULT_TAU, gt=0, le=1)
    intra_mean_out_degree: float = Field(4.0, ge=0)
    max_completion_iters: int = Field(MAX_COMPLETION_ITERS, gt=0)
    hop_horizon: Optional[int] = Field(HOP_HORIZON, ge=1)
    interaction_count_per_edge: int = Field(10, ge=0)
    seed: int = DEFAULT_SEED
    embedding_dim: int = Field(EMBEDDING_DIM, ge=2)
    intra_spread: float = Field(INTRA_SPREAD, gt=0)
    profiles_path: Optional[str] = None
    log_chains: bool = True
    debug_monotonicity: bool = False
    gsi: GsiConfig = Field(default_factory=GsiConfig)
    fim: FimConfig = Field(default_factory=FimConfig)

    @model_validator(mode="after")
    def _communities_fit(self):
        if self.n_communities > self.n_bots:
            raise ValueError(f"n_communities ({self.n_communities}) exceeds n_bots ({self.n_bots})")
        return self


class RandomMhopConfig(BuildConfig):
    """
    Random m-hop completion baseline; same pipeline, random chains.

    Completes to plain reachability unless a hop_horizon is set.
    """

    m: int = Field(4, ge=2, le=MAX_HOPS + 1)
    hop_horizon: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _chain_fits_horizon(self):
        if self.hop_horizon is not None and self.m - 1 > self.hop_horizon:
            raise ValueError(f"m={self.m} chains have {self.m - 1} hops, beyond hop_horizon={self.hop_horizon}")
        return self


class ChungLuConfig(_Block):
    n: int = Field(1000, ge=2)
    weights: Optional[List[float]] = None
    constant_weight: Optional[float] = Field(None, gt=0)
    exponent: float = Field(2.5, gt=1)

    @field_validator("weights")
    @classmethod
    def _positive(cls, value):
        if value is not None and any(w <= 0 for w in value):
            raise ValueError("weights must be positive")
        return value


class KroneckerConfig(_Block):
    initiator: Tuple[Tuple[float, float], Tuple[float, float]] = ((0.9, 0.5), (0.5, 0.2))
    k: int = Field(10, ge=1, le=20)

    @field_validator("initiator")
    @classmethod
    def _unit_interval(cls, value):
        if any(not 0 <= p <= 1 for row in value for p in row):
            raise ValueError("initiator entries must lie in [0, 1]")
        return value


class HumanConfig(_Block):
    """Human side of the assembled dataset: loaded from a dataset dir or synthesized."""

    graph_path: Optional[str] = None
    n_humans: int = Field(1000, ge=1)
    n_communities: int = Field(10, ge=1)
    intra_mean_out_degree: float = Field(6.0, ge=0)
    tau: float = Field(0.9, gt=0, le=1)
    hop_horizon: Optional[int] = Field(HOP_HORIZON, ge=1)
    bridge_edges_per_side: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _communities_fit(self):
        if self.graph_path is None and self.n_communities > self.n_humans:
            raise ValueError(f"n_communities ({self.n_communities}) exceeds n_humans ({self.n_humans})")
        return self


class RunConfig(_Block):
    """
    Top-level run configuration.

    Exactly one strategy block must be populated and it must match ``strategy``.
    The top-level seed is authoritative and is copied into the strategy block.
    """

    strategy: Literal["guided", "random-mhop", "chung-lu", "kronecker"] = "guided"
    seed: int = DEFAULT_SEED
    gzip: bool = False
    output_dir: Optional[str] = None
    synth: Optional[SynthConfig] = None
    human: Optional[HumanConfig] = None
    guided: Optional[BuildConfig] = None
    random_mhop: Optional[RandomMhopConfig] = Field(None, alias="random-mhop")
    chung_lu: Optional[ChungLuConfig] = Field(None, alias="chung-lu")
    kronecker: Optional[KroneckerConfig] = None

    @model_validator(mode="after")
    def _one_strategy_block(self):
        populated = [name for name, block in self._strategy_blocks().items() if block is not None]
        if len(populated) != 1:
            raise ValueError(f"exactly one strategy block must be populated, found {populated or 'none'}")
        if populated[0] != self.strategy:
            raise ValueError(f"strategy {self.strategy!r} does not match populated block {populated[0]!r}")
        block = self.strategy_config
        if isinstance(block, BuildConfig):
            block.seed = self.seed
        return self

    def _strategy_blocks(self) -> Dict[str, Any]:
        return {
            "guided": self.guided,
            "random-mhop": self.random_mhop,
            "chung-lu": self.chung_lu,
            "kronecker": self.kronecker,
        }

    @property
    def strategy_config(self):
        return self._strategy_blocks()[self.strategy]

    @classmethod
    def for_strategy(cls, strategy: str, seed: int = DEFAULT_SEED, **blocks) -> "RunConfig":
        """Run config with a default block for ``strategy``."""
        defaults = {"guided": BuildConfig, "random-mhop": RandomMhopConfig,
                    "chung-lu": ChungLuConfig, "kronecker": KroneckerConfig}
        if strategy not in defaults:
            raise ConfigValidationError(f"unknown strategy {strategy!r}")
        payload = {strategy: defaults[strategy]().model_dump(by_alias=True), **blocks}
        return cls.load_dict({"strategy": strategy, "seed": seed, **payload})

    @classmethod
    def load_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigValidationError(str(e)) from e

    @classmethod
    def from_file(cls, path: Union[str, Path], seed: Optional[int] = None) -> "RunConfig":
        """
        Load a JSON config file.

        Args:
            path: Config file path
            seed: Optional seed override (the CLI --seed flag)
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigValidationError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigValidationError(f"{path}: invalid JSON ({e.msg})") from e
        if not isinstance(data, dict):
            raise ConfigValidationError(f"{path}: top level must be an object")
        if seed is not None:
            data["seed"] = seed
        return cls.load_dict(data)

    def canonical_json(self) -> str:
        payload = self.model_dump(mode="json", by_alias=True, exclude={"output_dir"})
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()
