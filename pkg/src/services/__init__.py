"""
SocialForge Services Module

This module contains the service classes and functions of the SocialForge pipeline:
- EnvironmentSetup: Logging and thread configuration
- SocialGraph: Directed follow graph with interaction annotations
- ProfileTable: Node embeddings with community and population labels
- GsiPolicy: Similarity- and influence-guided chain generation
- InteractionModel: Relationship-aware interaction generation
- BotnetBuilder: End-to-end bot network construction
- MetricsManager: Structural metrics and comparisons
- DatasetStore: Dataset persistence
"""

from .environment_setup import EnvironmentSetup
from .social_graph import EdgeKind, Interaction, ReachabilityStats, SocialGraph
from .profiles import Population, ProfileTable, load_profiles, save_profiles, synth_profiles
from .gsi_policy import Chain, GsiPolicy, GsiReward, reward_gsi, serialize_chain
from .fim import InteractionModel, LevelTable, RelationshipLevel, reward_fine
from .botnet_builder import BotnetBuilder, BuildReport, BuildResult, assemble_dataset, complete_multi_hop
from .baselines import KroneckerInitiator, RandomMhopPolicy, WeightSequence, chung_lu, kronecker
from .metrics import MetricsManager, MetricsReport
from .dataset_store import DatasetStore
from .schemas import RunConfig

__all__ = [
    'EnvironmentSetup',
    'EdgeKind',
    'Interaction',
    'ReachabilityStats',
    'SocialGraph',
    'Population',
    'ProfileTable',
    'load_profiles',
    'save_profiles',
    'synth_profiles',
    'Chain',
    'GsiPolicy',
    'GsiReward',
    'reward_gsi',
    'serialize_chain',
    'InteractionModel',
    'LevelTable',
    'RelationshipLevel',
    'reward_fine',
    'BotnetBuilder',
    'BuildReport',
    'BuildResult',
    'assemble_dataset',
    'complete_multi_hop',
    'KroneckerInitiator',
    'RandomMhopPolicy',
    'WeightSequence',
    'chung_lu',
    'kronecker',
    'MetricsManager',
    'MetricsReport',
    'DatasetStore',
    'RunConfig',
]
