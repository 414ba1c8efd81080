"""
Error Types

Exception hierarchy shared by every SocialForge service.
"""


class SocialForgeError(Exception):
    """Base class for all SocialForge errors."""


# Graph core

class InvalidNodeError(SocialForgeError, ValueError):
    """A node id is outside [0, node_count)."""


class SelfLoopError(SocialForgeError, ValueError):
    """A follow edge from a node to itself was requested."""


class DanglingInteractionError(SocialForgeError, ValueError):
    """An interaction was attached to a pair without a follow edge."""


class EdgeKindError(SocialForgeError, ValueError):
    """An edge kind is not valid for the requested operation."""


class DegenerateGraphError(SocialForgeError, ValueError):
    """The graph is too small for the requested statistic."""


# Profiles

class ProfileError(SocialForgeError, ValueError):
    """Malformed, missing or dimension-inconsistent profile data."""


# Chain policy

class ChainError(SocialForgeError, ValueError):
    """A chain violates its length or distinctness invariants."""


class RewardError(SocialForgeError, ValueError):
    """A reward is undefined for the given input."""


# Interaction modeling

class LevelTableError(SocialForgeError, ValueError):
    """A relationship level table is missing a level or not normalized."""


class DivergenceError(SocialForgeError, ValueError):
    """KL divergence is infinite (generated mass outside the reference support)."""


# Construction

class CompletionError(SocialForgeError, RuntimeError):
    """The completion loop reached an inconsistent state."""


class InsufficientNodesError(SocialForgeError, ValueError):
    """Not enough nodes to build the requested chain or community."""


# Configuration and files

class ConfigValidationError(SocialForgeError, ValueError):
    """A run configuration is invalid."""


class DatasetFormatError(SocialForgeError, ValueError):
    """A dataset file is malformed or inconsistent with its manifest."""
