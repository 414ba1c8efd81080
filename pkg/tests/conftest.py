import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.services.profiles import ProfileTable, synth_profiles  # noqa: E402
from src.services.social_graph import SocialGraph  # noqa: E402


@pytest.fixture
def three_cycle():
    return SocialGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def small_profiles():
    return synth_profiles(40, 4, d=8, intra_spread=0.3, seed=3)


@pytest.fixture
def random_graph():
    """Factory for seeded G(n, p) directed graphs, optionally with random profiles."""

    def make(n, p, seed, with_profiles=False, dim=4):
        rng = np.random.default_rng(seed)
        profiles = None
        if with_profiles:
            profiles = ProfileTable.build(rng.standard_normal((n, dim)), [0] * n)
        g = SocialGraph(n, profiles)
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < p:
                    g.add_follow_edge(u, v)
        return g

    return make
