"""
Seed Splitting

All randomness flows from one 64-bit seed. Each stage asks for its own stream
with a label, e.g. ``derive_rng(seed, "fim", u, v)``; string labels are mapped
through CRC-32 and integer labels are used as-is, so streams are stable across
processes and Python versions.
"""

import zlib
from typing import Union

import numpy as np

Label = Union[str, int]

_MASK64 = (1 << 64) - 1


def _label_words(labels: tuple) -> list:
    words = []
    for label in labels:
        if isinstance(label, (int, np.integer)):
            words.append(int(label) & _MASK64)
        else:
            words.append(zlib.crc32(str(label).encode("utf-8")))
    return words


def derive_seed_sequence(seed: int, *labels: Label) -> np.random.SeedSequence:
    """Build the SeedSequence for ``(seed, *labels)``."""
    return np.random.SeedSequence([int(seed) & _MASK64, *_label_words(labels)])


def derive_rng(seed: int, *labels: Label) -> np.random.Generator:
    """
    Create an independent random generator for a labelled stream.

    Args:
        seed: Global run seed
        *labels: Stream labels (stage names, node ids, ...)

    Returns:
        np.random.Generator: PCG64 generator for this stream
    """
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, *labels)))


def derive_seed(seed: int, *labels: Label) -> int:
    """Derive a plain 64-bit integer seed for a labelled stream."""
    return int(derive_seed_sequence(seed, *labels).generate_state(1, dtype=np.uint64)[0])


def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer over a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def hashed_uniform(*words: int) -> float:
    """
    Counter-based uniform variate in (0, 1) keyed by a tuple of integers.

    The same key always yields the same value, independent of call order.
    """
    h = 0
    for w in words:
        h = splitmix64(h ^ (int(w) & _MASK64))
    # 53 high bits, shifted off zero so log/roots stay finite
    return ((h >> 11) + 0.5) * (1.0 / (1 << 53))
