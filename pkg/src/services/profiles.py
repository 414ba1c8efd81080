"""
Profile Service

Profile-embedding storage, synthetic embeddings with planted community
structure, JSON-lines ingestion, and similarity primitives.
"""

import gzip
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ProfileError
from .seeding import derive_rng

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12


class Population(str, Enum):
    HUMAN = "human"
    BOT = "bot"


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    """Scale rows to unit L2 norm, leaving rows already within tolerance untouched."""
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise ProfileError("zero-length embedding cannot be normalized")
    out = vectors.copy()
    off = np.abs(norms - 1.0) > NORM_TOLERANCE
    out[off] = vectors[off] / norms[off, None]
    return out


@dataclass(frozen=True)
class ProfileTable:
    """
    One unit-norm embedding per node plus community and population labels.

    Build through :meth:`build` so rows are normalized; the constructor only
    validates. Immutable once built.
    """

    embeddings: np.ndarray
    communities: Tuple[Optional[int], ...]
    populations: Tuple[Population, ...]

    def __post_init__(self):
        emb = self.embeddings
        if emb.ndim != 2 or emb.shape[1] < 1:
            raise ProfileError(f"embeddings must be a 2-D array, got shape {emb.shape}")
        n = emb.shape[0]
        if len(self.communities) != n or len(self.populations) != n:
            raise ProfileError("label columns must match the number of embeddings")
        if not np.all(np.isfinite(emb)):
            raise ProfileError("embeddings must be finite")
        if n and np.max(np.abs(np.linalg.norm(emb, axis=1) - 1.0)) >= 1e-9:
            raise ProfileError("embeddings must have unit norm")
        if any(c is not None and c < 0 for c in self.communities):
            raise ProfileError("community labels must be non-negative")
        emb.setflags(write=False)

    @classmethod
    def build(cls, vectors, communities: Optional[Sequence[Optional[int]]] = None,
              populations: Optional[Sequence[Union[Population, str]]] = None) -> "ProfileTable":
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ProfileError(f"expected an (n, d) array, got shape {vectors.shape}")
        n = vectors.shape[0]
        if not np.all(np.isfinite(vectors)):
            raise ProfileError("embeddings must be finite")
        comms = tuple(None if c is None else int(c) for c in communities) if communities is not None else (None,) * n
        pops = tuple(Population(p) for p in populations) if populations is not None else (Population.BOT,) * n
        return cls(_normalize_rows(vectors) if n else vectors, comms, pops)

    def __len__(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dimension(self) -> int:
        return self.embeddings.shape[1]

    @property
    def community_count(self) -> int:
        return len({c for c in self.communities if c is not None})

    def embedding(self, node: int) -> np.ndarray:
        if node < 0 or node >= len(self):
            raise ProfileError(f"no profile for node {node}")
        return self.embeddings[node]

    def cosine(self, u: int, v: int) -> float:
        """Cosine of two stored (unit) profiles."""
        return float(np.clip(self.embedding(u) @ self.embedding(v), -1.0, 1.0))

    def cosines_to(self, anchor: int, nodes: Sequence[int]) -> np.ndarray:
        """Cosine of every node in ``nodes`` to ``anchor``."""
        idx = np.asarray(nodes, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= len(self)):
            raise ProfileError("node outside the profile table")
        return np.clip(self.embeddings[idx] @ self.embedding(anchor), -1.0, 1.0)

    def with_communities(self, labels: Iterable[Optional[int]]) -> "ProfileTable":
        return ProfileTable(self.embeddings, tuple(None if c is None else int(c) for c in labels),
                            self.populations)

    def nodes_in_population(self, population: Union[Population, str]) -> List[int]:
        population = Population(population)
        return [i for i, p in enumerate(self.populations) if p is population]

    def equals(self, other: "ProfileTable") -> bool:
        return (np.array_equal(self.embeddings, other.embeddings)
                and self.communities == other.communities
                and self.populations == other.populations)


def cosine(a, b) -> float:
    """
    Standard cosine similarity, clipped to [-1, 1].

    Raises:
        ProfileError: On dimension mismatch or a zero vector
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ProfileError(f"dimension mismatch: {a.shape} vs {b.shape}")
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        raise ProfileError("cosine undefined for a zero vector")
    return float(np.clip(a @ b / denom, -1.0, 1.0))


def synth_profiles(n: int, n_communities: int, d: int = 32, intra_spread: float = 0.3,
                   seed: int = 0, population: Union[Population, str] = Population.BOT) -> ProfileTable:
    """
    Generate embeddings with planted community structure.

    Centroids are drawn uniformly on the unit sphere; node i belongs to
    community ``i % n_communities`` and gets ``normalize(centroid + N(0, spread² I))``.

    Args:
        n: Number of nodes
        n_communities: Number of planted communities
        d: Embedding dimension
        intra_spread: Standard deviation of the per-node noise
        seed: Run seed
        population: Population label for every node

    Returns:
        ProfileTable: Deterministic in all arguments
    """
    if n_communities < 1 or n < n_communities:
        raise ProfileError(f"need n >= n_communities >= 1, got n={n}, k={n_communities}")
    if d < 2:
        raise ProfileError(f"dimension must be at least 2, got {d}")
    if not intra_spread > 0:
        raise ProfileError(f"intra_spread must be positive, got {intra_spread}")

    rng = derive_rng(seed, "profiles")
    centroids = rng.standard_normal((n_communities, d))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    labels = np.arange(n) % n_communities
    noise = rng.standard_normal((n, d)) * intra_spread
    vectors = centroids[labels] + noise
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return ProfileTable.build(vectors, labels.tolist(), [population] * n)


def community_cosine_gap(table: ProfileTable) -> Tuple[float, float]:
    """
    Mean intra-community and inter-community cosine over all labelled pairs.

    Returns:
        Tuple[float, float]: (mean intra, mean inter)
    """
    labelled = [i for i, c in enumerate(table.communities) if c is not None]
    if len(labelled) < 2:
        raise ProfileError("need at least two labelled nodes")
    emb = table.embeddings[labelled]
    labels = np.array([table.communities[i] for i in labelled])
    sims = emb @ emb.T
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    diff = labels[:, None] != labels[None, :]
    intra = float(sims[same].mean()) if same.any() else float("nan")
    inter = float(sims[diff].mean()) if diff.any() else float("nan")
    return intra, inter


def write_jsonl(path: Union[str, Path], records: Iterable[dict]) -> Path:
    """Write one compact JSON object per line; a .gz suffix gzips with a zero mtime."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(json.dumps(rec, separators=(",", ":")) + "\n" for rec in records).encode("utf-8")
    path.write_bytes(gzip.compress(text, mtime=0) if path.suffix == ".gz" else text)
    return path


def iter_jsonl(path: Union[str, Path], error_cls=ProfileError) -> Iterator[dict]:
    """Yield the decoded objects of a JSON-lines file, skipping blank lines."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise error_cls(f"{path}:{lineno}: invalid JSON ({e.msg})") from e


def profile_records(table: ProfileTable) -> List[dict]:
    return [
        {
            "id": i,
            "label": table.populations[i].value,
            "community": table.communities[i],
            "embedding": [float(x) for x in table.embeddings[i]],
        }
        for i in range(len(table))
    ]


def save_profiles(table: ProfileTable, path: Union[str, Path]) -> Path:
    """Write the table as JSON-lines, one object per node in id order."""
    return write_jsonl(path, profile_records(table))


def parse_profile_records(records: Iterable[dict]) -> ProfileTable:
    """
    Build a table from decoded profile records.

    Raises:
        ProfileError: On malformed records, non-dense ids or mixed dimensions
    """
    rows = {}
    dim = None
    for rec in records:
        try:
            node = int(rec["id"])
            label = Population(rec["label"])
            community = rec.get("community")
            vector = [float(x) for x in rec["embedding"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProfileError(f"malformed profile record {rec!r}: {e}") from e
        if community is not None and (not isinstance(community, int) or community < 0):
            raise ProfileError(f"community of node {node} must be a non-negative int or null")
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise ProfileError(f"node {node} has dimension {len(vector)}, expected {dim}")
        if node in rows:
            raise ProfileError(f"duplicate profile id {node}")
        rows[node] = (label, community, vector)

    if sorted(rows) != list(range(len(rows))):
        raise ProfileError("profile ids must be dense in [0, n)")
    if not rows:
        raise ProfileError("no profile records found")
    ordered = [rows[i] for i in range(len(rows))]
    return ProfileTable.build(
        np.array([r[2] for r in ordered], dtype=np.float64),
        [r[1] for r in ordered],
        [r[0] for r in ordered],
    )


def load_profiles(path: Union[str, Path]) -> ProfileTable:
    """
    Load a JSON-lines profile file.

    Args:
        path: File with one {id, label, community, embedding} object per line

    Returns:
        ProfileTable: Embeddings re-normalized to unit norm, labels preserved
    """
    path = Path(path)
    if not path.exists():
        raise ProfileError(f"profile file not found: {path}")

    table = parse_profile_records(iter_jsonl(path))
    logger.info("loaded %d profiles of dimension %d from %s", len(table), table.dimension, path)
    return table
