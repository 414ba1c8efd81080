"""
Dataset Store Service

Persists graphs as a directory of JSON-lines files plus a manifest, and loads
them back.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from config.settings import TOOL_VERSION
from .errors import DatasetFormatError, ProfileError, SocialForgeError
from .profiles import iter_jsonl, parse_profile_records, profile_records, write_jsonl
from .social_graph import EdgeKind, SocialGraph

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class DatasetStore:
    """
    Reads and writes one dataset directory.

    Layout:
    - nodes.jsonl: {id, label, community, embedding} per node, or {id} for profile-less graphs
    - edges.jsonl: {source, target, kind}; follow edges first, then interactions in sequence order
    - manifest.json: counts, seed, config hash, tool and schema versions
    - interactions.jsonl / report.json / chain_log.jsonl when the build produced them
    """

    def __init__(self, root: Union[str, Path], gzip: bool = False):
        """
        Initialize the DatasetStore.

        Args:
            root: Dataset directory
            gzip: Compress the JSON-lines files
        """
        self.root = Path(root)
        self.gzip = gzip

    def _data_path(self, stem: str) -> Path:
        plain = self.root / f"{stem}.jsonl"
        packed = self.root / f"{stem}.jsonl.gz"
        if self.gzip:
            return packed
        if not plain.exists() and packed.exists():
            return packed
        return plain

    @property
    def nodes_path(self) -> Path:
        return self._data_path("nodes")

    @property
    def edges_path(self) -> Path:
        return self._data_path("edges")

    @property
    def interactions_path(self) -> Path:
        return self._data_path("interactions")

    @property
    def chain_log_path(self) -> Path:
        return self._data_path("chain_log")

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def report_path(self) -> Path:
        return self.root / "report.json"

    # -- writing ------------------------------------------------------------

    @staticmethod
    def edge_records(g: SocialGraph) -> List[dict]:
        records = [{"source": u, "target": v, "kind": EdgeKind.FOLLOW.value} for u, v in g.edges()]
        records += [{"source": r.source, "target": r.target, "kind": r.kind.value} for r in g.interactions]
        return records

    def save(self, g: SocialGraph, manifest: Optional[dict] = None,
             interaction_records: Optional[Iterable[dict]] = None,
             report: Optional[dict] = None,
             chain_log: Optional[Iterable[dict]] = None) -> dict:
        """
        Write the dataset directory.

        Args:
            g: Graph to persist
            manifest: Extra manifest fields (seed, config_hash, partial, ...)
            interaction_records: Generated interaction records
            report: Build/refinement report
            chain_log: Logged chain records

        Returns:
            dict: The manifest as written
        """
        self.root.mkdir(parents=True, exist_ok=True)
        has_profiles = g.profiles is not None
        nodes = profile_records(g.profiles) if has_profiles else [{"id": i} for i in range(g.node_count)]
        write_jsonl(self.nodes_path, nodes)
        write_jsonl(self.edges_path, self.edge_records(g))

        written = {
            "seed": None,
            "config_hash": None,
            "partial": False,
            **(manifest or {}),
            "node_count": g.node_count,
            "edge_count": g.edge_count,
            "interaction_count": len(g.interactions),
            "has_profiles": has_profiles,
            "tool_version": TOOL_VERSION,
            "schema_version": SCHEMA_VERSION,
        }
        if interaction_records is not None:
            write_jsonl(self.interactions_path, interaction_records)
        if chain_log is not None:
            chain_log = list(chain_log)
            write_jsonl(self.chain_log_path, chain_log)
            written["chains_logged"] = len(chain_log)
        if report is not None:
            self.report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.manifest_path.write_text(json.dumps(written, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("saved dataset to %s (%d nodes, %d follow edges)", self.root, g.node_count, g.edge_count)
        return written

    # -- reading ------------------------------------------------------------

    def load_manifest(self) -> dict:
        if not self.manifest_path.exists():
            raise DatasetFormatError(f"no manifest in {self.root}")
        try:
            manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"{self.manifest_path}: invalid JSON ({e.msg})") from e
        if manifest.get("schema_version") != SCHEMA_VERSION:
            raise DatasetFormatError(
                f"{self.root}: schema version {manifest.get('schema_version')} != {SCHEMA_VERSION}")
        return manifest

    def load(self) -> Tuple[SocialGraph, dict]:
        """
        Load graph and manifest, checking the manifest counts against the files.

        Raises:
            DatasetFormatError: On missing files, bad records or count mismatches
        """
        manifest = self.load_manifest()
        for path in (self.nodes_path, self.edges_path):
            if not path.exists():
                raise DatasetFormatError(f"missing {path.name} in {self.root}")

        node_records = list(iter_jsonl(self.nodes_path, DatasetFormatError))
        if manifest.get("has_profiles", True):
            try:
                profiles = parse_profile_records(node_records)
            except ProfileError as e:
                raise DatasetFormatError(f"{self.nodes_path}: {e}") from e
            g = SocialGraph(len(profiles), profiles)
        else:
            if [r.get("id") for r in node_records] != list(range(len(node_records))):
                raise DatasetFormatError(f"{self.nodes_path}: node ids must be dense in [0, n)")
            g = SocialGraph(len(node_records))

        follows = interactions = 0
        for lineno, rec in enumerate(iter_jsonl(self.edges_path, DatasetFormatError), 1):
            try:
                u, v, kind = int(rec["source"]), int(rec["target"]), EdgeKind(rec["kind"])
                if kind is EdgeKind.FOLLOW:
                    if not g.add_follow_edge(u, v):
                        raise DatasetFormatError(f"duplicate follow edge {u}->{v}")
                    follows += 1
                else:
                    g.attach_interaction(u, v, kind)
                    interactions += 1
            except (KeyError, TypeError, ValueError, SocialForgeError) as e:
                raise DatasetFormatError(f"{self.edges_path}:{lineno}: bad edge record {rec!r} ({e})") from e

        expected = {"node_count": g.node_count, "edge_count": follows, "interaction_count": interactions}
        for key, actual in expected.items():
            if manifest.get(key) != actual:
                raise DatasetFormatError(f"manifest {key}={manifest.get(key)} but files hold {actual}")
        logger.info("loaded dataset %s (%d nodes, %d follow edges)", self.root, g.node_count, follows)
        return g, manifest

    def load_chain_log(self) -> List[dict]:
        path = self.chain_log_path
        if not path.exists():
            raise DatasetFormatError(f"no chain log in {self.root}; build with log_chains enabled")
        return list(iter_jsonl(path, DatasetFormatError))

    def load_interaction_records(self) -> List[dict]:
        path = self.interactions_path
        if not path.exists():
            return []
        return list(iter_jsonl(path, DatasetFormatError))

    def load_report(self) -> Optional[dict]:
        if not self.report_path.exists():
            return None
        return json.loads(self.report_path.read_text(encoding="utf-8"))
