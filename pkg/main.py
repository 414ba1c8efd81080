#!/usr/bin/env python3
"""
SocialForge CLI - Command Line Interface for Social Bot Network Synthesis

Features:
- Synthetic profile tables with planted communities
- Bot network construction (GSI-guided or random multi-hop completion)
- Chung-Lu and stochastic Kronecker baselines
- Structural metrics, multi-graph comparison and chain export

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 partial output.
"""

import argparse
import json
import sys
import traceback
from pathlib import Path
from typing import List, Optional

# Add project root to path
sys.path.append(str(Path(__file__).parent))

from pydantic import ValidationError

from src.services import (
    BotnetBuilder,
    DatasetStore,
    EnvironmentSetup,
    MetricsManager,
    Population,
    RunConfig,
)
from src.services.baselines import KroneckerInitiator, RandomMhopPolicy, chung_lu, kronecker, weights_from_config
from src.services.botnet_builder import assemble_dataset, dataset_composition
from src.services.errors import (
    ConfigValidationError,
    DatasetFormatError,
    ProfileError,
    SocialForgeError,
)
from src.services.gsi_policy import chain_record, sample_walk_chains
from src.services.profiles import community_cosine_gap, save_profiles, synth_profiles, write_jsonl
from src.services.schemas import STRATEGIES, BuildConfig, SynthConfig
from config.settings import DEFAULT_SEED, OUTPUT_DIR

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_PARTIAL = 3


def print_banner():
    """Print application banner"""
    print("\n")
    print("*" * 60)
    print("*" + " " * 58 + "*")
    print("*" + "  SOCIALFORGE - SOCIAL BOT NETWORK SYNTHESIS".center(58) + "*")
    print("*" + "  Command Line Interface".center(58) + "*")
    print("*" + " " * 58 + "*")
    print("*" * 60)
    print("\n")


def print_step(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


def _read_config_json(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigValidationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"{path}: invalid JSON ({e.msg})") from e
    if not isinstance(data, dict):
        raise ConfigValidationError(f"{path}: top level must be an object")
    return data


def _out_dir(args, default_name: str, configured: Optional[str] = None) -> Path:
    if args.out:
        return Path(args.out)
    if configured:
        return Path(configured)
    return OUTPUT_DIR / default_name


def load_synth_config(args) -> SynthConfig:
    """Synth block from --config (if any) with CLI overrides on top."""
    block = {}
    if args.config:
        block = dict(_read_config_json(args.config).get("synth") or {})
    overrides = {"n": args.n, "n_communities": args.communities, "dim": args.dim,
                 "intra_spread": args.spread, "population": args.population}
    block.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SynthConfig.model_validate(block)
    except ValidationError as e:
        raise ConfigValidationError(str(e)) from e


def load_run_config(args) -> RunConfig:
    """RunConfig from --config, or assembled from the build flags."""
    if args.config:
        return RunConfig.from_file(args.config, seed=args.seed)

    strategy = args.strategy
    block = {}
    if strategy in ("guided", "random-mhop"):
        overrides = {"n_bots": args.n_bots, "n_communities": args.communities, "tau": args.tau,
                     "profiles_path": args.profiles, "hop_horizon": args.hop_horizon}
        if strategy == "random-mhop":
            overrides["m"] = args.m
        if args.no_chain_log:
            overrides["log_chains"] = False
        block = {k: v for k, v in overrides.items() if v is not None}
    elif strategy == "chung-lu":
        block = {k: v for k, v in {"n": args.n, "constant_weight": args.weight}.items() if v is not None}
    elif strategy == "kronecker":
        block = {k: v for k, v in {"k": args.k}.items() if v is not None}

    blocks = {strategy: block}
    if args.humans is not None:
        blocks["human"] = {"n_humans": args.humans, "bridge_edges_per_side": args.bridges or 0}
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    return RunConfig.load_dict({"strategy": strategy, "seed": seed, "gzip": args.gzip, **blocks})


# -- subcommands -----------------------------------------------------------------

def run_synth(args) -> int:
    """Write a synthetic profile table."""
    cfg = load_synth_config(args)
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    print_step("STEP 1: Synthesizing Profiles")
    table = synth_profiles(cfg.n, cfg.n_communities, cfg.dim, cfg.intra_spread, seed=seed,
                           population=Population(cfg.population))
    out_dir = _out_dir(args, f"profiles-{seed}")
    path = save_profiles(table, out_dir / ("profiles.jsonl.gz" if args.gzip else "profiles.jsonl"))
    intra, inter = community_cosine_gap(table) if len(table) > 1 else (float("nan"), float("nan"))
    print(f"✓ {len(table)} profiles, {table.community_count} communities, dimension {table.dimension}")
    print(f"✓ Mean cosine intra {intra:.3f} / inter {inter:.3f}")
    print(f"✓ Written to: {path}")
    print()
    return EXIT_OK


def _build_profile_graph(run: RunConfig, verbose: bool, threads: int = 1):
    cfg = run.strategy_config

    def random_policy(graph, labels):
        return RandomMhopPolicy(graph, cfg.m)

    factory = random_policy if run.strategy == "random-mhop" else None
    return BotnetBuilder(cfg, policy_factory=factory, verbose=verbose, threads=threads).build()


def _build_human_graph(run: RunConfig, verbose: bool, threads: int = 1):
    human = run.human
    if human.graph_path:
        graph, _ = DatasetStore(human.graph_path).load()
        if graph.profiles is None:
            raise DatasetFormatError(f"human graph {human.graph_path} has no profiles")
        return graph
    cfg = BuildConfig(n_bots=human.n_humans, n_communities=human.n_communities, tau=human.tau,
                      intra_mean_out_degree=human.intra_mean_out_degree, seed=run.seed,
                      hop_horizon=human.hop_horizon,
                      log_chains=False, embedding_dim=run.strategy_config.embedding_dim,
                      interaction_count_per_edge=run.strategy_config.interaction_count_per_edge)
    return BotnetBuilder(cfg, population=Population.HUMAN, verbose=verbose, threads=threads).build().graph


def run_build(args) -> int:
    """Run the configured generator and write the dataset directory."""
    run = load_run_config(args)
    cfg = run.strategy_config
    out_dir = _out_dir(args, f"{run.strategy}-{run.seed}", run.output_dir)
    print(f"Strategy: {run.strategy}   Seed: {run.seed}   Config hash: {run.config_hash()[:12]}")
    print()

    result = None
    if run.strategy in ("guided", "random-mhop"):
        result = _build_profile_graph(run, verbose=True, threads=args.threads)
        graph = result.graph
    elif run.strategy == "chung-lu":
        print_step("STEP 1: Sampling Chung-Lu Graph")
        weights = weights_from_config(cfg.n, cfg.weights, cfg.constant_weight, cfg.exponent, run.seed)
        graph = chung_lu(weights, run.seed)
        print(f"✓ {graph.node_count} nodes, {graph.edge_count} follow edges")
        print()
    else:
        print_step("STEP 1: Sampling Kronecker Graph")
        graph = kronecker(KroneckerInitiator(cfg.initiator), cfg.k, run.seed)
        print(f"✓ {graph.node_count} nodes, {graph.edge_count} follow edges")
        print()

    if run.human is not None:
        if result is None:
            raise ConfigValidationError("a human side needs a profile-based strategy (guided or random-mhop)")
        print_step("STEP 5: Assembling Human/Bot Dataset")
        human_graph = _build_human_graph(run, verbose=False, threads=args.threads)
        graph = assemble_dataset(graph, human_graph, run.human.bridge_edges_per_side, run.seed)
        print(f"✓ {graph.node_count} nodes, {graph.edge_count} follow edges")
        print()

    partial = result is not None and not result.report.converged
    manifest = {
        "seed": run.seed,
        "config_hash": run.config_hash(),
        "strategy": run.strategy,
        "partial": partial,
        "composition": dataset_composition(graph),
    }
    report = None
    records = None
    chain_log = None
    if result is not None:
        manifest["chains_generated"] = result.report.chains_generated
        report = {"build": result.report.to_dict(), "refinement": result.refinement.to_dict()}
        records = [rec.to_dict() for rec in result.refinement.records]
        if cfg.log_chains:
            chain_log = result.chain_log

    store = DatasetStore(out_dir, gzip=run.gzip)
    store.save(graph, manifest, interaction_records=records, report=report, chain_log=chain_log)
    (out_dir / "config.json").write_text(run.canonical_json() + "\n", encoding="utf-8")

    print_step("BUILD SUMMARY")
    print(f"✓ Dataset written to: {out_dir}")
    if result is not None:
        rep = result.report
        print(f"✓ Reachability: {rep.initial_reachability:.4f} -> {rep.final_reachability:.4f}")
        print(f"✓ Chains generated: {rep.chains_generated}")
    print()
    if partial:
        print("⚠ Completion stopped at max_iters before reaching tau; output flagged partial",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def run_metrics(args) -> int:
    """Compute the MetricsReport of one dataset."""
    graph, _ = DatasetStore(args.graph).load()
    manager = MetricsManager(threads=args.threads, max_h=args.max_h, log_bins=args.log_bins)
    report = manager.compute_report(graph)
    json_path, csv_path = manager.save_report(report, Path(args.out) if args.out else Path(args.graph))
    manager.print_summary(report)
    print(f"✓ Metrics written to: {json_path} and {csv_path}")
    print()
    return EXIT_OK


def run_compare(args) -> int:
    """Side-by-side metrics table of several datasets."""
    if len(args.graphs) < 2:
        raise ConfigValidationError("compare needs at least two graph directories")
    stores = [DatasetStore(p) for p in args.graphs]
    versions = {store.load_manifest()["schema_version"] for store in stores}
    if len(versions) != 1:
        raise DatasetFormatError(f"mismatched schema versions {sorted(versions)}")
    graphs = {str(p): store.load()[0] for p, store in zip(args.graphs, stores)}
    table = MetricsManager(threads=args.threads).compare(graphs)
    out_dir = _out_dir(args, "compare")
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "compare.csv", index=False)
    print_step("COMPARISON")
    print(table.to_string(index=False))
    print()
    print(f"✓ Written to: {out_dir / 'compare.csv'}")
    return EXIT_OK


def run_export_chains(args) -> int:
    """Export the logged chains (and optionally fresh walk chains) as JSON-lines."""
    store = DatasetStore(args.graph)
    manifest = store.load_manifest()
    records = store.load_chain_log()
    expected = manifest.get("chains_generated")
    if expected is not None and expected != len(records):
        raise DatasetFormatError(f"chain log holds {len(records)} records, manifest reports {expected}")
    output = Path(args.output) if args.output else Path(args.graph) / "chains.jsonl"
    write_jsonl(output, records)
    print(f"✓ {len(records)} chains written to: {output}")

    if args.walks:
        graph, _ = store.load()
        seed = args.seed if args.seed is not None else manifest.get("seed") or DEFAULT_SEED
        walks = [chain_record(c, graph) for c in sample_walk_chains(graph, graph.profiles, args.walks, seed)]
        walk_path = output.with_name("walks.jsonl")
        write_jsonl(walk_path, walks)
        print(f"✓ {len(walks)} walk chains written to: {walk_path}")
    print()
    return EXIT_OK


COMMANDS = {
    "synth": run_synth,
    "build": run_build,
    "metrics": run_metrics,
    "compare": run_compare,
    "export-chains": run_export_chains,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="SocialForge - Social Bot Network Synthesis CLI",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic profile table
  python3 main.py --seed 7 synth --n 500 --communities 10

  # Bot network with GSI-guided completion
  python3 main.py --out runs/gm build --strategy guided --n-bots 500

  # Random 4-hop baseline and a Kronecker graph
  python3 main.py --out runs/rand build --strategy random-mhop --m 4
  python3 main.py --out runs/kron build --strategy kronecker --k 10

  # Metrics and comparison
  python3 main.py metrics runs/gm
  python3 main.py --out runs/cmp compare runs/gm runs/rand

  # Chains with rewards and serialized text
  python3 main.py export-chains runs/gm --walks 100
        """
    )

    # Global options
    parser.add_argument('--config', type=str, help='JSON run configuration file')
    parser.add_argument('--seed', type=int, help=f'Run seed (default: {DEFAULT_SEED}, overrides the config)')
    parser.add_argument('--threads', type=int, help='Worker threads (default: available cores)')
    parser.add_argument('--out', type=str, help=f'Output directory (default: under {OUTPUT_DIR})')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging and error traces')

    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', help='Write a synthetic profile table')
    synth.add_argument('--n', type=int, help='Number of nodes')
    synth.add_argument('--communities', type=int, help='Number of planted communities')
    synth.add_argument('--dim', type=int, help='Embedding dimension')
    synth.add_argument('--spread', type=float, help='Intra-community noise')
    synth.add_argument('--population', choices=['bot', 'human'], help='Population label')
    synth.add_argument('--gzip', action='store_true', help='Gzip the profile file')

    build = sub.add_parser('build', help='Generate a graph dataset')
    build.add_argument('--strategy', choices=STRATEGIES, default='guided', help='Generator (ignored with --config)')
    build.add_argument('--n-bots', type=int, help='Number of bots')
    build.add_argument('--communities', type=int, help='Number of communities')
    build.add_argument('--tau', type=float, help='Target reachability fraction')
    build.add_argument('--hop-horizon', type=int, help='Count pairs as connected only within this many hops')
    build.add_argument('--m', type=int, help='Chain length for random-mhop')
    build.add_argument('--profiles', type=str, help='Profile JSON-lines file instead of synthetic profiles')
    build.add_argument('--n', type=int, help='Nodes for chung-lu')
    build.add_argument('--weight', type=float, help='Constant chung-lu weight (default: power law)')
    build.add_argument('--k', type=int, help='Kronecker power')
    build.add_argument('--humans', type=int, help='Add a synthetic human side of this size')
    build.add_argument('--bridges', type=int, help='Bridge edges per side between bots and humans')
    build.add_argument('--no-chain-log', action='store_true', help='Do not log generated chains')
    build.add_argument('--gzip', action='store_true', help='Gzip the JSON-lines files')

    metrics = sub.add_parser('metrics', help='Compute structural metrics of a dataset')
    metrics.add_argument('graph', type=str, help='Dataset directory')
    metrics.add_argument('--max-h', type=int, help='Neighborhood horizon (default: n - 1)')
    metrics.add_argument('--log-bins', action='store_true', help='Log-binned degree histograms')

    compare = sub.add_parser('compare', help='Compare metrics of several datasets')
    compare.add_argument('graphs', nargs='+', help='Dataset directories')

    export = sub.add_parser('export-chains', help='Export logged chains as JSON-lines')
    export.add_argument('graph', type=str, help='Dataset directory')
    export.add_argument('--output', type=str, help='Output file (default: <graph>/chains.jsonl)')
    export.add_argument('--walks', type=int, default=0, help='Also sample N walk chains from the final graph')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        args.threads = EnvironmentSetup(threads=args.threads, verbose=args.verbose).setup()
    except ValueError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    print_banner()
    try:
        return COMMANDS[args.command](args)
    except (ConfigValidationError, DatasetFormatError, ProfileError) as e:
        print(f"\n❌ Invalid input: {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return EXIT_VALIDATION
    except (SocialForgeError, OSError) as e:
        print(f"\n❌ Error: {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
