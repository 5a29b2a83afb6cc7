"""Staged command-line pipeline with file-based handoff.

Stages: ingest -> features -> embed -> null -> test -> report, plus `synth`
to fabricate labeled input graphs and `all` to run the whole chain.  Every
stage writes TSV artifacts into the output directory and appends one line to
``run_manifest.tsv`` recording stage, version, seed, config and input/output
digests; the wall-clock timestamp is isolated in the final column so two
runs with identical config are byte-identical everywhere else.

Exit codes: 0 ok, 2 missing input/artifact or bad config, 3 parse error in
strict mode, 4 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import graph as gstore
from . import synth as synthmod
from .embedding import (
    DEFAULT_EIG_TOL,
    DEFAULT_PAIR_BUDGET,
    DegenerateFeaturesError,
    fit_embedding,
    load_model,
    save_model,
    transform_all,
)
from .features import compute_all_features, read_features_tsv, write_features_tsv
from .graph import ParseError
from .nullmodel import (
    NullFitError,
    NullSamplingConfig,
    fit_null_scaling,
    group_mean_distance,
    read_null_model_tsv,
    read_results_tsv,
    sample_null,
    summarize,
    write_null_model_tsv,
    write_null_samples_tsv,
    write_results_tsv,
    write_summary_tsv,
    z_score,
)

STAGES = ("ingest", "features", "embed", "null", "test", "synth", "report")
ALL_CHAIN = ("ingest", "features", "embed", "null", "test", "report")

EDGES_TSV = "edges.tsv"
NODES_TSV = "nodes.tsv"
LABELS_TSV = "labels.tsv"
FEATURES_TSV = "features.tsv"
MODEL_FILE = "embedding_model.txt"
NULL_SAMPLES_TSV = "null_samples.tsv"
NULL_MODEL_TSV = "null_model.tsv"
RESULTS_TSV = "results.tsv"
SUMMARY_TSV = "summary.tsv"
MANIFEST = "run_manifest.tsv"

DEFAULT_SET_SIZES = (10, 20, 50, 100, 200, 500)


@dataclass
class PipelineConfig:
    out: Path
    links: Path | None = None
    edges: Path | None = None
    geo: Path | None = None
    seed: int = 0
    sets: int = 100
    sizes: tuple[int, ...] = DEFAULT_SET_SIZES
    pair_budget: int = DEFAULT_PAIR_BUDGET
    eig_tol: float = DEFAULT_EIG_TOL
    fix_alpha: float | None = None
    min_group_size: int = 2
    level: str = "country"
    strict: bool = False
    labeled_only: bool = False
    pooled_std: bool = False
    # synth-only knobs
    model: str = "gravity"
    n: int = 20_000
    p: float = 0.001
    attach: int = 2
    groups: int = 20
    beta: float = 4.0
    stubs: tuple[int, ...] = (1, 2, 3, 4, 5)
    random_groups: int = 0
    group_sizes: tuple[int, int] = (50, 500)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:12]


def _append_manifest(
    cfg: PipelineConfig,
    stage: str,
    config_desc: str,
    inputs: list[Path],
    outputs: list[Path],
    info: str,
) -> None:
    def fmt(paths: list[Path]) -> str:
        return ";".join(f"{p.name}:{_digest(p)}" for p in paths) or "-"

    timestamp = datetime.now(timezone.utc).isoformat()
    line = "\t".join(
        [stage, __version__, str(cfg.seed), config_desc or "-", fmt(inputs), fmt(outputs),
         info or "-", timestamp]
    )
    with open(cfg.out / MANIFEST, "a", encoding="utf-8") as f:
        f.write(line + "\n")


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing {path} (produced by the '{producer}' stage)")
    return path


# ---------------------------------------------------------------------------
# shared loading
# ---------------------------------------------------------------------------

def _load_graph(cfg: PipelineConfig) -> gstore.Graph:
    edges_path = _require(cfg.out / EDGES_TSV, "ingest")
    nodes_path = _require(cfg.out / NODES_TSV, "ingest")
    with open(edges_path, encoding="utf-8") as f:
        edge_list = gstore.parse_edges_tsv(f, strict=cfg.strict)
    with open(nodes_path, encoding="utf-8") as f:
        gstore.parse_nodes_tsv(f, edge_list)
    return gstore.build_graph(edge_list)


def _load_labels(cfg: PipelineConfig) -> gstore.GeoLabels:
    labels_path = _require(cfg.out / LABELS_TSV, "ingest")
    with open(labels_path, encoding="utf-8") as f:
        return gstore.parse_geo(f, strict=cfg.strict)


def _load_points(cfg: PipelineConfig) -> tuple[list[str], np.ndarray]:
    features_path = _require(cfg.out / FEATURES_TSV, "features")
    model_path = _require(cfg.out / MODEL_FILE, "embed")
    with open(features_path, encoding="utf-8") as f:
        names, values = read_features_tsv(f)
    with open(model_path, encoding="utf-8") as f:
        model = load_model(f)
    return names, transform_all(model, values)


def _write_graph_artifacts(cfg: PipelineConfig, graph: gstore.Graph) -> list[Path]:
    edges_path = cfg.out / EDGES_TSV
    nodes_path = cfg.out / NODES_TSV
    with open(edges_path, "w", encoding="utf-8") as f:
        gstore.write_edges_tsv(graph, f)
    with open(nodes_path, "w", encoding="utf-8") as f:
        gstore.write_nodes_tsv(graph, f)
    return [edges_path, nodes_path]


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _stage_ingest(cfg: PipelineConfig) -> None:
    if cfg.links is None and cfg.edges is None:
        raise FileNotFoundError("missing input: pass --links or --edges to ingest")
    inputs: list[Path] = []
    if cfg.links is not None:
        source = _require(cfg.links, "input")
        with open(source, encoding="utf-8") as f:
            edge_list = gstore.parse_links(f, strict=cfg.strict)
    else:
        source = _require(cfg.edges, "input")
        with open(source, encoding="utf-8") as f:
            edge_list = gstore.parse_edges_tsv(f, strict=cfg.strict)
    inputs.append(source)
    graph = gstore.build_graph(edge_list)
    outputs = _write_graph_artifacts(cfg, graph)
    info = (
        f"n={graph.n} m={graph.m} self_dropped={edge_list.self_pairs_dropped}"
        f" dup_dropped={edge_list.duplicate_pairs_dropped}"
        f" malformed={edge_list.malformed_lines}"
        f" isolated={int(np.sum(graph.degrees == 0))}"
    )
    if cfg.geo is not None:
        geo_path = _require(cfg.geo, "input")
        inputs.append(geo_path)
        with open(geo_path, encoding="utf-8") as f:
            labels = gstore.parse_geo(f, strict=cfg.strict)
        labels_path = cfg.out / LABELS_TSV
        with open(labels_path, "w", encoding="utf-8") as f:
            gstore.write_geo_tsv(labels, f)
        outputs.append(labels_path)
        none, country_only, both = gstore.level_tallies(labels, graph.names)
        unmatched = len(gstore.unmatched_names(graph, labels))
        info += (
            f" geo_none={none} geo_country={country_only} geo_region={both}"
            f" geo_rejected={labels.rejected} geo_unmatched={unmatched}"
        )
    _append_manifest(cfg, "ingest", f"strict={int(cfg.strict)}", inputs, outputs, info)


def _stage_features(cfg: PipelineConfig) -> None:
    graph = _load_graph(cfg)
    table = compute_all_features(graph)
    out_path = cfg.out / FEATURES_TSV
    with open(out_path, "w", encoding="utf-8") as f:
        write_features_tsv(graph, table, f)
    info = f"mean_degree={table.stats.mean_degree:.9g} degree_std={table.stats.degree_std:.9g}"
    _append_manifest(
        cfg, "features", "-", [cfg.out / EDGES_TSV, cfg.out / NODES_TSV], [out_path], info
    )


def _stage_embed(cfg: PipelineConfig) -> None:
    features_path = _require(cfg.out / FEATURES_TSV, "features")
    with open(features_path, encoding="utf-8") as f:
        names, values = read_features_tsv(f)
    inputs = [features_path]
    if cfg.labeled_only:
        labels = _load_labels(cfg)
        inputs.append(cfg.out / LABELS_TSV)
        keep = [i for i, name in enumerate(names) if name in labels.country]
        values = values[keep]
    model = fit_embedding(values, eig_tol=cfg.eig_tol)
    out_path = cfg.out / MODEL_FILE
    with open(out_path, "w", encoding="utf-8") as f:
        save_model(model, f)
    eigs = " ".join(f"{v:.6g}" for v in model.eigenvalues)
    _append_manifest(
        cfg,
        "embed",
        f"eig_tol={cfg.eig_tol:.9g} labeled_only={int(cfg.labeled_only)}",
        inputs,
        [out_path],
        f"retained={model.retained} eigenvalues=[{eigs}]",
    )


def _stage_null(cfg: PipelineConfig) -> None:
    names, points = _load_points(cfg)
    inputs = [cfg.out / FEATURES_TSV, cfg.out / MODEL_FILE]
    if cfg.labeled_only:
        labels = _load_labels(cfg)
        inputs.append(cfg.out / LABELS_TSV)
        keep = [i for i, name in enumerate(names) if name in labels.country]
        points = points[keep]
    config = NullSamplingConfig(
        set_sizes=cfg.sizes,
        sets_per_size=cfg.sets,
        pair_budget=cfg.pair_budget,
        seed=cfg.seed,
        pooled_std=cfg.pooled_std,
    )
    samples = sample_null(points, config)
    model = fit_null_scaling(samples, fix_alpha=cfg.fix_alpha)
    samples_path = cfg.out / NULL_SAMPLES_TSV
    model_path = cfg.out / NULL_MODEL_TSV
    with open(samples_path, "w", encoding="utf-8") as f:
        write_null_samples_tsv(samples, f)
    with open(model_path, "w", encoding="utf-8") as f:
        write_null_model_tsv(model, f)
    desc = (
        f"sizes={','.join(map(str, cfg.sizes))} sets={cfg.sets}"
        f" pair_budget={cfg.pair_budget} pooled_std={int(cfg.pooled_std)}"
        f" fix_alpha={'-' if cfg.fix_alpha is None else f'{cfg.fix_alpha:.9g}'}"
        f" labeled_only={int(cfg.labeled_only)}"
    )
    info = f"mu_r={model.mu_r:.9g} a={model.a:.9g} alpha={model.alpha:.9g}"
    _append_manifest(cfg, "null", desc, inputs, [samples_path, model_path], info)


def _stage_test(cfg: PipelineConfig) -> None:
    names, points = _load_points(cfg)
    null_path = _require(cfg.out / NULL_MODEL_TSV, "null")
    with open(null_path, encoding="utf-8") as f:
        null_model = read_null_model_tsv(f)
    labels = _load_labels(cfg)
    name_to_row = {name: i for i, name in enumerate(names)}

    levels = ("country", "region") if cfg.level == "both" else (cfg.level,)
    results = []
    skipped_total: list[str] = []
    unmatched = 0
    for level in levels:
        raw: dict[str, list[int]] = {}
        if level == "country":
            for name, country in labels.country.items():
                row = name_to_row.get(name)
                if row is None:
                    unmatched += 1
                    continue
                raw.setdefault(country, []).append(row)
        else:
            for name, region in labels.region.items():
                row = name_to_row.get(name)
                if row is None:
                    continue
                raw.setdefault(f"{labels.country[name]}/{region}", []).append(row)
        membership = {k: np.array(sorted(v)) for k, v in raw.items()}
        if not membership:
            raise ValueError(f"no {level}-level groups found in labels")
        means, skipped = group_mean_distance(
            points,
            membership,
            pair_budget=cfg.pair_budget,
            seed=cfg.seed,
            min_group_size=cfg.min_group_size,
        )
        skipped_total.extend(f"{level}:{k}" for k in skipped)
        for key, result in means.items():
            results.append(
                z_score(null_model, key, level, len(membership[key]), result.mean)
            )

    out_path = cfg.out / RESULTS_TSV
    with open(out_path, "w", encoding="utf-8") as f:
        write_results_tsv(results, f)
    desc = (
        f"level={cfg.level} min_group_size={cfg.min_group_size}"
        f" pair_budget={cfg.pair_budget}"
    )
    info = (
        f"groups={len(results)} skipped={len(skipped_total)} unmatched_names={unmatched}"
    )
    _append_manifest(
        cfg,
        "test",
        desc,
        [cfg.out / FEATURES_TSV, cfg.out / MODEL_FILE, null_path, cfg.out / LABELS_TSV],
        [out_path],
        info,
    )


def _stage_report(cfg: PipelineConfig) -> None:
    results_path = _require(cfg.out / RESULTS_TSV, "test")
    with open(results_path, encoding="utf-8") as f:
        results = read_results_tsv(f)
    summary = summarize(results)
    out_path = cfg.out / SUMMARY_TSV
    with open(out_path, "w", encoding="utf-8") as f:
        write_summary_tsv(summary, f)
    frac = summary.n_significant / summary.n_groups
    print(f"groups tested: {summary.n_groups}")
    print(f"significant (|z| > 2): {summary.n_significant} ({100 * frac:.1f}%)")
    print(f"strongly similar (z < -2): {summary.n_low}")
    print(f"strongly dissimilar (z > +2): {summary.n_high}")
    info = (
        f"groups={summary.n_groups} significant={summary.n_significant}"
        f" low={summary.n_low} high={summary.n_high}"
    )
    _append_manifest(cfg, "report", "-", [results_path], [out_path], info)


def _stage_synth(cfg: PipelineConfig) -> None:
    labels = None
    if cfg.model == "er":
        graph = synthmod.gen_er(cfg.n, cfg.p, cfg.seed)
        desc = f"model=er n={cfg.n} p={cfg.p:.9g}"
    elif cfg.model == "ba":
        graph = synthmod.gen_pref_attach(cfg.n, cfg.attach, cfg.seed)
        desc = f"model=ba n={cfg.n} attach={cfg.attach}"
    elif cfg.model == "gravity":
        params = synthmod.make_gravity_params(
            n=cfg.n, groups=cfg.groups, beta=cfg.beta, stubs=cfg.stubs, seed=cfg.seed
        )
        graph, labels = synthmod.gen_spatial_gravity(params)
        desc = (
            f"model=gravity n={cfg.n} groups={cfg.groups} beta={cfg.beta:.9g}"
            f" stubs={','.join(map(str, cfg.stubs))}"
        )
    else:
        raise ValueError(f"unknown synth model {cfg.model!r}")

    if labels is None and cfg.random_groups > 0:
        labels = synthmod.random_group_labels(
            graph, cfg.random_groups, cfg.group_sizes, cfg.seed
        )
        desc += f" random_groups={cfg.random_groups}"

    outputs = _write_graph_artifacts(cfg, graph)
    if labels is not None:
        labels_path = cfg.out / LABELS_TSV
        with open(labels_path, "w", encoding="utf-8") as f:
            gstore.write_geo_tsv(labels, f)
        outputs.append(labels_path)
    _append_manifest(cfg, "synth", desc, [], outputs, f"n={graph.n} m={graph.m}")


_STAGE_FUNCS = {
    "ingest": _stage_ingest,
    "features": _stage_features,
    "embed": _stage_embed,
    "null": _stage_null,
    "test": _stage_test,
    "report": _stage_report,
    "synth": _stage_synth,
}


def run_stage(stage: str, cfg: PipelineConfig) -> int:
    """Run a single stage; raises on failure (main maps to exit codes)."""
    if stage not in _STAGE_FUNCS:
        raise ValueError(f"unknown stage {stage!r}")
    cfg.out.mkdir(parents=True, exist_ok=True)
    _STAGE_FUNCS[stage](cfg)
    return 0


def run_all(cfg: PipelineConfig) -> int:
    """ingest -> features -> embed -> null -> test -> report, stop on failure."""
    for stage in ALL_CHAIN:
        run_stage(stage, cfg)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _int_pair(text: str) -> tuple[int, int]:
    parts = _int_list(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LO,HI")
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toposig",
        description="Feature-space geographic-clustering tests for network topologies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--links", type=Path, help="router links file")
    common.add_argument("--edges", type=Path, help="canonical edge TSV")
    common.add_argument("--geo", type=Path, help="geolocation TSV")
    common.add_argument("--out", type=Path, required=True, help="artifact directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--sets", type=int, default=100, help="random sets per size")
    common.add_argument(
        "--sizes", type=_int_list, default=DEFAULT_SET_SIZES, help="comma list of set sizes"
    )
    common.add_argument("--pair-budget", type=int, default=DEFAULT_PAIR_BUDGET)
    common.add_argument("--eig-tol", type=float, default=DEFAULT_EIG_TOL)
    common.add_argument("--fix-alpha", type=float, default=None)
    common.add_argument("--min-group-size", type=int, default=2)
    common.add_argument("--level", choices=("country", "region", "both"), default="country")
    common.add_argument("--strict", action="store_true", help="fail on malformed lines")
    common.add_argument(
        "--labeled-only",
        action="store_true",
        help="restrict the stage's node set to geolocated nodes",
    )
    common.add_argument(
        "--pooled-std",
        action="store_true",
        help="null spread over pooled pair distances instead of set means",
    )

    for stage in ("ingest", "features", "embed", "null", "test", "report", "all"):
        sub.add_parser(stage, parents=[common])

    synth = sub.add_parser("synth", parents=[common])
    synth.add_argument("--model", choices=("er", "ba", "gravity"), default="gravity")
    synth.add_argument("--n", type=int, default=20_000)
    synth.add_argument("--p", type=float, default=0.001, help="edge probability (er)")
    synth.add_argument("--attach", type=int, default=2, help="edges per arrival (ba)")
    synth.add_argument("--groups", type=int, default=20)
    synth.add_argument("--beta", type=float, default=4.0)
    synth.add_argument("--stubs", type=_int_list, default=(1, 2, 3, 4, 5))
    synth.add_argument(
        "--random-groups", type=int, default=0, help="attach N random label groups (er/ba)"
    )
    synth.add_argument("--group-sizes", type=_int_pair, default=(50, 500))
    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig(out=args.out)
    for name in vars(cfg):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    try:
        if args.command == "all":
            return run_all(cfg)
        return run_stage(args.command, cfg)
    except FileNotFoundError as exc:
        print(f"toposig: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"toposig: parse error: {exc}", file=sys.stderr)
        return 3
    except (DegenerateFeaturesError, NullFitError) as exc:
        print(f"toposig: degenerate input: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"toposig: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
