"""Command-line interface.

Exit codes: 0 success, 2 domain error, 3 format error, 64 usage error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import MergeTree, hcv
from .errors import DomainError, FormatError
from .geometry import AdjacencyMatrix, PointSet, delaunay_adjacency, hop_distances
from .io import (
    align,
    dump_json,
    read_labels,
    read_square,
    read_table,
    read_tree,
    write_labels,
    write_square,
    write_table,
    write_tree,
)
from .metrics import LINKAGES, METRICS, feature_dissimilarity
from .plotting import dendrogram_svg, scatter_svg
from .selection import get_cluster
from .synth import synthetic_data

EXIT_OK, EXIT_DOMAIN, EXIT_FORMAT, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hcv", description="Hierarchical clustering from vertex links.")
    parser.add_argument("--version", action="version", version=f"hcv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("adjacency", help="Delaunay adjacency of 2-D points")
    p.add_argument("--points", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("cluster", help="fit a vertex-link constrained merge tree")
    p.add_argument("--features", type=Path)
    p.add_argument("--dissimilarity", type=Path)
    p.add_argument("--diss", choices=("computed", "precomputed"), default="computed")
    geo = p.add_mutually_exclusive_group(required=True)
    geo.add_argument("--points", type=Path)
    geo.add_argument("--adjacency", type=Path)
    p.add_argument("--linkage", choices=LINKAGES, default="ward")
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--minkowski-power", type=float)
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp from the provenance block")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("select", help="choose the number of clusters from a tree")
    p.add_argument("--tree", required=True, type=Path)
    p.add_argument("--method", required=True, type=str.lower, choices=("smi", "m3c"))
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--features", type=Path)
    p.add_argument("--dissimilarity", type=Path)
    geo = p.add_mutually_exclusive_group()
    geo.add_argument("--points", type=Path)
    geo.add_argument("--adjacency", type=Path)
    p.add_argument("--metric", choices=METRICS,
                   help="feature metric for SMI (default: the one recorded in the tree)")
    p.add_argument("--minkowski-power", type=float)
    p.add_argument("--anchor-k1", action="store_true",
                   help="SMI: also consider K=2 using SMI(1) as the reference")
    p.add_argument("--resamples", type=int, default=100)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--mc-refs", type=int, default=25)
    p.add_argument("--criterion", choices=("pac", "rcsi"), default="pac")
    p.add_argument("--pac-lower", type=float, default=0.1)
    p.add_argument("--pac-upper", type=float, default=0.9)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-labels", required=True, type=Path)
    p.add_argument("--out-report", required=True, type=Path)

    p = sub.add_parser("synth", help="generate synthetic point-level data")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--f", type=float, default=30.0)
    p.add_argument("--r", type=float, default=0.02)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p1", type=int, default=2)
    p.add_argument("--p2", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True, type=Path)

    p = sub.add_parser("plot", help="SVG scatter plot or dendrogram")
    p.add_argument("--labels", type=Path)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--points", type=Path)
    src.add_argument("--features", type=Path)
    src.add_argument("--tree", type=Path)
    p.add_argument("--out", required=True, type=Path)
    return parser


# ---------------------------------------------------------------------------
# shared loaders
# ---------------------------------------------------------------------------

def _load_geometry(points_path, adjacency_path):
    if points_path is not None:
        ids, _, coords = read_table(points_path)
        return delaunay_adjacency(PointSet(coords, ids))
    ids, a = read_square(adjacency_path)
    if not np.all((a == 0) | (a == 1)):
        raise FormatError(f"{adjacency_path}: adjacency entries must be 0 or 1")
    return AdjacencyMatrix(a.astype(np.int8), ids)


def _reorder_square(ids_ref, ids, m, what):
    idx = align(ids_ref, ids, what)
    return m[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def run_adjacency(args) -> int:
    ids, _, coords = read_table(args.points)
    adj = delaunay_adjacency(PointSet(coords, ids))
    write_square(args.out, adj.ids, adj.a, integer=True)
    return EXIT_OK


def run_cluster(args) -> int:
    if args.diss == "precomputed":
        if args.dissimilarity is None:
            raise UsageError("--diss precomputed needs --dissimilarity")
        if args.metric is not None or args.minkowski_power is not None:
            raise UsageError("--metric cannot be combined with a precomputed dissimilarity")
    elif args.features is None:
        raise UsageError("--features is required unless --diss precomputed is given")
    elif args.dissimilarity is not None:
        raise UsageError("--dissimilarity needs --diss precomputed")

    adjacency = _load_geometry(args.points, args.adjacency)
    metric = args.metric or "euclidean"
    if args.diss == "precomputed":
        dids, d = read_square(args.dissimilarity)
        d = _reorder_square(adjacency.ids, dids, d, "dissimilarity")
        tree = hcv(adjacency, dissimilarity=d, linkage=args.linkage)
    else:
        fids, _, x = read_table(args.features)
        x = x[align(adjacency.ids, fids, "feature")]
        tree = hcv(adjacency, x, linkage=args.linkage, metric=metric,
                   minkowski_power=args.minkowski_power)

    provenance = {
        "inputs": {
            "features": None if args.features is None else str(args.features),
            "points": None if args.points is None else str(args.points),
            "adjacency": None if args.adjacency is None else str(args.adjacency),
            "dissimilarity": None if args.dissimilarity is None else str(args.dissimilarity),
        },
        "linkage": tree.linkage,
        "metric": tree.metric,
        "minkowski_power": args.minkowski_power,
        "version": __version__,
    }
    if not args.no_timestamp:
        provenance["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    tree = MergeTree(tree.labels, tree.merges, tree.heights, tree.n_components, tree.linkage,
                     tree.metric, tree.squared, provenance)
    write_tree(args.out, tree)
    return EXIT_OK


def _smi_inputs(args, tree: MergeTree):
    if args.points is None and args.adjacency is None:
        raise UsageError("method smi needs --points or --adjacency")
    adjacency = _load_geometry(args.points, args.adjacency)
    if adjacency.ids != tree.labels:
        idx = align(tree.labels, adjacency.ids, "geometry")
        adjacency = AdjacencyMatrix(adjacency.a[np.ix_(idx, idx)], tree.labels)
    hops = hop_distances(adjacency)
    if args.dissimilarity is not None:
        dids, d = read_square(args.dissimilarity)
        d = _reorder_square(tree.labels, dids, d, "dissimilarity")
    elif args.features is not None:
        fids, _, x = read_table(args.features)
        x = x[align(tree.labels, fids, "feature")]
        metric = args.metric or tree.metric
        if metric in (None, "precomputed"):
            raise UsageError("tree was fitted on a precomputed dissimilarity; pass --dissimilarity or --metric")
        power = args.minkowski_power
        if metric == "minkowski" and power is None:
            power = (tree.info or {}).get("minkowski_power")
        d = feature_dissimilarity(x, metric, power)
    else:
        raise UsageError("method smi needs --features or --dissimilarity")
    return d, hops


def run_select(args) -> int:
    if args.kmax < 2:
        raise UsageError(f"--kmax must be at least 2, got {args.kmax}")
    tree = read_tree(args.tree)
    if args.method == "smi":
        d, hops = _smi_inputs(args, tree)
        labels, report = get_cluster(tree, "smi", args.kmax, dissimilarity=d, hops=hops,
                                     anchor_k1=args.anchor_k1)
        body = report.to_dict()
        body["params"] = {"kmax": args.kmax, "anchor_k1": args.anchor_k1}
    else:
        labels, report = get_cluster(
            tree, "m3c", args.kmax, resamples=args.resamples,
            subsample_fraction=args.fraction, mc_references=args.mc_refs, seed=args.seed,
            criterion=args.criterion, pac_window=(args.pac_lower, args.pac_upper),
            n_jobs=args.jobs,
        )
        body = report.to_dict()
    body["tree"] = str(args.tree)
    write_labels(args.out_labels, tree.labels, labels)
    Path(args.out_report).write_text(dump_json(body), encoding="utf-8")
    return EXIT_OK


def run_synth(args) -> int:
    ds = synthetic_data(args.k, args.f, args.r, args.n, args.p1, args.p2, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    geo_cols = ["x", "y"] if args.p2 == 2 else [f"g{i + 1}" for i in range(args.p2)]
    write_table(out / "features.csv", ds.ids, [f"f{i + 1}" for i in range(args.p1)], ds.features)
    write_table(out / "points.csv", ds.ids, geo_cols, ds.points)
    write_labels(out / "labels.csv", ds.ids, ds.labels)
    (out / "metadata.json").write_text(dump_json(ds.metadata()), encoding="utf-8")
    return EXIT_OK


def run_plot(args) -> int:
    labels = None
    if args.labels is not None:
        lids, labels = read_labels(args.labels)
    if args.tree is not None:
        tree = read_tree(args.tree)
        if labels is not None:
            labels = labels[align(tree.labels, lids, "label")]
        svg = dendrogram_svg(tree, labels, title=f"merge tree ({tree.linkage})")
    else:
        if labels is None:
            raise UsageError("--labels is required for scatter plots")
        path = args.points or args.features
        ids, cols, values = read_table(path)
        labels = labels[align(ids, lids, "label")]
        if values.shape[1] == 1:
            xy = np.column_stack([np.arange(len(values)), values[:, 0]])
            cols = ["index", cols[0]]
        else:
            xy = values[:, :2]
        title = "geometry domain" if args.points is not None else "feature domain"
        svg = scatter_svg(xy, labels, title=title, xlabel=cols[0], ylabel=cols[1])
    Path(args.out).write_text(svg, encoding="utf-8")
    return EXIT_OK


_COMMANDS = {
    "adjacency": run_adjacency,
    "cluster": run_cluster,
    "select": run_select,
    "synth": run_synth,
    "plot": run_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hcv {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"hcv {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FormatError as exc:
        print(f"hcv {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ValueError as exc:
        print(f"hcv {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
