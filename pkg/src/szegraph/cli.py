"""Command-line front end.

Every subcommand reads and writes plain text files under ``--out-dir``.
Exit status is 0 on success, 2 when the partition search did not converge
(artifacts are still written) and 1 on errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

import numpy as np

from . import codec, metrics, partition, pipeline, synth
from .graph import binarize, load_graph, save_graph

EXIT_OK, EXIT_ERROR, EXIT_NONCONVERGED = 0, 1, 2


def _path(args, name):
    return os.path.join(args.out_dir, name)


def _in_path(args, value, default):
    return value if value is not None else _path(args, default)


def _partition_config(args) -> partition.PartitionConfig:
    return partition.PartitionConfig(
        epsilon=args.epsilon,
        initial_classes=args.b,
        max_iterations=args.max_iter,
        rng_seed=args.seed,
        binarize_threshold=args.binarize,
        min_class_size=args.min_class_size,
        threads=args.threads,
    )


def _sze_config(args) -> synth.SZEConfig:
    return synth.SZEConfig(
        _partition_config(args),
        codec.ExpansionSpec(mode=args.mode, seed=args.seed),
        args.d_threshold,
        args.seed,
    )


# --- commands ---------------------------------------------------------------


def cmd_gen(args):
    spec = synth.GroundTruthSpec(args.k, args.s, args.inter)
    g, truth = synth.make_gt(spec, args.seed)
    save_graph(g, _path(args, "graph.txt"))
    partition.save_partition(truth, _path(args, "planted_partition.txt"))
    print(f"wrote n={g.n} graph with {g.edge_count()} edges")
    return EXIT_OK


def cmd_perturb(args):
    g = load_graph(_in_path(args, args.graph, "graph.txt"))
    truth = partition.load_partition(_in_path(args, args.partition, "planted_partition.txt"))
    noise = synth.NoiseSpec(
        args.sparsify,
        args.add_fraction if args.add_fraction is not None else args.add_count,
        args.weight,
        args.seed,
    )
    out = synth.apply_noise(g, truth, noise)
    if args.complete is not None:
        out = synth.complete_inter(out, truth, args.complete)
    save_graph(out, _path(args, args.output))
    intra, inter = synth.edge_counts(out, truth)
    print(f"intra={intra} inter={inter} density={synth.global_density(out)!r}")
    return EXIT_OK


def cmd_partition(args):
    g = load_graph(_in_path(args, args.graph, "graph.txt"))
    res = partition.find_regular_partition(g, _partition_config(args))
    partition.save_partition(res.partition, _path(args, "partition.txt"))
    partition.save_trace(res.trace, _path(args, "trace.csv"))
    last = res.trace[-1]
    print(f"k={res.partition.k} c={res.partition.class_size} irregular={last.irregular_count} converged={res.converged}")
    if not res.converged:
        print(f"not converged: {res.diagnostic}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_reduce(args):
    g = load_graph(_in_path(args, args.graph, "graph.txt"))
    part = partition.load_partition(_in_path(args, args.partition, "partition.txt"))
    statuses = None
    if not args.assume_regular:
        gb = g if g.is_binary else binarize(g, args.binarize)
        statuses = partition.check_all_pairs(gb, part, args.epsilon, args.threads)
    r = codec.reduce(g, part, None, statuses, args.d_threshold, args.epsilon)
    codec.save_reduced(r, _path(args, "reduced.txt"))
    print(f"reduced graph: k={r.k} m={r.m} edges={r.edge_count()}")
    return EXIT_OK


def cmd_expand(args):
    r = codec.load_reduced(_in_path(args, args.reduced, "reduced.txt"))
    spec = codec.ExpansionSpec(args.m, args.mode, args.seed, args.intra_fill)
    h = codec.expand(r, spec)
    save_graph(h, _path(args, "reconstruction.txt"))
    print(f"reconstruction: n={h.n} edges={h.edge_count()}")
    return EXIT_OK


def cmd_metrics(args):
    g = load_graph(_in_path(args, args.graph, "graph.txt"))
    rep = metrics.rel_dev_aggregate(g, seed=args.seed)
    stem = args.name
    with open(_path(args, f"{stem}.json"), "w") as fh:
        fh.write(rep.to_json() + "\n")
    with open(_path(args, f"{stem}.csv"), "w") as fh:
        fh.write(metrics.MetricsReport.csv_header() + "\n" + rep.to_csv_row() + "\n")
    print(rep.to_json())
    return EXIT_OK


def cmd_experiment(args):
    spec = synth.GroundTruthSpec(args.k, args.s, args.inter)
    grid = tuple(round(i / args.levels, 10) for i in range(args.levels))
    seeds = tuple(args.seed + i for i in range(args.seeds))
    cfg = _sze_config(args)
    if args.which == 1:
        rows = synth.experiment_constant_density(spec, grid, seeds, cfg, args.threads)
    elif args.which == 2:
        rows = synth.experiment_sparsify_only(spec, grid, args.weight, seeds, cfg, args.threads)
    else:
        rows = synth.experiment_selective_density(spec, grid, tuple(args.retention), seeds, cfg, args.threads)
    path = _path(args, f"experiment_{args.which}.csv")
    synth.write_experiment_csv(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_pipeline(args):
    cfg = pipeline.PipelineConfig(
        sigma=args.sigma,
        epsilon=args.epsilon,
        b=args.b,
        d_threshold=args.d_threshold,
        binarize_threshold=args.binarize,
        densify=pipeline.parse_densify(args.densify),
        clusters=args.clusters,
        max_iterations=args.max_iter,
        mode=args.mode,
        seed=args.seed,
        threads=args.threads,
    )
    labels = None
    if args.graph is not None:
        data, graph = None, load_graph(args.graph)
        if args.labels is not None:
            labels = partition.load_partition(args.labels).labels()
    elif args.data is not None:
        data, graph = pipeline.load_points_csv(args.data, args.labeled), None
    else:
        data, graph = pipeline.blob_dataset(seed=args.seed), None
    res = pipeline.pipeline_run(cfg, data=data, graph=graph, labels=labels, out_dir=args.out_dir)
    for key, val in res.summary.items():
        print(f"{key}: {val}")
    if res.sze.error:
        print(res.sze.error, file=sys.stderr)
    return res.exit_code


# --- parser -----------------------------------------------------------------


def _global_flags(p, defaults):
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--epsilon", type=float, default=d(0.25))
    p.add_argument("--threads", type=int, default=d(1))
    p.add_argument("--out-dir", default=d("."))
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the
    # subcommand copies use SUPPRESS so they do not clobber earlier values
    top = _global_flags(argparse.ArgumentParser(add_help=False), defaults=True)
    common = _global_flags(argparse.ArgumentParser(add_help=False), defaults=False)

    part = argparse.ArgumentParser(add_help=False)
    part.add_argument("--b", type=int, default=10, help="initial number of classes")
    part.add_argument("--max-iter", type=int, default=20)
    part.add_argument("--binarize", type=float, default=0.5)
    part.add_argument("--min-class-size", type=int, default=8)

    sze = argparse.ArgumentParser(add_help=False)
    sze.add_argument("--d-threshold", type=float, default=0.3)
    sze.add_argument("--mode", choices=codec.MODES, default="constant-weight")

    gt = argparse.ArgumentParser(add_help=False)
    gt.add_argument("--k", type=int, default=10)
    gt.add_argument("--s", type=int, default=20)
    gt.add_argument("--inter", type=int, default=20, help="inter edges per consecutive class pair")

    p = argparse.ArgumentParser(prog="szegraph", description=__doc__.splitlines()[0], parents=[top])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", parents=[common, gt], help="generate a clique-chain ground truth")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("perturb", parents=[common], help="sparsify / add inter edges")
    s.add_argument("--graph")
    s.add_argument("--partition")
    s.add_argument("--sparsify", type=float, default=0.0, help="fraction of intra edges removed")
    grp = s.add_mutually_exclusive_group()
    grp.add_argument("--add-count", type=int, default=0)
    grp.add_argument("--add-fraction", type=float)
    s.add_argument("--weight", type=float, default=1.0)
    s.add_argument("--complete", type=float, metavar="W", help="complete all inter pairs at weight W")
    s.add_argument("--output", default="perturbed.txt")
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("partition", parents=[common, part], help="search for a regular partition")
    s.add_argument("--graph")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("reduce", parents=[common], help="build the reduced graph")
    s.add_argument("--graph")
    s.add_argument("--partition")
    s.add_argument("--d-threshold", type=float, default=0.3)
    s.add_argument("--binarize", type=float, default=0.5)
    s.add_argument("--assume-regular", action="store_true", help="skip the pair check")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("expand", parents=[common], help="expand a reduced graph")
    s.add_argument("--reduced")
    s.add_argument("--m", type=int, help="vertices per class (default: original class size)")
    s.add_argument("--mode", choices=codec.MODES, default="constant-weight")
    s.add_argument("--intra-fill", action="store_true")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("metrics", parents=[common], help="RelDev and spectral report")
    s.add_argument("--graph")
    s.add_argument("--name", default="metrics")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("experiment", parents=[common, part, sze, gt], help="run a synthetic experiment")
    s.add_argument("which", type=int, choices=(1, 2, 3))
    s.add_argument("--levels", type=int, default=10)
    s.add_argument("--seeds", type=int, default=5)
    s.add_argument("--weight", type=float, default=0.2, help="completion weight (experiment 2)")
    s.add_argument("--retention", type=float, nargs="+", default=[0.5, 0.75, 1.0])
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("pipeline", parents=[common, part, sze], help="similarity graph to reconstruction")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--data", help="CSV of points (default: bundled blob dataset)")
    src.add_argument("--graph")
    s.add_argument("--labeled", action="store_true")
    s.add_argument("--labels", help="partition file used as clustering for --graph")
    s.add_argument("--sigma", type=float, default=0.0248)
    s.add_argument("--densify", default="none", help="'none' or 'inter:<w>'")
    s.add_argument("--clusters", type=int, default=10, help="k-means groups when no labels are given")
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", UserWarning)
    os.makedirs(args.out_dir, exist_ok=True)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except Exception as exc:  # every failure maps to exit status 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
