"""Point clouds to similarity graphs, optional densification, and the full
compress/expand pipeline with its on-disk artifacts."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.spatial.distance import pdist, squareform

from .codec import ExpansionSpec, save_reduced
from .graph import Graph, save_graph
from .partition import PartitionConfig, save_partition, save_trace
from .synth import SZEConfig, SZEResult, complete_inter, global_density, run_sze

__all__ = [
    "PointDataset",
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "load_points_csv",
    "save_points_csv",
    "blob_dataset",
    "similarity_matrix",
    "kmeans_labels",
    "densify_inter_completion",
    "parse_densify",
    "pipeline_run",
]


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message starts with the stage name."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True, eq=False)
class PointDataset:
    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must form an (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must have finite coordinates")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (pts.shape[0],):
                raise ValueError("one label per point is required")
            object.__setattr__(self, "labels", lab)

    def __len__(self):
        return self.points.shape[0]


def load_points_csv(path, labeled=False) -> PointDataset:
    """One point per row; with ``labeled`` the last column is an integer class id."""
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    if labeled:
        lab = arr[:, -1]
        if not np.array_equal(lab, np.round(lab)):
            raise ValueError(f"{path}: label column must hold integers")
        return PointDataset(arr[:, :-1], lab.astype(np.int64))
    return PointDataset(arr)


def save_points_csv(data: PointDataset, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        for i, p in enumerate(data.points):
            row = [repr(float(x)) for x in p]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            out.writerow(row)


def blob_dataset(n=1000, clusters=10, dim=4, spread=0.005, box=0.05, seed=0) -> PointDataset:
    """Gaussian blobs of equal size with centres drawn uniformly in ``[0, box]^dim``.

    The default scale makes a kernel width of about 0.025 produce a dense
    similarity matrix with clearly stronger intra-blob weights.
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0, box, size=(clusters, dim))
    labels = np.repeat(np.arange(clusters), -(-n // clusters))[:n]
    pts = centres[labels] + rng.normal(scale=spread, size=(n, dim))
    return PointDataset(pts, labels)


def similarity_matrix(data, sigma: float) -> Graph:
    """``W_ij = exp(-|x_i - x_j|^2 / sigma^2)`` with a zero diagonal."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    pts = data.points if isinstance(data, PointDataset) else PointDataset(data).points
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    w = squareform(np.exp(-pdist(pts, "sqeuclidean") / sigma**2))
    return Graph(w, copy=False)


def kmeans_labels(points, k: int, seed=0) -> np.ndarray:
    """Seeded k-means++ clustering of ``points`` into ``k`` groups."""
    pts = points.points if isinstance(points, PointDataset) else np.asarray(points, float)
    _, labels = kmeans2(pts, k, minit="++", seed=np.random.default_rng(seed))
    return labels.astype(np.int64)


def densify_inter_completion(g: Graph, clustering, w=0.2) -> Graph:
    """Set every absent pair between different clusters to weight ``w``.

    ``clustering`` is a label array or an ``EquitablePartition``.
    """
    if clustering is None:
        raise ValueError("inter-cluster completion needs a clustering")
    if not 0 < w <= 1:
        raise ValueError("w must lie in (0, 1]")
    return complete_inter(g, clustering, w)


def parse_densify(text):
    """``"none"`` -> ``None``; ``"inter:0.2"`` -> ``0.2``."""
    if text in (None, "", "none"):
        return None
    kind, _, val = text.partition(":")
    if kind != "inter":
        raise ValueError(f"unknown densifier {text!r}; expected 'none' or 'inter:<w>'")
    w = float(val) if val else 0.2
    if not 0 < w <= 1:
        raise ValueError("densify weight must lie in (0, 1]")
    return w


@dataclass(frozen=True)
class PipelineConfig:
    sigma: float = 0.0248
    epsilon: float = 0.25
    b: int = 10
    d_threshold: float = 0.3
    binarize_threshold: float = 0.5
    densify: float | None = None
    clusters: int = 10
    max_iterations: int = 20
    mode: str = "constant-weight"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.densify is not None and not 0 < self.densify <= 1:
            raise ValueError("densify weight must lie in (0, 1]")

    def sze_config(self) -> SZEConfig:
        part = PartitionConfig(
            epsilon=self.epsilon,
            initial_classes=self.b,
            max_iterations=self.max_iterations,
            rng_seed=self.seed,
            binarize_threshold=self.binarize_threshold,
            threads=self.threads,
        )
        return SZEConfig(part, ExpansionSpec(mode=self.mode, seed=self.seed), self.d_threshold, self.seed)


@dataclass
class PipelineResult:
    graph: Graph
    densified: Graph | None
    sze: SZEResult
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.sze.error:
            return 1
        return 0 if self.sze.converged else 2


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def pipeline_run(config: PipelineConfig, data=None, graph=None, labels=None, out_dir=None) -> PipelineResult:
    """Build or take a graph, optionally densify it, compress and expand it.

    Parameters
    ----------
    config : PipelineConfig
    data : PointDataset or path, optional
        Points turned into a similarity graph with ``config.sigma``.
    graph : Graph, optional
        Used as is when no ``data`` is given.
    labels : array_like, optional
        Clustering for the densifier; defaults to the dataset labels, then
        to k-means with ``config.clusters`` groups.
    out_dir : path, optional
        Where to write ``graph.txt``, ``partition.txt``, ``trace.csv``,
        ``reduced.txt``, ``reconstruction.txt``, the two metrics JSON files
        and ``summary.csv``.
    """
    if (data is None) == (graph is None):
        raise PipelineError("input", "give exactly one of data and graph")
    if data is not None:
        if not isinstance(data, PointDataset):
            data = _stage("input", load_points_csv, data)
        g = _stage("similarity", similarity_matrix, data, config.sigma)
        if labels is None:
            labels = data.labels
    else:
        g = graph

    dense = None
    if config.densify is not None:
        if labels is None:
            if data is None:
                raise PipelineError("densify", "a graph input needs explicit labels")
            labels = _stage("clustering", kmeans_labels, data, config.clusters, config.seed)
        dense = _stage("densify", densify_inter_completion, g, labels, config.densify)

    work = dense if dense is not None else g
    res = _stage("sze", run_sze, work, config.sze_config(), strict=False)

    node, storage = res.compression
    summary = {
        "n": work.n,
        "k": res.reduced.k,
        "class_size": res.reduced.m,
        "reduced_edges": res.reduced.edge_count(),
        "converged": res.converged,
        "iterations": len(res.partition.trace),
        "c0_frac": res.c0_frac,
        "density": global_density(work),
        "node_ratio": node,
        "storage_ratio": storage,
        "reldev_input": res.input_report.reldev_mean if res.input_report else float("nan"),
        "reldev_reconstruction": (
            res.reconstruction_report.reldev_mean if res.reconstruction_report else float("nan")
        ),
        "error": res.error or "",
    }
    out = PipelineResult(g, dense, res, summary)
    if out_dir is not None:
        _stage("write", _write_artifacts, out, out_dir)
    return out


def _write_artifacts(out: PipelineResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    p = lambda name: os.path.join(out_dir, name)  # noqa: E731
    res = out.sze
    save_graph(out.graph, p("graph.txt"))
    if out.densified is not None:
        save_graph(out.densified, p("graph_densified.txt"))
    save_partition(res.partition.partition, p("partition.txt"))
    save_trace(res.partition.trace, p("trace.csv"))
    save_reduced(res.reduced, p("reduced.txt"))
    save_graph(res.reconstruction, p("reconstruction.txt"))
    for name, rep in (("input", res.input_report), ("reconstruction", res.reconstruction_report)):
        text = rep.to_json() if rep else json.dumps({"error": res.error}, sort_keys=True, indent=2)
        with open(p(f"metrics_{name}.json"), "w") as fh:
            fh.write(text + "\n")
    with open(p("summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(out.summary))
        w.writerow([repr(v) if isinstance(v, float) else str(v) for v in out.summary.values()])
