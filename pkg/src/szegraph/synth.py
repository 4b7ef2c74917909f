"""Planted clique benchmarks, perturbations and the compress/expand experiments.

The ground truth is a chain of ``k`` cliques of size ``s`` where only
consecutive cliques share a few random links. Perturbations remove
intra-cluster edges, add inter-cluster edges between any two classes, or
complete all absent inter-cluster pairs at a constant weight.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import ExpansionSpec, ReducedGraph, compression_metrics, expand, reduce, vertex_map
from .graph import Graph, volume
from .metrics import DisconnectedGraphError, MetricsReport, is_connected, rel_dev_aggregate, sample_pairs
from .partition import EquitablePartition, PartitionConfig, PartitionResult, find_regular_partition

__all__ = [
    "GroundTruthSpec",
    "NoiseSpec",
    "SZEConfig",
    "SZEResult",
    "ExperimentRow",
    "CSV_HEADER",
    "DEFAULT_GRID",
    "make_gt",
    "class_labels",
    "intra_mask",
    "edge_counts",
    "max_intra_pairs",
    "max_inter_pairs",
    "sparsify_intra",
    "add_inter",
    "complete_inter",
    "apply_noise",
    "global_density",
    "planted_density_formula",
    "run_sze",
    "experiment_constant_density",
    "experiment_sparsify_only",
    "experiment_selective_density",
    "write_experiment_csv",
]

DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(10))
DEFAULT_SEEDS = tuple(range(5))
CSV_HEADER = ["experiment", "variant", "level", "seed", "reldev_gt", "reldev_sze", "density", "converged", "c0_frac"]


def _round(x) -> int:
    # half-up, so counts do not depend on banker's rounding
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class GroundTruthSpec:
    k: int = 10
    s: int = 20
    inter_edges_per_link: int = 20

    def __post_init__(self):
        if self.k < 2 or self.s < 2:
            raise ValueError("need k >= 2 classes of size s >= 2")
        if self.inter_edges_per_link < 0:
            raise ValueError("inter_edges_per_link must be non-negative")
        if self.inter_edges_per_link > self.s**2:
            raise ValueError(f"at most s^2 = {self.s**2} edges fit between two classes")

    @property
    def n(self) -> int:
        return self.k * self.s


@dataclass(frozen=True)
class NoiseSpec:
    """Perturbation recipe: remove a fraction of intra edges, add inter edges.

    ``inter_addition`` is an edge count when it is an ``int`` and a fraction
    of the maximum number of inter-cluster pairs when it is a ``float``.
    """

    intra_removal_fraction: float = 0.0
    inter_addition: int | float = 0
    inter_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.intra_removal_fraction <= 1:
            raise ValueError("intra_removal_fraction must lie in [0, 1]")
        if isinstance(self.inter_addition, float) and not 0 <= self.inter_addition <= 1:
            raise ValueError("fractional inter_addition must lie in [0, 1]")
        if isinstance(self.inter_addition, int) and self.inter_addition < 0:
            raise ValueError("inter_addition count must be non-negative")
        if not 0 < self.inter_weight <= 1:
            raise ValueError("inter_weight must lie in (0, 1]")


# --- ground truth -----------------------------------------------------------


def make_gt(spec: GroundTruthSpec | None = None, seed=0) -> tuple[Graph, EquitablePartition]:
    """Clique chain and its planted partition (class ``i`` is ``i*s .. i*s+s-1``)."""
    spec = spec or GroundTruthSpec()
    k, s = spec.k, spec.s
    n = k * s
    w = np.kron(np.eye(k), np.ones((s, s)))
    rng = np.random.default_rng(seed)
    for i in range(k - 1):
        flat = rng.choice(s * s, size=spec.inter_edges_per_link, replace=False)
        a = i * s + flat // s
        b = (i + 1) * s + flat % s
        w[a, b] = w[b, a] = 1.0
    np.fill_diagonal(w, 0.0)
    classes = tuple(np.arange(i * s, (i + 1) * s, dtype=np.int64) for i in range(k))
    part = EquitablePartition(classes, np.empty(0, dtype=np.int64), n)
    g = Graph(w, copy=False)
    if spec.inter_edges_per_link == 0:
        warnings.warn("ground truth without inter edges is disconnected", stacklevel=2)
    return g, part


def class_labels(partition, n=None) -> np.ndarray:
    """Label array from an :class:`EquitablePartition` (``C0`` gets -1) or labels."""
    if isinstance(partition, EquitablePartition):
        return partition.labels()
    labels = np.asarray(partition, dtype=np.int64)
    if n is not None and labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    return labels


def intra_mask(partition, n=None) -> np.ndarray:
    """Upper-triangular mask of pairs inside one class."""
    lab = class_labels(partition, n)
    same = (lab[:, None] == lab[None, :]) & (lab[:, None] >= 0)
    return np.triu(same, 1)


def _inter_mask(partition, n=None):
    lab = class_labels(partition, n)
    diff = (lab[:, None] != lab[None, :]) & (lab[:, None] >= 0) & (lab[None, :] >= 0)
    return np.triu(diff, 1)


def max_intra_pairs(partition, n=None) -> int:
    return int(intra_mask(partition, n).sum())


def max_inter_pairs(partition, n=None) -> int:
    return int(_inter_mask(partition, n).sum())


def edge_counts(g: Graph, partition) -> tuple[int, int]:
    """``(intra, inter)`` numbers of present edges."""
    present = g.weights > 0
    return int((present & intra_mask(partition, g.n)).sum()), int((present & _inter_mask(partition, g.n)).sum())


# --- perturbations ----------------------------------------------------------


def _set_pairs(g, iu, ju, value):
    w = g.weights.copy()
    w[iu, ju] = value
    w[ju, iu] = value
    return Graph(w, copy=False)


def sparsify_intra(g: Graph, partition, fraction: float, seed=0) -> Graph:
    """Remove ``round(fraction * #intra)`` present intra-cluster edges uniformly."""
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    iu, ju = np.nonzero(intra_mask(partition, g.n) & (g.weights > 0))
    q = _round(fraction * iu.size)
    if q == 0:
        return g
    pick = np.random.default_rng(seed).choice(iu.size, size=q, replace=False)
    return _set_pairs(g, iu[pick], ju[pick], 0.0)


def add_inter(g: Graph, partition, count=None, fraction=None, weight=1.0, seed=0) -> Graph:
    """Add absent inter-cluster edges between any two classes.

    Give either ``count`` or ``fraction``; a fraction is taken of the
    maximum number of inter-cluster pairs (present or not).
    """
    if (count is None) == (fraction is None):
        raise ValueError("give exactly one of count and fraction")
    if not 0 < weight <= 1:
        raise ValueError("weight must lie in (0, 1]")
    mask = _inter_mask(partition, g.n)
    if fraction is not None:
        if not 0 <= fraction <= 1:
            raise ValueError("fraction must lie in [0, 1]")
        count = _round(fraction * mask.sum())
    iu, ju = np.nonzero(mask & (g.weights == 0))
    if count > iu.size:
        raise ValueError(f"requested {count} inter edges but only {iu.size} inter pairs are free")
    if count == 0:
        return g
    pick = np.random.default_rng(seed).choice(iu.size, size=count, replace=False)
    return _set_pairs(g, iu[pick], ju[pick], float(weight))


def complete_inter(g: Graph, partition, weight=0.2) -> Graph:
    """Give every absent inter-cluster pair the weight ``weight``."""
    if not 0 < weight <= 1:
        raise ValueError("weight must lie in (0, 1]")
    iu, ju = np.nonzero(_inter_mask(partition, g.n) & (g.weights == 0))
    if iu.size == 0:
        return g
    return _set_pairs(g, iu, ju, float(weight))


def apply_noise(g: Graph, partition, noise: NoiseSpec) -> Graph:
    """Sparsify, then add inter edges, with independent streams from ``noise.seed``."""
    out = sparsify_intra(g, partition, noise.intra_removal_fraction, seed=[noise.seed, 0])
    add = noise.inter_addition
    kw = {"fraction": add} if isinstance(add, float) else {"count": add}
    return add_inter(out, partition, weight=noise.inter_weight, seed=[noise.seed, 1], **kw)


def global_density(g: Graph) -> float:
    """Total weight over the number of vertex pairs."""
    if g.n < 2:
        return 0.0
    return volume(g) / (g.n * (g.n - 1))


def planted_density_formula(x: float, n_in: int, n_out: int) -> float:
    """``(1 - x) #In + x #Out``."""
    return (1 - x) * n_in + x * n_out


# --- compress / expand ------------------------------------------------------


@dataclass(frozen=True)
class SZEConfig:
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    expansion: ExpansionSpec = field(default_factory=ExpansionSpec)
    d_threshold: float = 0.3
    metrics_seed: int = 0
    max_full_pairs: int = 500
    pairs_per_vertex: int = 10

    def with_seed(self, seed) -> "SZEConfig":
        return replace(
            self,
            partition=replace(self.partition, rng_seed=seed),
            expansion=replace(self.expansion, seed=seed),
            metrics_seed=seed,
        )


@dataclass
class SZEResult:
    """Everything produced by one compress/expand round.

    ``error`` names the stage that failed (``"input"`` or
    ``"reconstruction"``) together with the reason; the matching report is
    ``None`` in that case.
    """

    input_report: MetricsReport | None
    reconstruction_report: MetricsReport | None
    reduced: ReducedGraph
    partition: PartitionResult
    reconstruction: Graph
    pairs: np.ndarray
    compression: tuple
    c0_frac: float
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.partition.converged


def run_sze(g: Graph, config: SZEConfig | None = None, strict=True) -> SZEResult:
    """Partition ``g``, reduce, expand at the original class size and compare RelDev.

    Both reports use the same vertex pairs, drawn among vertices outside
    ``C0`` and carried to the reconstruction by the codec's vertex identity.
    A disconnected input is reported and its metrics skipped. A disconnected
    reconstruction raises :class:`DisconnectedGraphError` when ``strict``,
    otherwise it is recorded in ``error``.
    """
    config = config or SZEConfig()
    pres = find_regular_partition(g, config.partition)
    part = pres.partition
    r = reduce(g, part, pres.densities, pres.statuses, config.d_threshold, config.partition.epsilon)
    spec = replace(config.expansion, m=part.class_size)
    h = expand(r, spec)
    vmap = vertex_map(part)
    local = sample_pairs(vmap.size, config.metrics_seed, config.max_full_pairs, config.pairs_per_vertex)
    orig = vmap[local]

    errors = []
    rep_in = rep_out = None
    if is_connected(g):
        rep_in = rel_dev_aggregate(g, orig, seed=config.metrics_seed)
    else:
        errors.append("input: graph is disconnected, metrics skipped")
    try:
        rep_out = rel_dev_aggregate(h, local, seed=config.metrics_seed)
    except DisconnectedGraphError as exc:
        if strict:
            raise DisconnectedGraphError(f"reconstruction: {exc}") from None
        errors.append(f"reconstruction: {exc}")
    return SZEResult(
        rep_in,
        rep_out,
        r,
        pres,
        h,
        orig,
        compression_metrics(g, r),
        part.exceptional.size / g.n,
        "; ".join(errors) or None,
    )


# --- experiments ------------------------------------------------------------


@dataclass
class ExperimentRow:
    experiment: int
    variant: str
    level: float
    seed: int
    reldev_gt: float
    reldev_sze: float
    density: float
    converged: bool
    c0_frac: float
    intra_edges: int = 0
    inter_edges: int = 0
    error: str | None = None

    @property
    def noise_level(self) -> float:
        return self.level

    @property
    def global_density(self) -> float:
        return self.density

    def csv_fields(self) -> list[str]:
        return [
            str(self.experiment),
            self.variant,
            repr(float(self.level)),
            str(self.seed),
            repr(float(self.reldev_gt)),
            repr(float(self.reldev_sze)),
            repr(float(self.density)),
            str(bool(self.converged)).lower(),
            repr(float(self.c0_frac)),
        ]


def _evaluate(experiment, variant, level, seed, graph, truth, config) -> ExperimentRow:
    res = run_sze(graph, config.with_seed(seed), strict=False)
    gt = res.input_report.reldev_mean if res.input_report else math.nan
    sze = res.reconstruction_report.reldev_mean if res.reconstruction_report else math.nan
    intra, inter = edge_counts(graph, truth)
    return ExperimentRow(
        experiment, variant, level, seed, gt, sze, global_density(graph),
        res.converged, res.c0_frac, intra, inter, res.error,
    )


def _run_jobs(jobs, threads):
    """Run ``(key, thunk)`` jobs and return rows ordered by key."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda job: job[1](), jobs))
    else:
        rows = [job[1]() for job in jobs]
    order = sorted(range(len(jobs)), key=lambda i: jobs[i][0])
    return [rows[i] for i in order]


def experiment_constant_density(
    spec: GroundTruthSpec | None = None,
    grid=DEFAULT_GRID,
    seeds=DEFAULT_SEEDS,
    config: SZEConfig | None = None,
    threads=1,
) -> list[ExperimentRow]:
    """Remove ``q`` intra edges and add exactly ``q`` unit inter edges per level."""
    spec = spec or GroundTruthSpec()
    config = config or SZEConfig()

    def job(li, x, seed):
        g, truth = make_gt(spec, seed)
        before = edge_counts(g, truth)[0]
        g = sparsify_intra(g, truth, x, seed=[seed, li, 0])
        q = before - edge_counts(g, truth)[0]
        g = add_inter(g, truth, count=q, seed=[seed, li, 1])
        return _evaluate(1, "constant-density", x, seed, g, truth, config)

    jobs = [((li, seed), lambda li=li, x=x, seed=seed: job(li, x, seed)) for li, x in enumerate(grid) for seed in seeds]
    return _run_jobs(jobs, threads)


def experiment_sparsify_only(
    spec: GroundTruthSpec | None = None,
    grid=DEFAULT_GRID,
    w=0.2,
    seeds=DEFAULT_SEEDS,
    config: SZEConfig | None = None,
    threads=1,
) -> list[ExperimentRow]:
    """Variant ``delete-only`` sparsifies the cliques; ``completion`` then
    gives every absent inter-cluster pair the weight ``w``."""
    spec = spec or GroundTruthSpec()
    config = config or SZEConfig()

    def job(vi, li, x, seed):
        g, truth = make_gt(spec, seed)
        g = sparsify_intra(g, truth, x, seed=[seed, li, 0])
        if vi == 1:
            g = complete_inter(g, truth, w)
        return _evaluate(2, ("delete-only", "completion")[vi], x, seed, g, truth, config)

    jobs = [
        ((vi, li, seed), lambda vi=vi, li=li, x=x, seed=seed: job(vi, li, x, seed))
        for vi in (0, 1)
        for li, x in enumerate(grid)
        for seed in seeds
    ]
    return _run_jobs(jobs, threads)


def experiment_selective_density(
    spec: GroundTruthSpec | None = None,
    grid=DEFAULT_GRID,
    retention=(0.5, 0.75, 1.0),
    seeds=DEFAULT_SEEDS,
    config: SZEConfig | None = None,
    threads=1,
) -> list[ExperimentRow]:
    """Variant ``joint`` removes ``x #In`` intra and adds ``x #Out`` inter edges.

    Variants ``retain-<r>`` keep a fraction ``r`` of ``#In`` and sweep the
    inter fraction alone. The ground truth's own chain links stay in place,
    so a row holds ``D(x) + (k - 1) * inter_edges_per_link`` edges.
    """
    spec = spec or GroundTruthSpec()
    config = config or SZEConfig()
    variants = [("joint", None)] + [(f"retain-{r:g}", r) for r in retention]

    def job(vi, li, x, seed):
        name, keep = variants[vi]
        g, truth = make_gt(spec, seed)
        drop = x if keep is None else 1 - keep
        g = sparsify_intra(g, truth, drop, seed=[seed, li, 0])
        g = add_inter(g, truth, count=_round(x * max_inter_pairs(truth)), seed=[seed, li, 1])
        return _evaluate(3, name, x, seed, g, truth, config)

    jobs = [
        ((vi, li, seed), lambda vi=vi, li=li, x=x, seed=seed: job(vi, li, x, seed))
        for vi in range(len(variants))
        for li, x in enumerate(grid)
        for seed in seeds
    ]
    return _run_jobs(jobs, threads)


def write_experiment_csv(rows, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for row in rows:
            out.writerow(row.csv_fields())
