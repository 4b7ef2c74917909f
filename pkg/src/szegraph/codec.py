"""Reduced graphs and their expansion back to full-size graphs.

A regular partition is summarised by the ``k x k`` matrix of class-pair
densities; the reduced graph keeps an edge between two classes when their
pair is regular and denser than ``d_threshold``. Expansion replaces every
class by ``m`` vertices and every reduced edge by a bipartite block whose
density matches the summary.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, _fmt
from .partition import EquitablePartition, class_densities

__all__ = [
    "MODES",
    "ReducedGraph",
    "ExpansionSpec",
    "KeyLemma",
    "reduce",
    "t_fold",
    "expand",
    "vertex_map",
    "key_lemma_feasibility",
    "compression_metrics",
    "save_reduced",
    "load_reduced",
]

MODES = ("constant-weight", "random-bernoulli", "complete")


@dataclass(frozen=True, eq=False)
class ReducedGraph:
    """Class-level summary of a partitioned graph.

    Attributes
    ----------
    k, m : int
        Number of classes and class cardinality.
    densities : ndarray, shape (k, k)
        Symmetric pair densities with zero diagonal.
    edges : ndarray of bool, shape (k, k)
        Regular pairs with density above ``d_threshold``.
    d_threshold, epsilon : float
    internal : ndarray, shape (k,)
        Edge density inside each class. Only used when expanding with
        ``intra_fill=True``.
    """

    k: int
    m: int
    densities: np.ndarray
    edges: np.ndarray
    d_threshold: float
    epsilon: float
    internal: np.ndarray = field(default=None)

    def __post_init__(self):
        dens = np.array(self.densities, dtype=float)
        edges = np.array(self.edges, dtype=bool)
        if dens.shape != (self.k, self.k) or edges.shape != (self.k, self.k):
            raise ValueError("densities and edges must be k x k")
        if not np.array_equal(dens, dens.T) or np.any(np.diag(dens) != 0):
            raise ValueError("densities must be symmetric with zero diagonal")
        if not np.array_equal(edges, edges.T) or edges.diagonal().any():
            raise ValueError("edge mask must be symmetric without loops")
        if np.any(edges & ~(dens > self.d_threshold)):
            raise ValueError("edge present on a pair at or below d_threshold")
        internal = np.zeros(self.k) if self.internal is None else np.asarray(self.internal, float)
        if internal.shape != (self.k,):
            raise ValueError("internal densities must have length k")
        for name, arr in (("densities", dens), ("edges", edges), ("internal", internal)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def edge_count(self) -> int:
        return int(np.triu(self.edges, 1).sum())

    def adjacency(self) -> Graph:
        return Graph(self.edges.astype(float), copy=False)

    def __eq__(self, other):
        if not isinstance(other, ReducedGraph):
            return NotImplemented
        return (
            (self.k, self.m, self.d_threshold, self.epsilon)
            == (other.k, other.m, other.d_threshold, other.epsilon)
            and np.array_equal(self.densities, other.densities)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.internal, other.internal)
        )


@dataclass(frozen=True)
class ExpansionSpec:
    """How to blow a reduced graph back up.

    ``m=None`` means "use the reduced graph's class size".
    """

    m: int | None = None
    mode: str = "constant-weight"
    seed: int = 0
    intra_fill: bool = False

    def __post_init__(self):
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")


def reduce(
    g: Graph,
    partition: EquitablePartition,
    densities=None,
    statuses=None,
    d_threshold: float = 0.3,
    epsilon: float = 0.25,
) -> ReducedGraph:
    """Build the reduced graph of ``partition``.

    Parameters
    ----------
    g : Graph
    partition : EquitablePartition
    densities : ndarray, optional
        Class-pair densities on ``g``; computed when omitted.
    statuses : dict, optional
        ``(r, s) -> PairStatus`` from the regularity check. When omitted
        every pair is treated as regular, which is the right reading for a
        partition known to be regular by construction.
    d_threshold : float
        Must exceed ``epsilon``.
    epsilon : float
    """
    if not d_threshold > epsilon:
        raise ValueError(f"d_threshold ({d_threshold}) must exceed epsilon ({epsilon})")
    if densities is None:
        densities = class_densities(g, partition)
    k = partition.k
    dens = np.asarray(densities, dtype=float)
    regular = np.ones((k, k), dtype=bool)
    if statuses is not None:
        for (r, s), st in statuses.items():
            regular[r, s] = regular[s, r] = st.regular
    edges = regular & (dens > d_threshold)
    np.fill_diagonal(edges, False)

    c = partition.class_size
    internal = np.zeros(k)
    if c > 1:
        w = g.weights
        for i, cls in enumerate(partition.classes):
            internal[i] = w[np.ix_(cls, cls)].sum() / (c * (c - 1))
    return ReducedGraph(k, c, dens, edges, float(d_threshold), float(epsilon), internal)


def t_fold(r: ReducedGraph, t: int) -> Graph:
    """Blow-up with ``t`` independent vertices per class and ``K_{t,t}`` per edge."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    w = np.kron(r.edges.astype(float), np.ones((t, t)))
    return Graph(w, copy=False)


def expand(r: ReducedGraph, spec: ExpansionSpec | None = None) -> Graph:
    """Graph on ``k*m`` vertices; vertex ``i*m + s`` is slot ``s`` of class ``i``.

    Each reduced edge ``(i, j)`` becomes an ``m x m`` block filled according
    to ``spec.mode``. Blocks of non-edges and (unless ``spec.intra_fill``)
    intra-class blocks stay empty. Random blocks draw from a per-pair stream
    seeded by ``(seed, i, j)`` so each block is reproducible on its own.
    """
    spec = spec or ExpansionSpec()
    m = r.m if spec.m is None else spec.m
    k = r.k
    w = np.zeros((k * m, k * m))
    for i, j in zip(*np.nonzero(np.triu(r.edges, 1))):
        if spec.mode == "constant-weight":
            block = np.full((m, m), r.densities[i, j])
        elif spec.mode == "complete":
            block = np.ones((m, m))
        else:
            rng = np.random.default_rng([spec.seed, i, j])
            block = (rng.random((m, m)) < r.densities[i, j]).astype(float)
        w[i * m : (i + 1) * m, j * m : (j + 1) * m] = block
        w[j * m : (j + 1) * m, i * m : (i + 1) * m] = block.T
    if spec.intra_fill:
        for i in range(k):
            sl = slice(i * m, (i + 1) * m)
            if spec.mode == "random-bernoulli":
                rng = np.random.default_rng([spec.seed, i, i])
                block = np.triu((rng.random((m, m)) < r.internal[i]).astype(float), 1)
                block = block + block.T
            elif spec.mode == "complete":
                block = np.full((m, m), float(r.internal[i] > 0))
            else:
                block = np.full((m, m), r.internal[i])
            np.fill_diagonal(block, 0.0)
            w[sl, sl] = block
    return Graph(w, copy=False)


def vertex_map(partition: EquitablePartition, m: int | None = None) -> np.ndarray:
    """Original vertex id of every expanded vertex (slot ``s`` of class ``i``).

    Only defined when the expansion size equals the class size; ``C0`` has
    no image and is left out.
    """
    if m is not None and m != partition.class_size:
        raise ValueError("vertex identity needs m equal to the original class size")
    if partition.k == 0:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(partition.classes)


KeyLemma = namedtuple("KeyLemma", "feasible epsilon0 copy_lower_bound delta")


def key_lemma_feasibility(d, epsilon, max_degree, h, m, t) -> KeyLemma:
    """Embedding conditions for a subgraph ``H`` of the t-fold reduced graph.

    With ``delta = d - eps`` and ``eps0 = delta**D / (2 + D)``, ``H`` (``h``
    vertices, maximum degree ``D``) embeds when ``eps <= eps0`` and
    ``t - 1 <= eps0 * m``; the number of labelled copies then exceeds
    ``(eps0 * m)**h``.

    Returns
    -------
    KeyLemma
        ``(feasible, epsilon0, copy_lower_bound, delta)``; the first three
        unpack like a plain tuple via ``res[:3]``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not d > epsilon:
        raise ValueError(f"d ({d}) must exceed epsilon ({epsilon})")
    if max_degree <= 0:
        raise ValueError("max_degree must be positive")
    if h < 1:
        raise ValueError("h must be >= 1")
    delta = d - epsilon
    eps0 = delta**max_degree / (2 + max_degree)
    feasible = epsilon <= eps0 and t - 1 <= eps0 * m
    return KeyLemma(bool(feasible), eps0, (eps0 * m) ** h, delta)


def compression_metrics(g, r) -> tuple[float, float]:
    """``(node_ratio, storage_ratio)`` of replacing ``g`` by ``r``.

    ``node_ratio = 1 - k/n``. ``storage_ratio`` compares the upper-triangular
    density table plus an ``n``-entry class map against the ``n(n-1)/2``
    pair weights of the original graph. ``g`` and ``r`` may be plain integers
    ``n`` and ``k``.
    """
    n = g if isinstance(g, (int, np.integer)) else g.n
    k = r if isinstance(r, (int, np.integer)) else r.k
    if n < 2:
        raise ValueError("need at least two vertices")
    node = 1 - k / n
    storage = 1 - (k * (k - 1) / 2 + n) / (n * (n - 1) / 2)
    return node, storage


# --- files ------------------------------------------------------------------


def save_reduced(r: ReducedGraph, path):
    """Header ``k m epsilon d_threshold``, k density rows, k mask rows.

    A trailing ``internal ...`` line stores the intra-class densities.
    """
    lines = [f"{r.k} {r.m} {_fmt(r.epsilon)} {_fmt(r.d_threshold)}"]
    lines += [" ".join(_fmt(x) for x in row) for row in r.densities]
    lines += [" ".join("1" if x else "0" for x in row) for row in r.edges]
    lines.append("internal " + " ".join(_fmt(x) for x in r.internal))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_reduced(path) -> ReducedGraph:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: header must be 'k m epsilon d_threshold'")
    k, m = int(head[0]), int(head[1])
    eps, dt = float(head[2]), float(head[3])
    if len(lines) < 1 + 2 * k:
        raise ValueError(f"{path}: expected {k} density rows and {k} mask rows")
    dens = np.array([[float(t) for t in ln.split()] for ln in lines[1 : 1 + k]]).reshape(k, k)
    mask = np.array([[int(t) for t in ln.split()] for ln in lines[1 + k : 1 + 2 * k]]).reshape(k, k)
    internal = None
    rest = lines[1 + 2 * k :]
    if rest and rest[0].startswith("internal"):
        internal = [float(t) for t in rest[0].split()[1:]]
    return ReducedGraph(k, m, dens, mask.astype(bool), dt, eps, internal)
