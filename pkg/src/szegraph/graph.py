"""Dense weighted graphs, subset densities, degrees and text I/O.

A :class:`Graph` wraps a symmetric ``n x n`` weight matrix with entries in
``[0, 1]`` and a zero diagonal. The matrix is stored read-only so a graph can
be shared between threads without copying.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "Graph",
    "GraphFormatError",
    "as_vertex_set",
    "edge_weight_between",
    "edge_density",
    "degree",
    "degrees",
    "min_degree",
    "volume",
    "binarize",
    "load_graph",
    "save_graph",
]

FORMATS = ("edge-list", "dense-matrix")


class GraphFormatError(ValueError):
    """Raised when a graph file cannot be parsed or violates graph invariants."""


class Graph:
    """Undirected weighted graph without self-loops.

    Parameters
    ----------
    weights : array_like, shape (n, n)
        Symmetric matrix of edge weights in [0, 1]; 0 means "no edge".
    copy : bool
        Copy the input (default). The stored array is always read-only.
    """

    __slots__ = ("_w",)

    def __init__(self, weights, copy=True):
        w = np.array(weights, dtype=float, copy=copy)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-loops are not allowed (non-zero diagonal)")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if w.size and (w.min() < 0 or w.max() > 1):
            raise ValueError("weights must lie in [0, 1]")
        w.flags.writeable = False
        self._w = w

    @classmethod
    def from_edges(cls, n, edges, weights=None):
        """Build a graph on ``n`` vertices from ``(i, j)`` pairs."""
        w = np.zeros((n, n))
        edges = list(edges)
        if weights is None:
            weights = [1.0] * len(edges)
        for (i, j), x in zip(edges, weights):
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            w[i, j] = w[j, i] = x
        return cls(w, copy=False)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, n)), copy=False)

    @classmethod
    def complete(cls, n, weight=1.0):
        w = np.full((n, n), float(weight))
        np.fill_diagonal(w, 0.0)
        return cls(w, copy=False)

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def n(self) -> int:
        return self._w.shape[0]

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self._w == 0) | (self._w == 1)))

    def edge_count(self) -> int:
        """Number of vertex pairs carrying non-zero weight."""
        return int(np.count_nonzero(np.triu(self._w, 1)))

    def subgraph(self, vertices) -> "Graph":
        idx = as_vertex_set(vertices, self.n)
        return Graph(self._w[np.ix_(idx, idx)])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self._w, other._w)

    def __hash__(self):
        return hash((self.n, self._w.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count()})"


def as_vertex_set(members, n=None) -> np.ndarray:
    """Return ``members`` as a sorted array of distinct vertex indices.

    Raises ``ValueError`` on duplicates or indices outside ``[0, n)``.
    """
    arr = np.asarray(members, dtype=np.int64).ravel()
    out = np.unique(arr)
    if out.size != arr.size:
        raise ValueError("vertex set contains duplicates")
    if out.size and out[0] < 0:
        raise ValueError("negative vertex index")
    if n is not None and out.size and out[-1] >= n:
        raise ValueError(f"vertex index {out[-1]} out of range for n={n}")
    return out


def _check_pair(g, x, y):
    x = as_vertex_set(x, g.n)
    y = as_vertex_set(y, g.n)
    if x.size == 0 or y.size == 0:
        raise ValueError("vertex sets must be non-empty")
    if np.intersect1d(x, y).size:
        raise ValueError("vertex sets must be disjoint")
    return x, y


def edge_weight_between(g: Graph, x, y) -> float:
    """Sum of weights over all pairs with one end in ``x`` and the other in ``y``."""
    x, y = _check_pair(g, x, y)
    return float(g.weights[np.ix_(x, y)].sum())


def edge_density(g: Graph, x, y) -> float:
    """``e(X, Y) / (|X| |Y|)`` for disjoint non-empty ``x`` and ``y``."""
    x, y = _check_pair(g, x, y)
    return float(g.weights[np.ix_(x, y)].sum()) / (x.size * y.size)


def degrees(g: Graph) -> np.ndarray:
    return g.weights.sum(axis=1)


def degree(g: Graph, v: int) -> float:
    return float(g.weights[v].sum())


def min_degree(g: Graph) -> float:
    return float(degrees(g).min())


def volume(g: Graph) -> float:
    return float(g.weights.sum())


def binarize(g: Graph, threshold: float) -> Graph:
    """Weights ``>= threshold`` become 1, all others 0."""
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    w = (g.weights >= threshold).astype(float)
    np.fill_diagonal(w, 0.0)
    return Graph(w, copy=False)


# --- text formats -----------------------------------------------------------


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any double exactly
    if x == 0 or x == 1:
        return str(int(x))
    return format(float(x), ".17g")


def save_graph(g: Graph, path, format="edge-list"):
    """Write ``g`` as an edge list (``i j w`` per line) or a dense matrix.

    Weights are written with 17 significant digits so :func:`load_graph`
    reproduces them bit for bit. The edge list carries an ``# n <n>`` header
    so isolated trailing vertices survive the round trip.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    w = g.weights
    lines = []
    if format == "edge-list":
        lines.append(f"# n {g.n}")
        iu, ju = np.nonzero(np.triu(w, 1))
        for i, j in zip(iu.tolist(), ju.tolist()):
            lines.append(f"{i} {j} {_fmt(w[i, j])}")
    else:
        lines.append(str(g.n))
        for row in w:
            lines.append(" ".join(_fmt(x) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path, format=None) -> Graph:
    """Read a graph written by :func:`save_graph` (or a hand-written file).

    Edge lists may list each edge once or in both directions; when both are
    present their weights must agree. ``format`` is inferred from the file
    extension when omitted: ``.dense`` or ``.mat`` means dense-matrix,
    anything else edge-list.
    """
    if format is None:
        format = "dense-matrix" if os.fspath(path).endswith((".dense", ".mat")) else "edge-list"
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    with open(path) as fh:
        text = fh.read().splitlines()
    if format == "edge-list":
        return _parse_edge_list(text)
    return _parse_dense(text)


def _parse_edge_list(lines) -> Graph:
    n_decl = None
    entries = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "n":
                n_decl = int(parts[1])
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"line {lineno}: expected 'i j [w]', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: {exc}") from None
        if i < 0 or j < 0:
            raise GraphFormatError(f"line {lineno}: negative vertex index")
        if i == j:
            raise GraphFormatError(f"line {lineno}: self-loop at vertex {i}")
        if not 0 <= w <= 1:
            raise GraphFormatError(f"line {lineno}: weight {w} outside [0, 1]")
        key = (min(i, j), max(i, j))
        if key in entries and entries[key] != w:
            raise GraphFormatError(
                f"line {lineno}: asymmetric weights for edge {key}: {entries[key]} vs {w}"
            )
        entries[key] = w
    n = n_decl
    if n is None:
        n = 1 + max((max(k) for k in entries), default=-1)
    w = np.zeros((n, n))
    for (i, j), x in entries.items():
        if j >= n:
            raise GraphFormatError(f"vertex {j} exceeds declared n={n}")
        w[i, j] = w[j, i] = x
    return Graph(w, copy=False)


def _parse_dense(lines) -> Graph:
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise GraphFormatError("line 1: empty file")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise GraphFormatError(f"line 1: expected vertex count, got {lines[0]!r}") from None
    if len(lines) != n + 1:
        raise GraphFormatError(f"expected {n} matrix rows, found {len(lines) - 1}")
    w = np.zeros((n, n))
    for r, raw in enumerate(lines[1:]):
        try:
            row = [float(t) for t in raw.split()]
        except ValueError as exc:
            raise GraphFormatError(f"line {r + 2}: {exc}") from None
        if len(row) != n:
            raise GraphFormatError(f"line {r + 2}: expected {n} entries, got {len(row)}")
        w[r] = row
    if np.any(np.diag(w) != 0):
        v = int(np.flatnonzero(np.diag(w))[0])
        raise GraphFormatError(f"line {v + 2}: self-loop at vertex {v}")
    if not np.array_equal(w, w.T):
        i, j = np.argwhere(w != w.T)[0]
        raise GraphFormatError(f"line {i + 2}: asymmetric entry ({i}, {j})")
    if w.min(initial=0) < 0 or w.max(initial=0) > 1:
        raise GraphFormatError("weights outside [0, 1]")
    return Graph(w, copy=False)
