"""Effective resistance, commute time, spectral gap and relative deviation.

``RelDev(i, j) = |R_ij - (1/d_i + 1/d_j)| / R_ij`` measures how far the
effective resistance is from its purely local degree-based prediction.
A spectral bound caps that gap for the commute time,

    |C_ij / vol(G) - (1/d_i + 1/d_j)| <= 2 / (lambda_2 d_min),

with ``lambda_2`` the second eigenvalue of the normalized Laplacian.
"""

from __future__ import annotations

import json
import warnings
from collections import namedtuple
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator, cg, eigsh

from .graph import Graph, degrees, volume

__all__ = [
    "DisconnectedGraphError",
    "SolverError",
    "MetricsReport",
    "BoundCheck",
    "laplacian",
    "is_connected",
    "is_bipartite",
    "resistance_matrix",
    "effective_resistance",
    "resistances",
    "commute_time",
    "local_prediction",
    "rel_dev",
    "rel_devs",
    "spectral_gap",
    "combinatorial_gap",
    "luxburg_bound_check",
    "sample_pairs",
    "rel_dev_aggregate",
]

DENSE_EIG_LIMIT = 2000
PINV_LIMIT = 500
DIRECT_BATCH_LIMIT = 50_000_000


class DisconnectedGraphError(ValueError):
    """Resistance or spectral quantity requested on a disconnected graph."""


class SolverError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


def laplacian(g: Graph) -> np.ndarray:
    w = g.weights
    return np.diag(w.sum(axis=1)) - w


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    ncomp, _ = csgraph.connected_components(sparse.csr_matrix(g.weights), directed=False)
    return ncomp == 1


def _require_connected(g):
    if not is_connected(g):
        raise DisconnectedGraphError("graph is disconnected: resistance is infinite")


def is_bipartite(g: Graph) -> bool:
    """Two-colour every component by breadth-first search."""
    adj = g.weights > 0
    n = g.n
    color = np.full(n, -1)
    for root in range(n):
        if color[root] >= 0:
            continue
        color[root] = 0
        frontier = np.array([root])
        while frontier.size:
            reached = np.zeros(n, dtype=bool)
            for c in (0, 1):
                rows = frontier[color[frontier] == c]
                if rows.size == 0:
                    continue
                hit = adj[rows].any(axis=0)
                if np.any(hit & (color == c)):
                    return False
                fresh = hit & (color < 0)
                color[fresh] = 1 - c
                reached |= fresh
            frontier = np.flatnonzero(reached)
    return True


# --- resistance -------------------------------------------------------------


def resistance_matrix(g: Graph) -> np.ndarray:
    """All-pairs effective resistance from the Laplacian pseudoinverse."""
    _require_connected(g)
    lp = linalg.pinvh(laplacian(g))
    d = np.diag(lp)
    r = d[:, None] + d[None, :] - 2 * lp
    np.fill_diagonal(r, 0.0)
    return r


class _Grounded:
    """Laplacian with one vertex grounded; solves ``L x = e_i - e_j`` by CG."""

    def __init__(self, g: Graph, rtol=1e-10):
        _require_connected(g)
        self.n = g.n
        self.lap = sparse.csr_matrix(laplacian(g))
        self.rtol = rtol
        diag = self.lap.diagonal()
        self.precond = LinearOperator((g.n, g.n), matvec=lambda x: x / diag, dtype=float)

    def solve(self, i, j):
        b = np.zeros(self.n)
        b[i], b[j] = 1.0, -1.0
        # b is orthogonal to the null space, so CG converges on the singular system
        x, info = cg(self.lap, b, rtol=self.rtol, atol=0.0, maxiter=10 * self.n, M=self.precond)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge for pair ({i}, {j}), info={info}")
        return float(x[i] - x[j])


def _grounded_solve(g: Graph, pairs):
    """Factor the Laplacian with the last vertex grounded once, then solve
    ``L x = e_i - e_j`` for every pair in column batches."""
    n = g.n
    lap = laplacian(g)[: n - 1, : n - 1]
    factor = linalg.cho_factor(lap)
    verts = np.unique(pairs)
    verts = verts[verts < n - 1]
    if verts.size * n <= DIRECT_BATCH_LIMIT:
        rhs = np.zeros((n - 1, verts.size))
        rhs[verts, np.arange(verts.size)] = 1.0
        x = np.zeros((n, verts.size))
        x[: n - 1] = linalg.cho_solve(factor, rhs)
        pos = np.full(n, -1)
        pos[verts] = np.arange(verts.size)
        # column of a grounded vertex is identically zero
        cols = np.zeros((n, 1))
        full = np.hstack([x, cols])
        pos[pos < 0] = verts.size
        a, b = pos[pairs[:, 0]], pos[pairs[:, 1]]
        return full[pairs[:, 0], a] + full[pairs[:, 1], b] - 2 * full[pairs[:, 0], b]
    out = np.empty(len(pairs))
    for lo in range(0, len(pairs), 512):
        chunk = pairs[lo : lo + 512]
        rhs = np.zeros((n, len(chunk)))
        cols = np.arange(len(chunk))
        rhs[chunk[:, 0], cols] += 1.0
        rhs[chunk[:, 1], cols] -= 1.0
        x = np.zeros((n, len(chunk)))
        x[: n - 1] = linalg.cho_solve(factor, rhs[: n - 1])
        out[lo : lo + len(chunk)] = x[chunk[:, 0], cols] - x[chunk[:, 1], cols]
    return out


def effective_resistance(g: Graph, i: int, j: int, method="auto") -> float:
    """Effective resistance between ``i`` and ``j``.

    ``method`` is ``"pinv"`` (dense pseudoinverse), ``"solve"`` (Cholesky
    factor of the grounded Laplacian), ``"cg"`` (conjugate gradient) or
    ``"auto"`` (pinv up to 500 vertices, solve above). ``i == j`` returns 0
    with a warning.
    """
    if i == j:
        warnings.warn("effective resistance of a vertex with itself is 0 by convention", stacklevel=2)
        return 0.0
    return float(resistances(g, [(i, j)], method)[0])


def resistances(g: Graph, pairs, method="auto") -> np.ndarray:
    """Effective resistance for each ``(i, j)`` in ``pairs``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if method == "auto":
        method = "pinv" if g.n <= PINV_LIMIT else "solve"
    if method == "pinv":
        r = resistance_matrix(g)
        return r[pairs[:, 0], pairs[:, 1]]
    if method == "solve":
        _require_connected(g)
        out = _grounded_solve(g, pairs)
        out[pairs[:, 0] == pairs[:, 1]] = 0.0
        return out
    if method == "cg":
        solver = _Grounded(g)
        return np.array([solver.solve(i, j) if i != j else 0.0 for i, j in pairs])
    raise ValueError(f"unknown method {method!r}")


def commute_time(g: Graph, i: int, j: int, method="auto") -> float:
    return volume(g) * effective_resistance(g, i, j, method)


def local_prediction(g: Graph, i: int, j: int) -> float:
    """``1/d_i + 1/d_j``."""
    d = degrees(g)
    if d[i] <= 0 or d[j] <= 0:
        raise ValueError(f"isolated vertex among ({i}, {j})")
    return float(1 / d[i] + 1 / d[j])


def rel_devs(g: Graph, pairs, method="auto") -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    d = degrees(g)
    if np.any(d <= 0):
        raise ValueError("graph has an isolated vertex")
    r = resistances(g, pairs, method)
    pred = 1 / d[pairs[:, 0]] + 1 / d[pairs[:, 1]]
    return np.abs(r - pred) / r


def rel_dev(g: Graph, i: int, j: int, method="auto") -> float:
    if i == j:
        raise ValueError("RelDev needs two distinct vertices")
    return float(rel_devs(g, [(i, j)], method)[0])


# --- spectra ----------------------------------------------------------------


def _second_smallest(mat):
    n = mat.shape[0]
    if n <= DENSE_EIG_LIMIT:
        return float(linalg.eigvalsh(mat, subset_by_index=[1, 1])[0])
    vals = eigsh(sparse.csr_matrix(mat), k=2, sigma=-1e-3, which="LM", tol=1e-8, return_eigenvectors=False)
    return float(np.sort(vals)[1])


def spectral_gap(g: Graph) -> float:
    """Second-smallest eigenvalue of ``I - D^{-1/2} W D^{-1/2}``."""
    if g.n < 2:
        raise ValueError("spectral gap needs at least two vertices")
    _require_connected(g)
    s = 1 / np.sqrt(degrees(g))
    norm = np.eye(g.n) - s[:, None] * g.weights * s[None, :]
    return _second_smallest(norm)


def combinatorial_gap(g: Graph) -> float:
    """Second-smallest eigenvalue of ``D - W`` (algebraic connectivity)."""
    if g.n < 2:
        raise ValueError("spectral gap needs at least two vertices")
    _require_connected(g)
    return _second_smallest(laplacian(g))


BoundCheck = namedtuple("BoundCheck", "holds max_slack_violation bipartite")


def luxburg_bound_check(g: Graph, pairs=None, method="auto") -> BoundCheck:
    """Check ``|C_ij/vol - (1/d_i + 1/d_j)| <= 2/(lambda_2 d_min)`` on ``pairs``.

    ``max_slack_violation`` is the largest ``lhs - rhs`` over the pairs, so
    a non-positive value means the bound holds everywhere. A bipartite
    input triggers a warning; the check is still computed.
    """
    _require_connected(g)
    bip = is_bipartite(g)
    if bip:
        warnings.warn("graph is bipartite; the bound assumes a non-bipartite graph", stacklevel=2)
    if pairs is None:
        pairs = sample_pairs(g.n)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    d = degrees(g)
    rhs = 2 / (spectral_gap(g) * d.min())
    # C_ij / vol(G) is exactly R_ij
    lhs = np.abs(resistances(g, pairs, method) - (1 / d[pairs[:, 0]] + 1 / d[pairs[:, 1]]))
    worst = float(np.max(lhs - rhs)) if lhs.size else -np.inf
    return BoundCheck(worst <= 1e-12 * max(1.0, rhs), worst, bip)


# --- aggregation ------------------------------------------------------------


def sample_pairs(n: int, seed=0, max_full=500, per_vertex=10) -> np.ndarray:
    """All ``i < j`` pairs when ``n <= max_full``, else ``per_vertex * n`` distinct seeded pairs."""
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    if n <= max_full:
        return np.column_stack(np.triu_indices(n, 1)).astype(np.int64)
    total = n * (n - 1) // 2
    size = min(per_vertex * n, total)
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(total, size=size, replace=False))
    # invert the row-major upper-triangle enumeration
    i = n - 2 - np.floor(np.sqrt(-8 * flat + 4 * n * (n - 1) - 7) / 2 - 0.5).astype(np.int64)
    j = flat + i + 1 - n * (n - 1) // 2 + (n - i) * (n - i - 1) // 2
    return np.column_stack([i, j]).astype(np.int64)


@dataclass
class MetricsReport:
    """RelDev summary of one graph plus the quantities entering the bound."""

    reldev_mean: float
    reldev_min: float
    reldev_max: float
    spectral_gap: float
    combinatorial_gap: float
    volume: float
    d_min: float
    bound_rhs: float
    n_pairs_sampled: int
    seed: int

    def __post_init__(self):
        if not self.reldev_min <= self.reldev_mean + 1e-12 <= self.reldev_max + 2e-12:
            raise ValueError("expected reldev_min <= reldev_mean <= reldev_max")
        if self.reldev_min < 0:
            raise ValueError("RelDev values are non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text) -> "MetricsReport":
        return cls(**json.loads(text))

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in fields(cls))

    def to_csv_row(self) -> str:
        return ",".join(repr(getattr(self, f.name)) for f in fields(self))


def rel_dev_aggregate(g: Graph, pairs=None, seed=0, max_full=500, per_vertex=10, method="auto") -> MetricsReport:
    """Mean, min and max RelDev over ``pairs`` (default: :func:`sample_pairs`)."""
    _require_connected(g)
    if pairs is None:
        pairs = sample_pairs(g.n, seed, max_full, per_vertex)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise ValueError("no pairs to evaluate")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ValueError("pairs must join distinct vertices")
    vals = rel_devs(g, pairs, method)
    d = degrees(g)
    lam = spectral_gap(g)
    return MetricsReport(
        reldev_mean=float(vals.mean()),
        reldev_min=float(vals.min()),
        reldev_max=float(vals.max()),
        spectral_gap=lam,
        combinatorial_gap=combinatorial_gap(g),
        volume=volume(g),
        d_min=float(d.min()),
        bound_rhs=float(2 / (lam * d.min())),
        n_pairs_sampled=int(pairs.shape[0]),
        seed=int(seed),
    )
