"""Reduce a block-structured graph to its class densities and blow it back up."""

import numpy as np

from szegraph import EquitablePartition, ExpansionSpec, Graph, compression_metrics, expand, reduce
from szegraph.partition import class_densities

rng = np.random.default_rng(0)
k, m = 5, 12
w = np.triu(rng.choice([0.0, 0.4, 0.7, 1.0], size=(k, k)), 1)
w = w + w.T
g = Graph(np.kron(w, np.ones((m, m))))
part = EquitablePartition([np.arange(i * m, (i + 1) * m) for i in range(k)], [], k * m)

r = reduce(g, part, d_threshold=0.3, epsilon=0.1)
print("reduced graph:", r.k, "classes,", r.edge_count(), "edges")
print(np.round(r.densities, 2))

for mode in ("constant-weight", "random-bernoulli", "complete"):
    h = expand(r, ExpansionSpec(mode=mode, seed=1))
    err = np.abs(class_densities(h, part) - r.densities * r.edges).max()
    print(f"{mode:>16}: max block-density error {err:.3f}")

node, storage = compression_metrics(g, r)
print(f"node ratio {node:.3f}, storage ratio {storage:.3f}")
