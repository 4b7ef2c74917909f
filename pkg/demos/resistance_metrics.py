"""Effective resistance, the local 1/d_i + 1/d_j prediction and its spectral bound."""

import numpy as np

from szegraph import Graph
from szegraph.metrics import effective_resistance, local_prediction, luxburg_bound_check, rel_dev_aggregate, spectral_gap

for n in (5, 20, 80):
    g = Graph.complete(n)
    print(f"K_{n}: R = {effective_resistance(g, 0, 1):.5f} (2/n = {2 / n:.5f}), "
          f"prediction {local_prediction(g, 0, 1):.5f}")

rng = np.random.default_rng(3)
for p in (0.05, 0.2, 0.8):
    a = np.triu(rng.random((150, 150)) < p, 1).astype(float)
    g = Graph(a + a.T)
    rep = rel_dev_aggregate(g, seed=0)
    bound = luxburg_bound_check(g)
    print(f"G(150, {p}): mean RelDev {rep.reldev_mean:.4f}, gap {spectral_gap(g):.3f}, "
          f"bound {rep.bound_rhs:.4f}, holds={bound.holds}")
