"""Clique-chain ground truth, noise and the partition search."""

import warnings

from szegraph.metrics import rel_dev_aggregate
from szegraph.partition import PartitionConfig, find_regular_partition
from szegraph.synth import GroundTruthSpec, NoiseSpec, apply_noise, edge_counts, make_gt

warnings.simplefilter("ignore", UserWarning)

g, truth = make_gt(GroundTruthSpec(k=10, s=20, inter_edges_per_link=20), seed=0)
print("ground truth:", g, "intra/inter edges:", edge_counts(g, truth))

noisy = apply_noise(g, truth, NoiseSpec(intra_removal_fraction=0.3, inter_addition=500, seed=1))
print("after noise:", edge_counts(noisy, truth))

for graph, name in ((g, "clean"), (noisy, "noisy")):
    rep = rel_dev_aggregate(graph)
    print(f"{name}: mean RelDev {rep.reldev_mean:.4f}, spectral gap {rep.spectral_gap:.4f}")

res = find_regular_partition(g, PartitionConfig(epsilon=0.25))
for row in res.trace:
    print(f"iteration {row.iteration}: k={row.k} irregular={row.irregular_count} |C0|={row.c0_size}")
print("converged:", res.converged, res.diagnostic)
