"""Regular-partition graph summaries and commute-time preservation checks."""

from .codec import ExpansionSpec, ReducedGraph, compression_metrics, expand, key_lemma_feasibility, reduce, t_fold
from .graph import Graph, binarize, load_graph, save_graph
from .metrics import MetricsReport, effective_resistance, rel_dev, rel_dev_aggregate, spectral_gap
from .partition import EquitablePartition, PartitionConfig, find_regular_partition
from .synth import GroundTruthSpec, make_gt, run_sze

__version__ = "0.1.0"
