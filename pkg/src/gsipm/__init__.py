"""Sobolev-type transport distances for measures on a shared graph.

The pipeline: build a graph, fix a root, index it, derive per-edge
profiles, then compare probability measures through edge flows. The main
distance (gsim_distance) admits closed forms for power-type N-functions and
a one-dimensional minimization for the exponential families; baselines and
a batch Gram/benchmark layer sit alongside.
"""

from .backend import active_backend
from .baselines import (gst_distance, ow_oracle, random_spanning_tree,
                        rsipm_distance, rsipm_sandwich_constants, st_distance,
                        tree_wasserstein, w1_oracle)
from .construct import build_random_graph, farthest_point_clustering
from .errors import GsipmError
from .gram import (GramMatrix, TimingReport, benchmark_pairs, gram_distances,
                   kernel_matrix, min_eigen_estimate, psd_regularize,
                   quantile_bandwidths)
from .graph import (EdgeFlow, EdgeProfile, Graph, Measure, RootedIndex,
                    build_graph, edge_flow, edge_profiles, graph_digest,
                    pairwise_distances, root_index, subtree_masses)
from .nfunc import (EdgeGeometry, NFunction, beta_e, edge_integral,
                    edge_integral_d2k, edge_integral_dk, parse_phi, phi_value)
from .solver import (AmemiyaResult, SolverOptions, gsim_distance,
                     minimize_amemiya)
from .special import ei, ei_array

__version__ = "0.1.0"

__all__ = [
    "AmemiyaResult", "EdgeFlow", "EdgeGeometry", "EdgeProfile", "GramMatrix",
    "Graph", "GsipmError", "Measure", "NFunction", "RootedIndex",
    "SolverOptions", "TimingReport", "active_backend", "benchmark_pairs",
    "beta_e", "build_graph", "build_random_graph", "edge_flow",
    "edge_integral", "edge_integral_d2k", "edge_integral_dk", "edge_profiles", "ei", "ei_array",
    "farthest_point_clustering", "gram_distances", "graph_digest",
    "gsim_distance", "gst_distance", "kernel_matrix", "min_eigen_estimate", "minimize_amemiya",
    "ow_oracle", "pairwise_distances", "parse_phi", "phi_value",
    "psd_regularize", "quantile_bandwidths", "random_spanning_tree",
    "root_index", "rsipm_distance", "rsipm_sandwich_constants",
    "st_distance", "subtree_masses", "tree_wasserstein", "w1_oracle",
]
