"""Random test instances: connected graphs, trees, and measures.

Shared by the property suites (selftest, pytest) and nothing else in the
library path. Everything is driven by explicit seeds so failures replay.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .graph import Graph, Measure, build_graph


def random_tree(seed: int, n_lo: int = 2, n_hi: int = 16,
                w_lo: float = 0.1, w_hi: float = 2.0) -> Graph:
    """Uniform random recursive tree with uniform edge lengths."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        w = float(rng.uniform(w_lo, w_hi))
        edges.append((u, v, w))
    return build_graph(n, edges)


def random_connected_graph(seed: int, n_lo: int = 8, n_hi: int = 64,
                           w_lo: float = 0.1, w_hi: float = 2.0) -> Graph:
    """Random tree plus a random sprinkle of extra edges; always connected."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    edges = []
    used = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, float(rng.uniform(w_lo, w_hi))))
        used.add((u, v))
    n_extra = int(rng.integers(0, n))
    attempts = 0
    while n_extra > 0 and attempts < 50 * n:
        attempts += 1
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in used:
            continue
        used.add(key)
        edges.append((key[0], key[1], float(rng.uniform(w_lo, w_hi))))
        n_extra -= 1
    return build_graph(n, edges)


def random_measure(n_nodes: int, seed: int,
                   max_support: Optional[int] = None) -> Measure:
    """Probability measure with uniformly drawn support and positive masses."""
    rng = np.random.default_rng(seed)
    cap = n_nodes if max_support is None else min(max_support, n_nodes)
    k = int(rng.integers(1, cap + 1))
    nodes = rng.choice(n_nodes, size=k, replace=False)
    masses = rng.uniform(0.05, 1.0, size=k)
    masses /= masses.sum()
    return Measure.from_pairs(zip(nodes.tolist(), masses.tolist()))
