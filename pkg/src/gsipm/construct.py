"""Point-cloud to graph: farthest-point clustering and random edge sampling.

The G_Log/G_Sqrt families: cluster a point set to at most M centroids, then
draw ceil(M ln M) (Log) or ceil(M^1.5) (Sqrt) distinct undirected edges by
rejection sampling, weighted by Euclidean length, and patch connectivity
with uniformly drawn inter-component edges. Everything is deterministic
given the seed.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from .errors import EmptyInput
from .graph import Graph, build_graph


def farthest_point_clustering(points, M: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy max-min selection of at most M centroids.

    Returns (centroid coordinates, per-point assignment). The first centroid
    is drawn from the seed; each next one maximizes distance to the chosen
    set, ties to the smallest point index.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n == 0:
        raise EmptyInput("no points to cluster")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if M >= n:
        return pts.copy(), np.arange(n, dtype=np.int64)

    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))
    chosen = [first]
    diffs = pts - pts[first]
    best_d2 = np.einsum("ij,ij->i", diffs, diffs)
    assign = np.zeros(n, dtype=np.int64)
    while len(chosen) < M:
        nxt = int(np.argmax(best_d2))
        cid = len(chosen)
        chosen.append(nxt)
        diffs = pts - pts[nxt]
        d2 = np.einsum("ij,ij->i", diffs, diffs)
        closer = d2 < best_d2
        best_d2[closer] = d2[closer]
        assign[closer] = cid
    return pts[chosen], assign


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def build_random_graph(centroids, mode: str, seed: int) -> Graph:
    """Sample a connected random geometric graph on the centroids.

    mode "log" draws ceil(M ln M) edges, "sqrt" draws ceil(M^1.5), both
    capped at C(M,2); lengths are Euclidean. Coincident centroid pairs are
    skipped (zero-length edges are invalid).
    """
    pts = np.asarray(centroids, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    M = pts.shape[0]
    if M < 2:
        raise ValueError(f"need at least 2 centroids, got {M}")
    mode = mode.lower()
    if mode == "log":
        target = math.ceil(M * math.log(M))
    elif mode == "sqrt":
        target = math.ceil(M ** 1.5)
    else:
        raise ValueError(f"mode must be 'log' or 'sqrt', got {mode!r}")
    target = min(target, M * (M - 1) // 2)

    rng = np.random.default_rng(seed)
    seen = set()
    edges = []
    uf = _UnionFind(M)
    attempts = 0
    max_attempts = 200 * target + 10000
    while len(edges) < target:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError("edge sampling stalled; centroids may be coincident")
        i = int(rng.integers(M))
        j = int(rng.integers(M))
        if i == j:
            continue
        key = (i, j) if i < j else (j, i)
        if key in seen:
            continue
        d = float(np.linalg.norm(pts[i] - pts[j]))
        if d <= 0.0:
            continue
        seen.add(key)
        edges.append((key[0], key[1], d))
        uf.union(i, j)

    roots = {uf.find(i) for i in range(M)}
    attempts = 0
    while len(roots) > 1:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError("connectivity patching stalled; centroids may be coincident")
        i = int(rng.integers(M))
        j = int(rng.integers(M))
        if i == j or uf.find(i) == uf.find(j):
            continue
        d = float(np.linalg.norm(pts[i] - pts[j]))
        if d <= 0.0:
            continue
        key = (i, j) if i < j else (j, i)
        edges.append((key[0], key[1], d))
        uf.union(i, j)
        roots = {uf.find(i) for i in range(M)}

    return build_graph(pts, edges)
