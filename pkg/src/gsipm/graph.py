"""Graph representation, rooted shortest-path index, and length-measure profiles.

The central object chain is

    Graph -> RootedIndex (Dijkstra tree) -> EdgeProfile (w_e, lambda(gamma_e))
          -> per-measure subtree masses -> EdgeFlow (hbar = mu(gamma_e) - nu(gamma_e)).

Tree edges are identified by their far endpoint (the node farther from the
root), so per-edge arrays are indexed by node id with the root slot unused.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    EmptyInput,
    InvalidMeasure,
    InvalidRoot,
    InvalidSupportNode,
    NonPositiveWeight,
    SelfLoop,
)
from .nfunc import EdgeGeometry

# distances closer than this are considered tied during parent selection
_TIE_EPS = 1e-12

# h entries below this are dropped from flows
FLOW_EPS = 1e-15


@dataclass(frozen=True)
class Graph:
    """Validated undirected connected graph with positive edge lengths."""

    n_nodes: int
    edges: np.ndarray       # (m, 2) int64
    weights: np.ndarray     # (m,) float64
    coords: Optional[np.ndarray] = None  # (n, d) float64 when geometric
    # CSR adjacency over both directions
    adj_indptr: np.ndarray = field(default=None, repr=False)
    adj_node: np.ndarray = field(default=None, repr=False)
    adj_weight: np.ndarray = field(default=None, repr=False)
    adj_edge: np.ndarray = field(default=None, repr=False)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def total_length(self) -> float:
        return float(np.sum(self.weights))


def build_graph(nodes, edges: Iterable[Tuple[int, int, float]]) -> Graph:
    """Validate and index a graph.

    `nodes` is either a node count or an (n, d) coordinate array.
    `edges` yields (u, v, w) triples with 0-based node ids.
    """
    coords = None
    if np.isscalar(nodes):
        n = int(nodes)
    else:
        coords = np.asarray(nodes, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        n = coords.shape[0]
    if n <= 0:
        raise EmptyInput("graph needs at least one node")

    triples = list(edges)
    m = len(triples)
    e_arr = np.zeros((m, 2), dtype=np.int64)
    w_arr = np.zeros(m, dtype=np.float64)
    seen = set()
    for i, (u, v, w) in enumerate(triples):
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) references a node outside [0,{n})")
        if u == v:
            raise SelfLoop(f"self loop at node {u}")
        if not (w > 0.0 and np.isfinite(w)):
            raise NonPositiveWeight(f"edge ({u},{v}) has non-positive length {w}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise DuplicateEdge(f"duplicate undirected edge {key}")
        seen.add(key)
        e_arr[i] = (u, v)
        w_arr[i] = w

    indptr, adj_node, adj_weight, adj_edge = _build_adjacency(n, e_arr, w_arr)

    # connectivity by traversal from node 0
    if n > 1:
        visited = np.zeros(n, dtype=bool)
        stack = [0]
        visited[0] = True
        count = 1
        while stack:
            u = stack.pop()
            for j in range(indptr[u], indptr[u + 1]):
                v = int(adj_node[j])
                if not visited[v]:
                    visited[v] = True
                    count += 1
                    stack.append(v)
        if count != n:
            raise DisconnectedGraph(f"graph has {n} nodes but only {count} reachable from node 0")

    return Graph(n, e_arr, w_arr, coords, indptr, adj_node, adj_weight, adj_edge)


def _build_adjacency(n, e_arr, w_arr):
    m = e_arr.shape[0]
    deg = np.zeros(n + 1, dtype=np.int64)
    for u, v in e_arr:
        deg[u + 1] += 1
        deg[v + 1] += 1
    indptr = np.cumsum(deg)
    adj_node = np.zeros(2 * m, dtype=np.int64)
    adj_weight = np.zeros(2 * m, dtype=np.float64)
    adj_edge = np.zeros(2 * m, dtype=np.int64)
    cursor = indptr[:-1].copy()
    for i in range(m):
        u, v = int(e_arr[i, 0]), int(e_arr[i, 1])
        for a, b in ((u, v), (v, u)):
            c = cursor[a]
            adj_node[c] = b
            adj_weight[c] = w_arr[i]
            adj_edge[c] = i
            cursor[a] = c + 1
    return indptr, adj_node, adj_weight, adj_edge


@dataclass(frozen=True)
class RootedIndex:
    """Shortest-path tree from a root: exact distances plus parent pointers.

    `order` lists nodes by nonincreasing distance, so iterating it visits
    every node before its parent (a valid bottom-up subtree traversal).
    """

    graph: Graph
    root: int
    dist: np.ndarray         # (n,)
    parent: np.ndarray       # (n,) int64, -1 at root
    parent_edge: np.ndarray  # (n,) int64 edge id, -1 at root
    order: np.ndarray        # (n,) int64


def _sssp(g: Graph, src: int):
    """Dijkstra with deterministic tie-breaking and tree-consistent distances.

    Ties within 1e-12 resolve to the smallest predecessor id; distances are
    then re-accumulated along the chosen tree so dist[v] equals
    dist[parent[v]] + w exactly.
    """
    n = g.n_nodes
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    dist[src] = 0.0
    heap = [(0.0, src)]
    done = np.zeros(n, dtype=bool)
    indptr, adj_node, adj_weight, adj_edge = (
        g.adj_indptr, g.adj_node, g.adj_weight, g.adj_edge)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for j in range(indptr[u], indptr[u + 1]):
            v = int(adj_node[j])
            nd = d + adj_weight[j]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                parent_edge[v] = adj_edge[j]
                heapq.heappush(heap, (nd, v))

    # deterministic parents: among predecessors within the tie window of the
    # optimum, take the smallest id (strictly closer to the root, so the
    # pointers stay acyclic)
    for v in range(n):
        if v == src:
            continue
        best = dist[v]
        for j in range(indptr[v], indptr[v + 1]):
            u = int(adj_node[j])
            cand = dist[u] + adj_weight[j]
            if cand <= best + _TIE_EPS and dist[u] < dist[v] and u < parent[v]:
                parent[v] = u
                parent_edge[v] = adj_edge[j]

    # re-accumulate so dist[v] == dist[parent[v]] + w identically
    up = np.argsort(dist, kind="stable")
    for v in up:
        p = parent[v]
        if p >= 0:
            dist[v] = dist[p] + g.weights[parent_edge[v]]
    return dist, parent, parent_edge


def root_index(g: Graph, z0: int) -> RootedIndex:
    z0 = int(z0)
    if not (0 <= z0 < g.n_nodes):
        raise InvalidRoot(f"root {z0} outside [0,{g.n_nodes})")
    dist, parent, parent_edge = _sssp(g, z0)
    # nonincreasing distance, ties by ascending id
    ids = np.arange(g.n_nodes)
    order = np.lexsort((ids, -dist))
    return RootedIndex(g, z0, dist, parent, parent_edge, order.astype(np.int64))


def pairwise_distances(g: Graph, nodes: Optional[Sequence[int]] = None) -> np.ndarray:
    """Exact shortest-path matrix over `nodes` (default: all), symmetric."""
    if nodes is None:
        nodes = np.arange(g.n_nodes)
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size > 2048:
        raise ValueError(f"pairwise_distances is for small instances, got {nodes.size} nodes")
    M = np.zeros((nodes.size, nodes.size))
    for i, u in enumerate(nodes):
        dist, _, _ = _sssp(g, int(u))
        M[i] = dist[nodes]
    # mirror the upper triangle; rows are per-source sums that can differ
    # in the last ulp between the two directions
    iu = np.triu_indices(nodes.size, k=1)
    M[(iu[1], iu[0])] = M[iu]
    np.fill_diagonal(M, 0.0)
    return M


@dataclass(frozen=True)
class EdgeProfile:
    """Per tree edge: w_e and lambda(gamma_e), indexed by far node id."""

    index: RootedIndex
    w_node: np.ndarray          # (n,) parent-edge length, 0 at root
    lam_gamma_node: np.ndarray  # (n,) lambda(gamma_e), 0 at root
    lambda_G: float             # sum of ALL edge lengths, tree and non-tree

    def entry(self, far_node: int) -> EdgeGeometry:
        v = int(far_node)
        if v == self.index.root or not (0 <= v < self.w_node.size):
            raise ValueError(f"node {v} is not the far endpoint of a tree edge")
        return EdgeGeometry(float(self.w_node[v]), float(self.lam_gamma_node[v]),
                            self.lambda_G)


def edge_profiles(g: Graph, idx: RootedIndex) -> EdgeProfile:
    """lambda(gamma_e) for every tree edge by the breakpoint-load sweep.

    Each graph edge f = (a, b) splits at t* = clamp((dist_b + w - dist_a) /
    (2w), 0, 1): the fraction of its length whose shortest path to the root
    leaves through a. Loads accumulate bottom-up into subtree totals;
    lambda(gamma_e) is the total at the far endpoint.
    """
    n = g.n_nodes
    dist = idx.dist
    load = np.zeros(n)
    for i in range(g.n_edges):
        a, b = int(g.edges[i, 0]), int(g.edges[i, 1])
        w = g.weights[i]
        t = (dist[b] + w - dist[a]) / (2.0 * w)
        t = min(1.0, max(0.0, t))
        la = t * w
        load[a] += la
        load[b] += w - la
    acc = load.copy()
    for v in idx.order:
        p = idx.parent[v]
        if p >= 0:
            acc[p] += acc[v]

    w_node = np.zeros(n)
    mask = idx.parent >= 0
    w_node[mask] = g.weights[idx.parent_edge[mask]]
    lam_gamma = np.where(mask, acc, 0.0)
    return EdgeProfile(idx, w_node, lam_gamma, g.total_length())


@dataclass(frozen=True)
class Measure:
    """Sparse probability measure on graph nodes; support sorted by id."""

    nodes: np.ndarray   # (k,) int64, strictly increasing
    masses: np.ndarray  # (k,) float64, positive, summing to 1

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, float]]) -> "Measure":
        """Validate (node, mass) pairs; renormalizes sums within 1e-9 of 1."""
        items = [(int(u), float(x)) for u, x in pairs]
        ids = [u for u, _ in items]
        if len(set(ids)) != len(ids):
            raise InvalidMeasure("duplicate support node ids")
        for u, x in items:
            if u < 0:
                raise InvalidSupportNode(f"negative node id {u}")
            if not (x >= 0.0 and np.isfinite(x)):
                raise InvalidMeasure(f"mass at node {u} is {x}, needs a finite value >= 0")
        total = math.fsum(x for _, x in items)
        if not (1.0 - 1e-9 <= total <= 1.0 + 1e-9):
            raise InvalidMeasure(f"masses sum to {total!r}, not 1 within 1e-9")
        items = [(u, x / total) for u, x in items if x > 0.0]
        if not items:
            raise InvalidMeasure("measure has empty support")
        items.sort()
        nodes = np.array([u for u, _ in items], dtype=np.int64)
        masses = np.array([x for _, x in items])
        return cls(nodes, masses)

    @classmethod
    def dirac(cls, node: int) -> "Measure":
        return cls(np.array([int(node)], dtype=np.int64), np.array([1.0]))


def subtree_masses(idx: RootedIndex, m: Measure) -> Dict[int, float]:
    """mu(gamma_e) per tree edge, keyed by far node; zero entries omitted."""
    n = idx.graph.n_nodes
    if m.nodes.size and (m.nodes[-1] >= n or m.nodes[0] < 0):
        bad = m.nodes[(m.nodes < 0) | (m.nodes >= n)][0]
        raise InvalidSupportNode(f"support node {bad} outside [0,{n})")
    acc = np.zeros(n)
    acc[m.nodes] = m.masses
    for v in idx.order:
        p = idx.parent[v]
        if p >= 0:
            acc[p] += acc[v]
    return {int(v): float(acc[v]) for v in range(n)
            if v != idx.root and acc[v] != 0.0}


@dataclass(frozen=True)
class EdgeFlow:
    """Sparse hbar(e) = mu(gamma_e) - nu(gamma_e) over active tree edges."""

    index: RootedIndex
    nodes: np.ndarray  # (k,) int64 far-node ids, strictly increasing
    h: np.ndarray      # (k,) float64, |h| >= FLOW_EPS

    @property
    def is_empty(self) -> bool:
        return self.nodes.size == 0


def edge_flow(idx: RootedIndex, mu: Measure, nu: Measure) -> EdgeFlow:
    a = subtree_masses(idx, mu)
    b = subtree_masses(idx, nu)
    keys = sorted(set(a) | set(b))
    nodes = []
    h = []
    for v in keys:
        d = a.get(v, 0.0) - b.get(v, 0.0)
        if abs(d) >= FLOW_EPS:
            nodes.append(v)
            h.append(d)
    return EdgeFlow(idx, np.array(nodes, dtype=np.int64), np.array(h))


def graph_digest(g: Graph) -> str:
    """Stable content hash used to tag Gram matrices with their graph."""
    hsh = hashlib.sha256()
    hsh.update(np.int64(g.n_nodes).tobytes())
    hsh.update(np.ascontiguousarray(g.edges).tobytes())
    hsh.update(np.ascontiguousarray(g.weights).tobytes())
    if g.coords is not None:
        hsh.update(np.ascontiguousarray(g.coords).tobytes())
    return hsh.hexdigest()[:16]
