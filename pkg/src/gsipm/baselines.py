"""Reference distances: ST, GST, regularized Sobolev IPM, tree-Wasserstein,
and the desk-scale exact-transport oracles (W1, Orlicz-Wasserstein).

These exist to pin the main solver down from independent directions: closed
forms (ST, RSIPM), the same Amemiya machinery with a simpler weight (GST),
and exact linear programming at tiny sizes (W1/OW). The transport oracle is
a dense transportation simplex with Bland's rule, so it terminates and is
exact up to float arithmetic; instances are capped small by precondition.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import Infeasible, MismatchedIndex, NotATree
from .graph import EdgeFlow, EdgeProfile, Graph, build_graph
from .nfunc import EdgeGeometry, NFunction, _d2phi_np, _dphi_np, _phi_np, beta_e
from .solver import (
    DEFAULT_OPTIONS,
    AmemiyaResult,
    SolverOptions,
    _power_prefactor_root,
    minimize_amemiya,
    weighted_abs_sum,
)

_RC_EPS = 1e-12       # reduced-cost negativity threshold (Bland entering rule)
_MASS_EPS = 1e-10     # total-mass mismatch allowed before Infeasible
_PHI_CAP = 1e300      # keeps overflowed Phi(c/t) costs out of inf arithmetic


def _check_index(prof: EdgeProfile, flow: EdgeFlow):
    if prof.index is not flow.index:
        raise MismatchedIndex("profile and flow were built from different rooted indexes")


def st_distance(prof: EdgeProfile, flow: EdgeFlow, p: float) -> float:
    """Sobolev transport: (sum_e w_e |hbar(e)|^p)^(1/p)."""
    p = float(p)
    if not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"st_distance needs finite p >= 1, got {p}")
    _check_index(prof, flow)
    if flow.is_empty:
        return 0.0
    if p == 1.0:
        return weighted_abs_sum(prof, flow)
    w = prof.w_node[flow.nodes]
    return float(np.sum(w * np.abs(flow.h) ** p)) ** (1.0 / p)


def gst_distance(prof: EdgeProfile, flow: EdgeFlow, f: NFunction,
                 opts: SolverOptions = DEFAULT_OPTIONS) -> AmemiyaResult:
    """Generalized Sobolev transport: inf_k (1/k)(1 + sum_e w_e Phi(k|hbar|)).

    Power kinds have the exact reduction to st_distance; the linear limit is
    ST_1 via the same summation as gsim, so the three agree bitwise.
    """
    _check_index(prof, flow)
    if flow.is_empty:
        return AmemiyaResult(0.0, None, 0, True)
    if f.kind == "linear":
        return AmemiyaResult(st_distance(prof, flow, 1.0), None, 0, True)
    if f.kind == "power" and not opts.force_optimizer:
        d = _power_prefactor_root(f.p, f.scaled) * st_distance(prof, flow, f.p)
        return AmemiyaResult(d, None, 0, True)

    w = prof.w_node[flow.nodes]
    habs = np.abs(flow.h)
    cache: dict = {}

    def at(k: float):
        got = cache.get(k)
        if got is None:
            alpha = k * habs
            with np.errstate(over="ignore"):
                M = float(np.sum(w * _phi_np(f, alpha)))
                if not math.isfinite(M):
                    got = (math.inf, math.inf, math.inf)
                else:
                    M1 = float(np.sum(w * _dphi_np(f, alpha) * habs))
                    M2 = float(np.sum(w * _d2phi_np(f, alpha) * habs * habs))
                    F = (1.0 + M) / k
                    F1 = M1 / k - (1.0 + M) / (k * k)
                    F2 = M2 / k - 2.0 * M1 / (k * k) + 2.0 * (1.0 + M) / (k ** 3)
                    got = (F, F1, F2)
            cache[k] = got
        return got

    res = minimize_amemiya(lambda k: at(k)[0], lambda k: at(k)[1],
                           lambda k: at(k)[2], opts)
    return AmemiyaResult(res.f_min, res.k_star, res.iterations, res.converged)


def rsipm_distance(prof: EdgeProfile, flow: EdgeFlow, p: float) -> float:
    """Regularized Sobolev IPM with weight 1 + lambda(Lambda(x)).

    Per edge the weight is 1 + lambda(gamma_e) + w_e*t, which is the
    lam_total = 1 case of the beta_e antiderivative.
    """
    p = float(p)
    if not (p > 1.0 and math.isfinite(p)):
        raise ValueError(f"rsipm_distance needs finite p > 1, got {p}")
    _check_index(prof, flow)
    if flow.is_empty:
        return 0.0
    total = 0.0
    for v, h in zip(flow.nodes, np.abs(flow.h)):
        geom = EdgeGeometry(float(prof.w_node[v]), float(prof.lam_gamma_node[v]), 1.0)
        total += beta_e(p, geom) * h ** p
    return total ** (1.0 / p)


def rsipm_sandwich_constants(lambda_G: float, p: float) -> Tuple[float, float]:
    """(c1, c2) with c1*RSIPM <= GSI-M <= c2*RSIPM for the scaled power kind."""
    e = (1.0 - p) / p
    inv = 1.0 / lambda_G
    return max(1.0, inv) ** e, min(1.0, inv) ** e


def random_spanning_tree(g: Graph, seed: int) -> Graph:
    """Spanning tree by randomized depth-first traversal; seed-deterministic."""
    rng = np.random.default_rng(seed)
    n = g.n_nodes
    visited = np.zeros(n, dtype=bool)
    start = int(rng.integers(n))
    visited[start] = True
    stack = [start]
    tree_edges = []
    while stack:
        u = stack.pop()
        js = list(range(g.adj_indptr[u], g.adj_indptr[u + 1]))
        rng.shuffle(js)
        for j in js:
            v = int(g.adj_node[j])
            if not visited[v]:
                visited[v] = True
                tree_edges.append((u, v, float(g.adj_weight[j])))
                stack.append(v)
    nodes = g.coords if g.coords is not None else n
    return build_graph(nodes, tree_edges)


def tree_wasserstein(tree_prof: EdgeProfile, tree_flow: EdgeFlow) -> float:
    """W1 on a tree: sum_e w_e |hbar(e)| (equals ST_1 there)."""
    g = tree_prof.index.graph
    if g.n_edges != g.n_nodes - 1:
        raise NotATree(f"graph has {g.n_edges} edges for {g.n_nodes} nodes")
    _check_index(tree_prof, tree_flow)
    if tree_flow.is_empty:
        return 0.0
    return weighted_abs_sum(tree_prof, tree_flow)


@dataclass(frozen=True)
class TransportPlan:
    coupling: np.ndarray  # (m, n) nonnegative, marginals = (mu, nu)


def w1_oracle(cost: np.ndarray, mu, nu) -> Tuple[float, TransportPlan]:
    """Exact min of <pi, cost> over couplings, by transportation simplex.

    `mu`/`nu` are the mass vectors aligned with the cost rows/columns.
    Entering variable by Bland's rule (first reduced cost below -1e-12 in
    row-major order), leaving by minimum flow on the cycle's minus cells
    (ties to the smallest index), so the pivoting cannot cycle.
    """
    C = np.asarray(cost, dtype=np.float64)
    a = np.asarray(mu, dtype=np.float64).copy()
    b = np.asarray(nu, dtype=np.float64).copy()
    m, n = a.size, b.size
    if C.shape != (m, n):
        raise ValueError(f"cost shape {C.shape} does not match supports ({m},{n})")
    if m > 256 or n > 256:
        raise ValueError(f"w1_oracle caps supports at 256 per side, got {m}x{n}")
    sa, sb = float(np.sum(a)), float(np.sum(b))
    if abs(sa - sb) > _MASS_EPS:
        raise Infeasible(f"total masses differ: {sa!r} vs {sb!r}")
    b *= sa / sb

    # northwest-corner start: exactly m+n-1 basic cells, degenerate zeros kept
    X = np.zeros((m, n))
    basic = np.zeros((m, n), dtype=bool)
    i = j = 0
    for _ in range(m + n - 1):
        t = min(a[i], b[j])
        X[i, j] = t
        basic[i, j] = True
        a[i] -= t
        b[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1

    for _ in range(200 * (m + n) * max(m, n)):
        u, v = _modi_potentials(C, basic, m, n)
        enter = _entering_cell(C, basic, u, v, m, n)
        if enter is None:
            break
        cycle = _basis_cycle(basic, enter, m, n)
        minus = cycle[1::2]
        theta_i = min(range(len(minus)), key=lambda t: (X[minus[t]], minus[t]))
        leave = minus[theta_i]
        theta = X[leave]
        for cell in cycle[0::2]:
            X[cell] += theta
        for cell in minus:
            X[cell] -= theta
        X[leave] = 0.0
        basic[leave] = False
        basic[enter] = True
    else:
        raise RuntimeError("transportation simplex failed to terminate")

    value = float(np.sum(X * C))
    return value, TransportPlan(X)


def _modi_potentials(C, basic, m, n):
    """Solve u_i + v_j = c_ij on the basis tree (u_0 = 0)."""
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    rows_of_col: List[List[int]] = [[] for _ in range(n)]
    cols_of_row: List[List[int]] = [[] for _ in range(m)]
    ii, jj = np.nonzero(basic)
    for i, j in zip(ii, jj):
        cols_of_row[i].append(j)
        rows_of_col[j].append(i)
    u[0] = 0.0
    queue = deque([("r", 0)])
    while queue:
        kind, x = queue.popleft()
        if kind == "r":
            for j in cols_of_row[x]:
                if np.isnan(v[j]):
                    v[j] = C[x, j] - u[x]
                    queue.append(("c", j))
        else:
            for i in rows_of_col[x]:
                if np.isnan(u[i]):
                    u[i] = C[i, x] - v[x]
                    queue.append(("r", i))
    return u, v


def _entering_cell(C, basic, u, v, m, n):
    rc = C - u[:, None] - v[None, :]
    rc[basic] = 0.0
    neg = np.argwhere(rc < -_RC_EPS)
    if neg.size == 0:
        return None
    i, j = neg[0]  # argwhere is row-major: Bland's smallest index
    return int(i), int(j)


def _basis_cycle(basic, enter, m, n):
    """Alternating cycle closed by `enter`: [enter, minus, plus, minus, ...].

    The basis is a spanning tree on the bipartite row/col node graph; the
    unique tree path from enter's row to its column gives the cycle.
    """
    i0, j0 = enter
    # BFS over (kind, index) nodes; edges are basic cells
    prev = {}
    startnode = ("r", i0)
    goal = ("c", j0)
    prev[startnode] = None
    queue = deque([startnode])
    cols_of_row = [np.nonzero(basic[i])[0] for i in range(m)]
    rows_of_col = [np.nonzero(basic[:, j])[0] for j in range(n)]
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        kind, x = node
        if kind == "r":
            for j in cols_of_row[x]:
                nxt = ("c", int(j))
                if nxt not in prev:
                    prev[nxt] = node
                    queue.append(nxt)
        else:
            for i in rows_of_col[x]:
                nxt = ("r", int(i))
                if nxt not in prev:
                    prev[nxt] = node
                    queue.append(nxt)
    # walk back from the column to the row, collecting basic cells
    path_cells = []
    node = goal
    while prev[node] is not None:
        kind, x = node
        pkind, px = prev[node]
        cell = (px, x) if pkind == "r" else (x, px)
        path_cells.append(cell)
        node = prev[node]
    # cells along goal->start; the one touching j0 comes first, so the
    # alternating orientation [enter +, first -, ...] is already correct
    return [enter] + path_cells


def ow_oracle(cost: np.ndarray, mu, nu, f: NFunction,
              return_trace: bool = False):
    """Orlicz-Wasserstein: inf{t > 0 : min_pi sum pi_ij Phi(c_ij/t) <= 1}.

    The inner minimum is an exact transport solve on transformed costs;
    bisection narrows t to relative width 1e-8. The linear kind is plain W1.
    """
    C = np.asarray(cost, dtype=np.float64)
    a = np.asarray(mu, dtype=np.float64)
    b = np.asarray(nu, dtype=np.float64)
    if a.size > 64 or b.size > 64:
        raise ValueError(f"ow_oracle caps supports at 64 per side, got {a.size}x{b.size}")

    w1_val, _ = w1_oracle(C, a, b)
    if f.kind == "linear" or w1_val == 0.0:
        return (w1_val, []) if return_trace else w1_val

    trace: List[Tuple[float, float]] = []

    def feas_value(t: float) -> float:
        with np.errstate(over="ignore"):
            tc = _phi_np(f, C / t)
        np.nan_to_num(tc, copy=False, nan=_PHI_CAP, posinf=_PHI_CAP)
        np.clip(tc, 0.0, _PHI_CAP, out=tc)
        val, _ = w1_oracle(tc, a, b)
        trace.append((t, val))
        return val

    # Phi(s1) = 1 by scalar bisection; t = c_max/s with Phi(s) <= 1 makes
    # every coupling feasible, so the from-below end gives a valid t_hi
    c_max = float(np.max(C))
    s_hi = 1.0
    while float(_phi_np(f, s_hi)) < 1.0:
        s_hi *= 2.0
    s_lo = 0.0
    for _ in range(200):
        mid = 0.5 * (s_lo + s_hi)
        if float(_phi_np(f, mid)) < 1.0:
            s_lo = mid
        else:
            s_hi = mid
    t_hi = c_max / s_lo
    while feas_value(t_hi) > 1.0:
        t_hi *= 2.0

    t_lo = t_hi
    for _ in range(4000):
        t_lo *= 0.5
        if feas_value(t_lo) > 1.0:
            break
    else:
        raise RuntimeError("ow_oracle could not find an infeasible lower scale")

    while (t_hi - t_lo) / t_hi > 1e-8:
        mid = 0.5 * (t_lo + t_hi)
        if feas_value(mid) <= 1.0:
            t_hi = mid
        else:
            t_lo = mid

    return (t_hi, trace) if return_trace else t_hi
