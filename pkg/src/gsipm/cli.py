"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
non-convergence. Everything a command prints to stdout is deterministic
given (inputs, seed, threads); wall-clock timings go to the bench report or
stderr only.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import selftest as selftest_mod
from .baselines import ow_oracle, w1_oracle
from .construct import build_random_graph, farthest_point_clustering
from .errors import GsipmError, InvalidSupportNode, NoFiniteBracket, NonConvergence
from .fileio import (format_timing, read_graph, read_matrix, read_measure,
                     read_points, write_graph, write_matrix)
from .gram import benchmark_pairs, gram_distances
from .graph import Graph, edge_flow, edge_profiles, root_index
from .nfunc import NFunction, parse_phi
from .solver import SolverOptions, gsim_distance


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    command: str
    graph: Optional[str] = None
    measures: Optional[List[str]] = None
    phi: Optional[NFunction] = None
    root: str = "0"
    seed: int = 0
    threads: int = 1
    tol: float = 1e-10
    out: Optional[str] = None

    def __post_init__(self):
        if self.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {self.threads}")
        if not (0.0 < self.tol <= 1e-2):
            raise UsageError(f"--tol must lie in (0, 1e-2], got {self.tol}")
        if self.seed < 0:
            raise UsageError(f"--seed must be a nonnegative integer, got {self.seed}")

    @property
    def opts(self) -> SolverOptions:
        return SolverOptions(tol=self.tol)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsipm",
                                 description="Graph-based Sobolev IPM distances")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, phi=True, root=True):
        if phi:
            p.add_argument("--phi", default="linear",
                           help="N-function spec: linear | exp | expsq | p:<q> | ps:<q>")
        if root:
            p.add_argument("--root", default="0",
                           help="root node id, or auto:<seed> for a random root")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("graph-build", help="cluster points and sample a graph")
    p.add_argument("--points", required=True)
    p.add_argument("--m", type=int, required=True, help="number of centroids")
    p.add_argument("--mode", choices=("log", "sqrt"), default="log")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dist", help="distance between two measures")
    p.add_argument("--graph", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    common(p)

    p = sub.add_parser("gram", help="all-pairs distance matrix")
    p.add_argument("--graph", required=True)
    p.add_argument("--measures", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None, help="also write a 17-digit csv")
    p.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto")
    common(p)

    p = sub.add_parser("bench", help="time random pairs from a measure list")
    p.add_argument("--graph", required=True)
    p.add_argument("--measures", nargs="+", required=True)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto")
    common(p)

    p = sub.add_parser("oracle", help="small-scale W1 / Orlicz-Wasserstein")
    p.add_argument("kind", choices=("w1", "ow"))
    p.add_argument("--cost", required=True, help="binary matrix of ground costs")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--phi", default="linear")

    sub.add_parser("selftest", help="run the property suites")
    return ap


def _config_from(ns: argparse.Namespace) -> CliConfig:
    phi = None
    if getattr(ns, "phi", None) is not None:
        try:
            phi = parse_phi(ns.phi)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return CliConfig(command=ns.command,
                     graph=getattr(ns, "graph", None),
                     measures=list(getattr(ns, "measures", []) or []) or None,
                     phi=phi,
                     root=getattr(ns, "root", "0"),
                     seed=getattr(ns, "seed", 0),
                     threads=getattr(ns, "threads", 1),
                     tol=getattr(ns, "tol", 1e-10),
                     out=getattr(ns, "out", None))


def _pick_root(cfg: CliConfig, g: Graph) -> int:
    text = cfg.root
    if text.startswith("auto:"):
        try:
            seed = int(text[5:])
        except ValueError:
            raise UsageError(f"bad --root value {text!r}") from None
        return int(np.random.default_rng(seed).integers(g.n_nodes))
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--root must be a node id or auto:<seed>, got {text!r}") from None


def _indexed(cfg: CliConfig):
    g = read_graph(cfg.graph)
    idx = root_index(g, _pick_root(cfg, g))
    return g, idx, edge_profiles(g, idx)


def _cmd_graph_build(ns) -> int:
    if ns.m < 1:
        raise UsageError(f"--m must be >= 1, got {ns.m}")
    pts = read_points(ns.points)
    centroids, _ = farthest_point_clustering(pts, ns.m, ns.seed)
    g = build_random_graph(centroids, ns.mode, ns.seed)
    write_graph(ns.out, g)
    print(f"nodes={g.n_nodes} edges={g.n_edges}")
    return 0


def _cmd_dist(cfg: CliConfig, ns) -> int:
    _, idx, prof = _indexed(cfg)
    mu = read_measure(ns.mu)
    nu = read_measure(ns.nu)
    res = gsim_distance(prof, edge_flow(idx, mu, nu), cfg.phi, cfg.opts)
    if not res.converged:
        raise NonConvergence(f"minimizer stopped after {res.iterations} "
                             f"evaluations without reaching tol={cfg.tol:g}")
    print(f"{res.distance:.17g}")
    if res.k_star is not None:
        print(f"k_star={res.k_star:.17g} iterations={res.iterations}")
    return 0


def _cmd_gram(cfg: CliConfig, ns) -> int:
    _, idx, prof = _indexed(cfg)
    measures = [read_measure(p) for p in cfg.measures]
    G = gram_distances(prof, idx, measures, cfg.phi, threads=cfg.threads,
                       opts=cfg.opts, backend=ns.backend)
    if G.meta["n_nonconverged"]:
        raise NonConvergence(f"{G.meta['n_nonconverged']} pair(s) stopped on "
                             "the evaluation cap without reaching tolerance")
    write_matrix(cfg.out, G.entries, csv_path=ns.csv)
    print(f"wrote {cfg.out}: n={G.n} pairs={G.n * (G.n - 1) // 2}")
    print(f"backend={G.meta['backend']} seconds={G.meta['seconds']:.3f}",
          file=sys.stderr)
    return 0


def _cmd_bench(cfg: CliConfig, ns) -> int:
    _, idx, prof = _indexed(cfg)
    measures = [read_measure(p) for p in cfg.measures]
    if ns.pairs < 0:
        raise UsageError(f"--pairs must be >= 0, got {ns.pairs}")
    rng = np.random.default_rng(cfg.seed)
    ii = rng.integers(0, len(measures), size=ns.pairs)
    jj = rng.integers(0, len(measures), size=ns.pairs)
    pairs = [(measures[a], measures[b]) for a, b in zip(ii.tolist(), jj.tolist())]
    rep = benchmark_pairs(prof, idx, pairs, cfg.phi, threads=cfg.threads,
                          opts=cfg.opts, backend=ns.backend)
    print(format_timing(rep.n_pairs, rep.seconds))
    return 0


def _cmd_oracle(cfg: CliConfig, ns) -> int:
    cost = read_matrix(ns.cost)
    mu = read_measure(ns.mu)
    nu = read_measure(ns.nu)
    for m in (mu, nu):
        if m.nodes.size and m.nodes[-1] >= cost.shape[0]:
            raise InvalidSupportNode(f"support node {int(m.nodes[-1])} outside "
                                     f"the {cost.shape[0]}-point cost matrix")
    sub = cost[np.ix_(mu.nodes, nu.nodes)]
    if ns.kind == "w1":
        val, _ = w1_oracle(sub, mu.masses, nu.masses)
    else:
        val = ow_oracle(sub, mu.masses, nu.masses, cfg.phi)
    print(f"{val:.17g}")
    return 0


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        cfg = _config_from(ns)
        if ns.command == "graph-build":
            return _cmd_graph_build(ns)
        if ns.command == "dist":
            return _cmd_dist(cfg, ns)
        if ns.command == "gram":
            return _cmd_gram(cfg, ns)
        if ns.command == "bench":
            return _cmd_bench(cfg, ns)
        if ns.command == "oracle":
            return _cmd_oracle(cfg, ns)
        return selftest_mod.run()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (NonConvergence, NoFiniteBracket) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GsipmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
