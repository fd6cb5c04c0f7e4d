"""Fast property suites behind the `selftest` CLI command.

Each suite is a seeded spot check of one invariant family; the full
statistical versions live in the test suite. A suite fails by raising, the
runner prints one line per suite and returns nonzero if anything failed.
"""

from __future__ import annotations

import math
import sys
from typing import Callable, List

import numpy as np

from .baselines import gst_distance, ow_oracle, st_distance, tree_wasserstein, w1_oracle
from .gram import gram_distances, kernel_matrix, psd_regularize
from .graph import edge_flow, edge_profiles, pairwise_distances, root_index
from .nfunc import (EdgeGeometry, beta_e, edge_integral, integral_arrays,
                    parse_phi, phi_value, quad_arrays)
from .solver import SolverOptions, gsim_distance, minimize_amemiya
from .special import ei
from .synth import random_connected_graph, random_measure, random_tree

_SUITES: List[Callable[[], None]] = []


def _suite(fn: Callable[[], None]) -> Callable[[], None]:
    _SUITES.append(fn)
    return fn


def _close(got: float, want: float, rtol: float, what: str) -> None:
    if not abs(got - want) <= rtol * max(1.0, abs(want)):
        raise AssertionError(f"{what}: got {got!r}, want {want!r}")


def _dist(prof, idx, mu, nu, f, **kw):
    return gsim_distance(prof, edge_flow(idx, mu, nu), f,
                         SolverOptions(**kw) if kw else SolverOptions()).distance


@_suite
def young_function_values() -> None:
    _close(phi_value(parse_phi("exp"), 1.0), math.e - 2.0, 1e-15, "phi1(1)")
    _close(phi_value(parse_phi("expsq"), 1.0), math.e - 1.0, 1e-15, "phi2(1)")
    _close(phi_value(parse_phi("ps:2"), 2.0), 1.0, 1e-15, "scaled square at 2")
    geom = EdgeGeometry(1.0, 1.0, 2.0)
    _close(beta_e(2.0, geom), 2.0 * math.log(4.0 / 3.0), 1e-12, "beta p=2")
    _close(edge_integral(parse_phi("ps:2"), geom, 1.0, 1.0),
           0.5 * math.log(4.0 / 3.0), 1e-12, "edge integral ps:2")


@_suite
def exponential_integral_series() -> None:
    for x in (0.1, 1.0, 5.0, 10.0, 30.0):
        acc = 0.0
        term = 1.0
        for k in range(1, 201):
            term *= x / k
            acc += term / k
        want = 0.5772156649015328606 + math.log(x) + acc
        _close(ei(x), want, 1e-12, f"Ei({x})")


@_suite
def quadrature_agreement() -> None:
    rng = np.random.default_rng(3)
    for f in (parse_phi("exp"), parse_phi("expsq"), parse_phi("ps:1.5")):
        for _ in range(25):
            w = rng.uniform(0.1, 2.0, size=4)
            lamg = rng.uniform(0.0, 3.0, size=4)
            lam = float(lamg.sum() + w.sum() + rng.uniform(0.5, 2.0))
            habs = rng.uniform(0.0, 1.0, size=4)
            k = float(rng.uniform(0.1, 2.0))
            got = integral_arrays(f, w, lamg, lam, habs, k)
            ref = quad_arrays(f, w, lamg, lam, habs, k)
            for g, r, name in zip(got, ref, ("A", "dA", "d2A")):
                err = float(np.max(np.abs(g - r) / np.maximum(1.0, np.abs(r))))
                if err > 1e-9:
                    raise AssertionError(f"{f.spec()} {name}: quadrature gap {err}")


@_suite
def minimizer_fixtures() -> None:
    res = minimize_amemiya(lambda k: 1.0 / k + k, lambda k: 1.0 - 1.0 / k ** 2,
                           lambda k: 2.0 / k ** 3)
    _close(res.k_star, 1.0, 1e-8, "argmin of 1/k + k")
    _close(res.f_min, 2.0, 1e-12, "min of 1/k + k")
    res = minimize_amemiya(lambda k: (math.exp(k) - k) / k,
                           lambda k: math.exp(k) * (k - 1.0) / k ** 2)
    _close(res.f_min, math.e - 1.0, 1e-10, "min of (e^k - k)/k")


@_suite
def closed_form_matches_optimizer() -> None:
    for t in range(20):
        g = random_connected_graph(100 + t, n_lo=8, n_hi=32)
        idx = root_index(g, 0)
        prof = edge_profiles(g, idx)
        mu = random_measure(g.n_nodes, 2 * t)
        nu = random_measure(g.n_nodes, 2 * t + 1)
        for p in (1.5, 2.0, 3.0):
            f = parse_phi(f"ps:{p}")
            closed = _dist(prof, idx, mu, nu, f)
            forced = _dist(prof, idx, mu, nu, f, force_optimizer=True)
            _close(forced, closed, 1e-6, f"ps:{p} instance {t}")


@_suite
def transport_reductions() -> None:
    for t in range(20):
        g = random_connected_graph(300 + t)
        idx = root_index(g, int(t % g.n_nodes))
        prof = edge_profiles(g, idx)
        flow = edge_flow(idx, random_measure(g.n_nodes, 3 * t),
                         random_measure(g.n_nodes, 3 * t + 1))
        lin = gsim_distance(prof, flow, parse_phi("linear")).distance
        st1 = st_distance(prof, flow, 1.0)
        gst_lin = gst_distance(prof, flow, parse_phi("linear")).distance
        if not (lin == st1 == gst_lin):
            raise AssertionError(f"linear reduction: {lin} {st1} {gst_lin}")
        for p in (1.5, 2.0, 3.0):
            _close(gst_distance(prof, flow, parse_phi(f"ps:{p}")).distance,
                   st_distance(prof, flow, p), 1e-8, f"gst ps:{p} = st {p}")


@_suite
def sandwich_bounds() -> None:
    for t in range(20):
        g = random_connected_graph(500 + t, n_lo=8, n_hi=32)
        idx = root_index(g, 0)
        prof = edge_profiles(g, idx)
        flow = edge_flow(idx, random_measure(g.n_nodes, 5 * t),
                         random_measure(g.n_nodes, 5 * t + 2))
        for spec in ("linear", "exp", "expsq", "ps:2"):
            f = parse_phi(spec)
            gsim = gsim_distance(prof, flow, f).distance
            gst = gst_distance(prof, flow, f).distance
            if not (0.5 * gst <= gsim <= gst + 1e-9):
                raise AssertionError(f"{spec}: gsim {gsim} outside [{0.5 * gst}, {gst}]")


@_suite
def metric_axioms() -> None:
    for t in range(20):
        g = random_connected_graph(700 + t, n_lo=8, n_hi=24)
        idx = root_index(g, 0)
        prof = edge_profiles(g, idx)
        ms = [random_measure(g.n_nodes, 7 * t + i) for i in range(3)]
        for f in (parse_phi("exp"), parse_phi("ps:2")):
            d01 = _dist(prof, idx, ms[0], ms[1], f)
            d10 = _dist(prof, idx, ms[1], ms[0], f)
            if d01 != d10:
                raise AssertionError(f"symmetry: {d01} != {d10}")
            if _dist(prof, idx, ms[0], ms[0], f) != 0.0:
                raise AssertionError("d(mu, mu) != 0")
            d02 = _dist(prof, idx, ms[0], ms[2], f)
            d12 = _dist(prof, idx, ms[1], ms[2], f)
            if d02 > d01 + d12 + 1e-9:
                raise AssertionError(f"triangle: {d02} > {d01} + {d12}")


@_suite
def tree_oracles() -> None:
    f0 = parse_phi("linear")
    for t in range(10):
        g = random_tree(900 + t, n_lo=3, n_hi=10)
        idx = root_index(g, 0)
        prof = edge_profiles(g, idx)
        mu = random_measure(g.n_nodes, 11 * t)
        nu = random_measure(g.n_nodes, 11 * t + 1)
        flow = edge_flow(idx, mu, nu)
        tw = tree_wasserstein(prof, flow)
        cost = pairwise_distances(g)[np.ix_(mu.nodes, nu.nodes)]
        w1, _ = w1_oracle(cost, mu.masses, nu.masses)
        _close(tw, w1, 1e-8, f"tree W1 tree {t}")
        ow = ow_oracle(cost, mu.masses, nu.masses, f0)
        _close(ow, w1, 1e-8, f"OW(phi0) tree {t}")
        gsim = gsim_distance(prof, flow, f0).distance
        if not (0.5 * w1 - 1e-12 <= gsim <= w1 + 1e-9):
            raise AssertionError(f"tree sandwich: {gsim} vs W1 {w1}")


@_suite
def growth_ordering() -> None:
    for t in range(20):
        g = random_connected_graph(1100 + t, n_lo=8, n_hi=24)
        idx = root_index(g, 0)
        prof = edge_profiles(g, idx)
        flow = edge_flow(idx, random_measure(g.n_nodes, 13 * t),
                         random_measure(g.n_nodes, 13 * t + 1))
        d1 = gsim_distance(prof, flow, parse_phi("exp")).distance
        d2 = gsim_distance(prof, flow, parse_phi("expsq")).distance
        if d1 > d2 + 1e-9:
            raise AssertionError(f"gsim(phi1) {d1} > gsim(phi2) {d2}")


@_suite
def gram_pipeline() -> None:
    g = random_connected_graph(1500, n_lo=20, n_hi=30)
    idx = root_index(g, 0)
    prof = edge_profiles(g, idx)
    ms = [random_measure(g.n_nodes, 17 * i) for i in range(10)]
    f = parse_phi("exp")
    d1 = gram_distances(prof, idx, ms, f, threads=1)
    d4 = gram_distances(prof, idx, ms, f, threads=4)
    if not np.array_equal(d1.entries, d4.entries):
        raise AssertionError("gram entries differ across thread counts")
    if not np.array_equal(d1.entries, d1.entries.T) or np.any(np.diag(d1.entries) != 0.0):
        raise AssertionError("gram matrix not symmetric with zero diagonal")
    K = kernel_matrix(d1, 0.7)
    if not (np.all(K > 0.0) and np.all(K <= 1.0)):
        raise AssertionError("kernel entries outside (0, 1]")
    K1, _ = psd_regularize(K)
    _, eta2 = psd_regularize(K1)
    if eta2 > 1e-7:
        raise AssertionError(f"psd_regularize not idempotent: second eta {eta2}")


def run(out=None) -> int:
    """Run every suite; print one line each; 0 iff all passed."""
    out = out or sys.stdout
    failed = []
    for fn in _SUITES:
        name = fn.__name__.replace("_", "-")
        try:
            fn()
        except Exception as exc:
            failed.append(name)
            print(f"[FAIL] {name}: {exc}", file=out)
        else:
            print(f"[pass] {name}", file=out)
    if failed:
        print(f"{len(failed)} of {len(_SUITES)} property suites failed: "
              f"{', '.join(failed)}", file=out)
    return 1 if failed else 0
