"""Acceptance gate: one test per shipped guarantee.

Run with ``pytest -v tests/test_acceptance.py`` to get one pass/fail line
per criterion. Tolerances are part of the contract and are pinned here,
not imported from anywhere tunable. Instance generators are seeded, so a
failure replays exactly.
"""

import math
import time

import numpy as np
import pytest

import oracles
from gsipm.baselines import gst_distance, ow_oracle, st_distance, tree_wasserstein, w1_oracle
from gsipm.construct import build_random_graph
from gsipm.errors import Overflow
from gsipm.gram import (gram_distances, benchmark_pairs, kernel_matrix,
                        min_eigen_estimate, psd_regularize, quantile_bandwidths)
from gsipm.graph import edge_flow, edge_profiles, pairwise_distances, root_index
from gsipm.nfunc import (EdgeGeometry, beta_e, edge_integral, edge_integral_d2k,
                         edge_integral_dk, parse_phi, phi_value)
from gsipm.solver import SolverOptions, gsim_distance
from gsipm.special import ei
from gsipm.synth import random_connected_graph, random_measure, random_tree

PHI0 = parse_phi("linear")
PHI1 = parse_phi("exp")
PHI2 = parse_phi("expsq")
SANDWICH_PHIS = [PHI0, PHI1, PHI2, parse_phi("ps:2")]
POWERS = (1.5, 2.0, 3.0)


@pytest.fixture(scope="module")
def instances():
    """200 random connected graphs (8..64 nodes, weights in [0.1, 2]) with a
    sparse measure pair each; shared across the criteria that call for the
    same instance set."""
    out = []
    for seed in range(200):
        g = random_connected_graph(seed, n_lo=8, n_hi=64, w_lo=0.1, w_hi=2.0)
        idx = root_index(g, seed % g.n_nodes)
        prof = edge_profiles(g, idx)
        mu = random_measure(g.n_nodes, 10_000 + seed, max_support=6)
        nu = random_measure(g.n_nodes, 20_000 + seed, max_support=6)
        out.append((prof, edge_flow(idx, mu, nu)))
    return out


def test_criterion_1_closed_form_matches_forced_optimizer(instances):
    forced = SolverOptions(force_optimizer=True)
    t0 = time.perf_counter()
    n_checked = 0
    for prof, flow in instances:
        for p in POWERS:
            f = parse_phi(f"ps:{p:g}")
            a = gsim_distance(prof, flow, f).distance
            b = gsim_distance(prof, flow, f, forced).distance
            assert math.isclose(a, b, rel_tol=1e-6, abs_tol=1e-12), (p, a, b)
            n_checked += 1
    elapsed = time.perf_counter() - t0
    assert n_checked == 600
    assert elapsed < 30.0, f"600 closed-vs-forced solves took {elapsed:.2f}s"


def test_criterion_2_limit_case_identities(instances):
    for prof, flow in instances:
        a = gsim_distance(prof, flow, PHI0).distance
        b = gst_distance(prof, flow, PHI0).distance
        c = st_distance(prof, flow, 1.0)
        assert a == b == c
        for p in POWERS:
            g_val = gst_distance(prof, flow, parse_phi(f"ps:{p:g}")).distance
            s_val = st_distance(prof, flow, p)
            assert math.isclose(g_val, s_val, rel_tol=1e-8, abs_tol=1e-12), (p, g_val, s_val)


def test_criterion_3_gst_and_st_sandwich_bounds(instances):
    for prof, flow in instances:
        for f in SANDWICH_PHIS:
            gst_v = gst_distance(prof, flow, f).distance
            gs_v = gsim_distance(prof, flow, f).distance
            assert 0.5 * gst_v <= gs_v <= gst_v + 1e-9, (f.spec(), gst_v, gs_v)
        for p in POWERS:
            st_v = st_distance(prof, flow, p)
            gs_v = gsim_distance(prof, flow, parse_phi(f"ps:{p:g}")).distance
            assert 0.5 * st_v <= gs_v <= st_v + 1e-9, (p, st_v, gs_v)


def test_criterion_4_tree_ow_w1_agreement():
    for seed in range(100):
        t = random_tree(seed, n_lo=2, n_hi=16)
        idx = root_index(t, 0)
        prof = edge_profiles(t, idx)
        mu = random_measure(t.n_nodes, 31_000 + seed)
        nu = random_measure(t.n_nodes, 32_000 + seed)
        flow = edge_flow(idx, mu, nu)
        D = pairwise_distances(t)
        sub = D[np.ix_(mu.nodes, nu.nodes)]
        w1, _ = w1_oracle(sub, mu.masses, nu.masses)
        gs = gsim_distance(prof, flow, PHI0).distance
        assert 0.5 * w1 <= gs <= w1 + 1e-9, (seed, w1, gs)
        tw = tree_wasserstein(prof, flow)
        ow = ow_oracle(sub, mu.masses, nu.masses, PHI0)
        assert math.isclose(ow, w1, rel_tol=1e-8, abs_tol=1e-12)
        assert math.isclose(tw, w1, rel_tol=1e-8, abs_tol=1e-12)
    violations = []
    for seed in range(100):
        t = random_tree(40_000 + seed, n_lo=2, n_hi=8)
        idx = root_index(t, 0)
        prof = edge_profiles(t, idx)
        mu = random_measure(t.n_nodes, 41_000 + seed)
        nu = random_measure(t.n_nodes, 42_000 + seed)
        flow = edge_flow(idx, mu, nu)
        sub = pairwise_distances(t)[np.ix_(mu.nodes, nu.nodes)]
        ow = ow_oracle(sub, mu.masses, nu.masses, PHI1)
        gs = gsim_distance(prof, flow, PHI1).distance
        if not (0.5 * ow <= gs <= ow + 1e-6):
            violations.append((seed, ow, gs))
    # The linear-kind OW sandwich does not extend to the exp kind: on these
    # trees the ratio gsim/ow spans ~0.14 to ~3.7 (both sides were refereed
    # against an independent linprog bisection and mpmath quadrature), so no
    # implementation of the two quantities can satisfy this band.
    assert not violations, (
        f"exp-kind OW sandwich fails on {len(violations)}/100 trees, e.g. "
        + ", ".join(f"seed {s}: ow={o:.6f} gsim={g:.6f} ratio={g / o:.3f}"
                    for s, o, g in violations[:3]))


def test_criterion_5_metric_axioms():
    for f in SANDWICH_PHIS:
        for i in range(100):
            g = random_connected_graph(70_000 + i, n_lo=5, n_hi=24)
            idx = root_index(g, i % g.n_nodes)
            prof = edge_profiles(g, idx)
            mu = random_measure(g.n_nodes, 71_000 + i, max_support=5)
            nu = random_measure(g.n_nodes, 72_000 + i, max_support=5)
            rho = random_measure(g.n_nodes, 73_000 + i, max_support=5)
            d_ab = gsim_distance(prof, edge_flow(idx, mu, nu), f).distance
            d_ba = gsim_distance(prof, edge_flow(idx, nu, mu), f).distance
            assert d_ab == d_ba
            assert gsim_distance(prof, edge_flow(idx, mu, mu), f).distance == 0.0
            d_ac = gsim_distance(prof, edge_flow(idx, mu, rho), f).distance
            d_bc = gsim_distance(prof, edge_flow(idx, nu, rho), f).distance
            assert d_ac <= d_ab + d_bc + 1e-9, (f.spec(), i, d_ac, d_ab, d_bc)
            distinct = (mu.nodes.shape != nu.nodes.shape
                        or not np.array_equal(mu.nodes, nu.nodes)
                        or not np.array_equal(mu.masses, nu.masses))
            if distinct:
                assert d_ab > 1e-12, (f.spec(), i, d_ab)


def _draw_geometry(rng):
    w = float(rng.uniform(0.1, 2.0))
    lam_gamma = float(rng.uniform(0.0, 3.0))
    lam_total = lam_gamma + w + float(rng.uniform(0.0, 3.0))
    return EdgeGeometry(w, lam_gamma, lam_total)


def _draw_case(rng, f, ratio_cap):
    geom = _draw_geometry(rng)
    habs = float(rng.uniform(0.05, 1.0))
    floor = 1.0 + geom.lam_gamma / geom.lam_total
    k = float(rng.uniform(0.01, ratio_cap)) * floor / habs
    return geom, habs, k


def test_criterion_6_special_function_and_integral_accuracy():
    # exponential integral against a 200-term high-precision series
    for x in (0.1, 1.0, 5.0, 10.0, 30.0):
        assert math.isclose(ei(x), oracles.ei_series(x), rel_tol=1e-12)

    # exp / expsq closed forms against adaptive quadrature; draws whose
    # closed form exceeds float range carry no information and are skipped
    for f, floor_count in ((PHI1, 500), (PHI2, 350)):
        rng = np.random.default_rng(61)
        n_compared = 0
        for _ in range(500):
            geom, habs, k = _draw_case(rng, f, 30.0)
            try:
                got = edge_integral(f, geom, habs, k)
            except Overflow:
                continue
            want = oracles.edge_integral_quad(f.kind, f.p, f.scaled, geom.w,
                                              geom.lam_gamma, geom.lam_total,
                                              habs, k)
            assert math.isclose(got, want, rel_tol=1e-9), (f.kind, geom, habs, k)
            n_compared += 1
        assert n_compared >= floor_count

    # analytic derivatives against central differences
    for spec in ("exp", "expsq", "ps:1.5", "ps:3", "p:2.5"):
        f = parse_phi(spec)
        rng = np.random.default_rng(62)
        for _ in range(100):
            geom, habs, k = _draw_case(rng, f, 5.0)
            h1, h2 = 1e-5 * k, 5e-5 * k
            val = lambda kk: edge_integral(f, geom, habs, kk)
            dk = edge_integral_dk(f, geom, habs, k)
            fd1 = (val(k + h1) - val(k - h1)) / (2.0 * h1)
            assert math.isclose(dk, fd1, rel_tol=1e-6, abs_tol=1e-12), (spec, geom, habs, k)
            d2k = edge_integral_d2k(f, geom, habs, k)
            fd2 = (val(k + h2) - 2.0 * val(k) + val(k - h2)) / (h2 * h2)
            assert math.isclose(d2k, fd2, rel_tol=1e-5, abs_tol=1e-10), (spec, geom, habs, k)

    # beta_e against adaptive quadrature, including the p ~ 2 seam
    rng = np.random.default_rng(63)
    for p in (1.2, 1.5, 2.0 - 1e-6, 2.0, 2.0 + 1e-6, 3.0, 4.0):
        for _ in range(25):
            geom = _draw_geometry(rng)
            want = oracles.adaptive_simpson(
                lambda t: ((geom.w / geom.lam_total) * t + 1.0
                           + geom.lam_gamma / geom.lam_total) ** (1.0 - p) * geom.w,
                0.0, 1.0, 1e-14)
            assert math.isclose(beta_e(p, geom), want, rel_tol=1e-10), (p, geom)


def test_criterion_7_monotonicity_in_phi(instances):
    with np.errstate(over="ignore"):
        for t in np.linspace(0.0, 50.0, 2001):
            assert phi_value(PHI1, t) <= phi_value(PHI2, t)
    for prof, flow in instances:
        d1 = gsim_distance(prof, flow, PHI1).distance
        d2 = gsim_distance(prof, flow, PHI2).distance
        assert d1 <= d2 + 1e-9, (d1, d2)


def test_criterion_8_desk_scale_throughput():
    rng = np.random.default_rng(8)
    pts = rng.uniform(0.0, 10.0, size=(1000, 2))
    g = build_random_graph(pts, "log", 8)
    assert g.n_nodes == 1000
    assert 6908 <= g.n_edges <= 7200  # ceil(1000 ln 1000) plus connectivity patching
    idx = root_index(g, 0)
    prof = edge_profiles(g, idx)
    pool = [random_measure(1000, 90_000 + i, max_support=100) for i in range(200)]
    ii = rng.integers(0, len(pool), size=10_000)
    jj = rng.integers(0, len(pool), size=10_000)
    pairs = [(pool[a], pool[b]) for a, b in zip(ii.tolist(), jj.tolist())]

    # warm up compiled kernels outside the timed region
    benchmark_pairs(prof, idx, pairs[:4], PHI1, threads=4)
    rep = benchmark_pairs(prof, idx, pairs, PHI1, threads=4)
    assert rep.n_pairs == 10_000
    assert rep.seconds <= 60.0, f"exp kind: 10k pairs took {rep.seconds:.2f}s"

    for f in (parse_phi("ps:2"), PHI0):
        benchmark_pairs(prof, idx, pairs[:4], f, threads=4)
        rep = benchmark_pairs(prof, idx, pairs, f, threads=4)
        assert rep.seconds <= 5.0, f"{f.spec()}: 10k pairs took {rep.seconds:.2f}s"


def test_criterion_9_gram_pipeline():
    g = random_connected_graph(9, n_lo=48, n_hi=64)
    idx = root_index(g, 0)
    prof = edge_profiles(g, idx)
    measures = [random_measure(g.n_nodes, 95_000 + i, max_support=12) for i in range(50)]
    g1 = gram_distances(prof, idx, measures, PHI1, threads=1)
    g8 = gram_distances(prof, idx, measures, PHI1, threads=8)
    assert np.array_equal(g1.entries, g8.entries), "thread count changed the Gram matrix"
    assert np.array_equal(g1.entries, g1.entries.T)
    off_diag = g1.entries[np.triu_indices(50, k=1)]
    t_tilde = quantile_bandwidths(off_diag, [50.0])[0]
    K = kernel_matrix(g1, t_tilde)
    assert np.all(K > 0.0) and np.all(K <= 1.0)
    K2, eta = psd_regularize(K)
    assert eta >= 0.0
    assert min_eigen_estimate(K2) >= -1e-8
