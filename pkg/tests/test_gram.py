import math

import numpy as np
import pytest

import oracles
from gsipm import (
    Measure,
    NFunction,
    SolverOptions,
    benchmark_pairs,
    edge_flow,
    edge_profiles,
    gram_distances,
    gsim_distance,
    kernel_matrix,
    min_eigen_estimate,
    psd_regularize,
    quantile_bandwidths,
    root_index,
)
from gsipm.errors import AllZeroSample, EmptyInput, EmptySample, MismatchedIndex
from gsipm.synth import random_connected_graph, random_measure

PHIS = [NFunction.limit_linear(), NFunction.power(2.0, scaled=True),
        NFunction.exp_linear(), NFunction.exp_square()]


def _instance(seed, n_measures, n_lo=10, n_hi=40):
    g = random_connected_graph(seed, n_lo=n_lo, n_hi=n_hi)
    idx = root_index(g, 0)
    prof = edge_profiles(g, idx)
    ms = [random_measure(g.n_nodes, seed * 100 + i) for i in range(n_measures)]
    return idx, prof, ms


# -- gram matrices ----------------------------------------------------------------

@pytest.mark.parametrize("f", PHIS, ids=lambda f: f.spec())
def test_gram_matches_pairwise_solver(f):
    idx, prof, ms = _instance(21, 8)
    G = gram_distances(prof, idx, ms, f, backend="numpy")
    D = G.entries
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0.0)
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            ref = gsim_distance(prof, edge_flow(idx, ms[i], ms[j]), f).distance
            assert D[i, j] == ref, (i, j)


def test_gram_thread_count_is_invisible():
    idx, prof, ms = _instance(33, 10)
    for f in PHIS:
        a = gram_distances(prof, idx, ms, f, threads=1).entries
        b = gram_distances(prof, idx, ms, f, threads=4).entries
        assert np.array_equal(a, b)


def test_gram_meta():
    idx, prof, ms = _instance(4, 4)
    G = gram_distances(prof, idx, ms, NFunction.exp_linear(), threads=2)
    assert G.n == 4
    assert G.meta["phi"] == "exp"
    assert G.meta["root"] == 0
    assert G.meta["threads"] == 2
    assert G.meta["n_nonconverged"] == 0
    assert G.meta["backend"] in ("numba", "numpy")


def test_gram_duplicate_measures_zero_out():
    idx, prof, ms = _instance(9, 3)
    listed = [ms[0], ms[1], ms[0], Measure.from_pairs(zip(ms[0].nodes.tolist(),
                                                          ms[0].masses.tolist()))]
    D = gram_distances(prof, idx, listed, NFunction.exp_linear()).entries
    assert D[0, 2] == 0.0  # same object
    assert D[0, 3] == 0.0  # equal by value


def test_gram_single_measure():
    idx, prof, ms = _instance(2, 1)
    G = gram_distances(prof, idx, ms, NFunction.limit_linear())
    assert G.entries.shape == (1, 1) and G.entries[0, 0] == 0.0


def test_gram_validates():
    idx, prof, ms = _instance(5, 2)
    with pytest.raises(EmptyInput):
        gram_distances(prof, idx, [], NFunction.exp_linear())
    with pytest.raises(ValueError):
        gram_distances(prof, idx, ms, NFunction.exp_linear(), threads=0)
    other = root_index(idx.graph, 1)
    with pytest.raises(MismatchedIndex):
        gram_distances(prof, other, ms, NFunction.exp_linear())


def test_gram_triangle_inequality_at_matrix_scale():
    idx, prof, ms = _instance(17, 12)
    D = gram_distances(prof, idx, ms, NFunction.exp_linear()).entries
    n = len(ms)
    for k in range(n):
        assert np.all(D <= D[:, [k]] + D[[k], :] + 1e-9)


def test_gram_diagnostic_options_fall_back_to_numpy():
    idx, prof, ms = _instance(8, 3)
    G = gram_distances(prof, idx, ms, NFunction.power(2.0, scaled=True),
                       opts=SolverOptions(force_optimizer=True))
    assert G.meta["backend"] == "numpy"
    H = gram_distances(prof, idx, ms, NFunction.power(2.0, scaled=True))
    np.testing.assert_allclose(G.entries, H.entries, rtol=1e-6, atol=1e-12)


# -- benchmark wrapper --------------------------------------------------------------

def test_benchmark_pairs_report():
    idx, prof, ms = _instance(12, 6)
    pairs = [(ms[0], ms[1]), (ms[2], ms[3]), (ms[0], ms[0]), (ms[4], ms[5])]
    rep = benchmark_pairs(prof, idx, pairs, NFunction.exp_linear(),
                          keep_distances=True)
    assert rep.n_pairs == 4
    assert rep.seconds > 0.0
    assert math.isclose(rep.pairs_per_second, 4.0 / rep.seconds, rel_tol=1e-9)
    assert rep.distances.shape == (4,)
    assert rep.distances[2] == 0.0
    ref = gsim_distance(prof, edge_flow(idx, ms[0], ms[1]),
                        NFunction.exp_linear()).distance
    assert math.isclose(rep.distances[0], ref, rel_tol=1e-9)


def test_benchmark_pairs_empty():
    idx, prof, ms = _instance(12, 2)
    rep = benchmark_pairs(prof, idx, [], NFunction.exp_linear())
    assert rep.n_pairs == 0 and rep.seconds == 0.0 and rep.pairs_per_second == 0.0
    assert rep.distances is None


# -- kernels --------------------------------------------------------------------------

def test_kernel_matrix_values():
    D = np.array([[0.0, math.log(2.0)], [math.log(2.0), 0.0]])
    K = kernel_matrix(D, 1.0)
    assert math.isclose(K[0, 1], 0.5, rel_tol=1e-15)
    assert K[0, 0] == 1.0


def test_kernel_matrix_accepts_gram():
    idx, prof, ms = _instance(3, 5)
    G = gram_distances(prof, idx, ms, NFunction.exp_linear())
    K = kernel_matrix(G, 0.7)
    assert np.all((K > 0.0) & (K <= 1.0))
    assert np.array_equal(K, K.T)


def test_kernel_matrix_validates():
    D = np.zeros((2, 2))
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            kernel_matrix(D, bad)


# -- bandwidth heuristic ----------------------------------------------------------------

def test_quantile_bandwidths_fixture():
    sample = list(range(1, 101))
    got = quantile_bandwidths(sample, s_values=[50])
    assert got == [1.0 / 50.0, 1.0 / 100.0, 1.0 / 250.0]


def test_quantile_bandwidths_default_grid():
    got = quantile_bandwidths(range(1, 101))
    assert len(got) == 9 * 3
    assert all(b > 0.0 for b in got)


def test_quantile_rank_arithmetic_is_stable():
    # nearest rank at an exact percentile boundary: 30% of 10 values is the
    # 3rd order statistic, never the 4th
    got = quantile_bandwidths([1.0] * 3 + [2.0] * 7, s_values=[30])
    assert got[0] == 1.0


def test_quantile_bandwidths_errors():
    with pytest.raises(EmptySample):
        quantile_bandwidths([])
    with pytest.raises(AllZeroSample):
        quantile_bandwidths([0.0, 0.0])
    with pytest.raises(AllZeroSample):
        quantile_bandwidths([0.0, 0.0, 0.0, 1.0], s_values=[50])


# -- PSD repair ----------------------------------------------------------------------------

def test_min_eigen_estimate_matches_dense_solver():
    rng = np.random.default_rng(123)
    for _ in range(50):
        n = int(rng.integers(2, 30))
        A = rng.normal(size=(n, n))
        K = 0.5 * (A + A.T)
        est = min_eigen_estimate(K)
        assert abs(est - oracles.min_eig_exact(K)) <= 1e-10


def test_psd_regularize_flip_fixture():
    K = np.array([[0.0, 1.0], [1.0, 0.0]])
    K2, eta = psd_regularize(K)
    assert math.isclose(eta, 1.0 + 1e-10, rel_tol=1e-12)
    assert K2[0, 0] == eta and K2[0, 1] == 1.0
    assert min_eigen_estimate(K2) >= -1e-8


def test_psd_regularize_keeps_psd_input():
    K = np.array([[2.0, 1.0], [1.0, 2.0]])
    K2, eta = psd_regularize(K)
    assert eta == 0.0
    assert np.array_equal(K2, K)


def test_psd_regularize_idempotent_on_kernels():
    idx, prof, ms = _instance(28, 15)
    D = gram_distances(prof, idx, ms, NFunction.exp_square()).entries
    K = kernel_matrix(D, 2.0)
    K2, eta1 = psd_regularize(K)
    assert min_eigen_estimate(K2) >= -1e-8
    _, eta2 = psd_regularize(K2)
    assert eta2 <= eta1 + 1e-12
    assert eta2 <= 1e-7
