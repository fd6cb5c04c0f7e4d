import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from gsipm import NFunction, edge_profiles, gram_distances, root_index
from gsipm.backend import HAS_NUMBA, active_backend, resolve_backend
from gsipm.synth import random_connected_graph, random_measure

PHIS = [NFunction.limit_linear(), NFunction.power(1.5, scaled=True),
        NFunction.power(3.0), NFunction.exp_linear(), NFunction.exp_square()]


def _instance(seed, n_measures):
    g = random_connected_graph(seed, n_lo=16, n_hi=48)
    idx = root_index(g, 0)
    prof = edge_profiles(g, idx)
    ms = [random_measure(g.n_nodes, seed * 31 + i) for i in range(n_measures)]
    return idx, prof, ms


def test_backend_resolution():
    assert active_backend() in ("numba", "numpy")
    assert resolve_backend(None) == active_backend()
    assert resolve_backend("auto") == active_backend()
    assert resolve_backend("numpy") == "numpy"
    with pytest.raises(ValueError):
        resolve_backend("fortran")


@pytest.mark.skipif(not HAS_NUMBA, reason="numba backend not importable")
@pytest.mark.parametrize("f", PHIS, ids=lambda f: f.spec())
def test_jitted_batch_matches_numpy(f):
    for seed in (1, 7, 19):
        idx, prof, ms = _instance(seed, 8)
        a = gram_distances(prof, idx, ms, f, backend="numba").entries
        b = gram_distances(prof, idx, ms, f, backend="numpy").entries
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba backend not importable")
def test_jitted_batch_thread_invariant():
    idx, prof, ms = _instance(23, 12)
    f = NFunction.exp_square()
    one = gram_distances(prof, idx, ms, f, threads=1, backend="numba").entries
    eight = gram_distances(prof, idx, ms, f, threads=8, backend="numba").entries
    assert np.array_equal(one, eight)


def test_env_flag_forces_numpy():
    prog = textwrap.dedent("""
        from gsipm.backend import active_backend, HAS_NUMBA
        assert active_backend() == "numpy", active_backend()
        assert not HAS_NUMBA

        from gsipm import (NFunction, edge_profiles, gram_distances, root_index)
        from gsipm.synth import random_connected_graph, random_measure
        g = random_connected_graph(3, n_lo=8, n_hi=16)
        idx = root_index(g, 0)
        prof = edge_profiles(g, idx)
        ms = [random_measure(g.n_nodes, i) for i in range(4)]
        G = gram_distances(prof, idx, ms, NFunction.exp_linear())
        assert G.meta["backend"] == "numpy"
        print("ok")
    """)
    env = dict(os.environ, GSIPM_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", prog], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"


def test_env_flag_rejects_unknown_backend():
    env = dict(os.environ, GSIPM_BACKEND="cuda")
    out = subprocess.run([sys.executable, "-c", "import gsipm"], env=env,
                         capture_output=True, text=True)
    assert out.returncode != 0
    assert "GSIPM_BACKEND" in out.stderr
