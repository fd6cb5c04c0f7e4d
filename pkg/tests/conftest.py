import sys
from pathlib import Path

import pytest

# make oracles.py importable regardless of how pytest was launched
sys.path.insert(0, str(Path(__file__).resolve().parent))

from gsipm import build_graph, edge_profiles, root_index


@pytest.fixture(scope="session")
def path3():
    """Path 0-1-2 with unit weights, rooted at 0: (graph, index, profile)."""
    g = build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    idx = root_index(g, 0)
    return g, idx, edge_profiles(g, idx)


@pytest.fixture(scope="session")
def triangle():
    """Triangle with one long chord, rooted at 0."""
    g = build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.5)])
    idx = root_index(g, 0)
    return g, idx, edge_profiles(g, idx)
