import numpy as np
import pytest

from gsipm import Measure, build_graph
from gsipm.fileio import (
    format_timing,
    parse_timing,
    read_graph,
    read_matrix,
    read_measure,
    read_points,
    write_graph,
    write_matrix,
    write_measure,
    write_points,
)


def test_graph_round_trip(tmp_path):
    g = build_graph(3, [(0, 1, 1.0 / 3.0), (1, 2, 0.1), (0, 2, 1.5)])
    p = tmp_path / "g.txt"
    write_graph(str(p), g)
    back = read_graph(str(p))
    assert back.n_nodes == 3
    assert np.array_equal(back.edges, g.edges)
    # %.17g keeps doubles exact through the text form
    assert np.array_equal(back.weights, g.weights)
    assert back.coords is None


def test_graph_round_trip_with_coords(tmp_path):
    pts = np.random.default_rng(3).uniform(size=(4, 2))
    g = build_graph(pts, [(0, 1, 0.7), (1, 2, 0.3), (2, 3, 1.1)])
    p = tmp_path / "g.txt"
    write_graph(str(p), g)
    back = read_graph(str(p))
    assert np.array_equal(back.coords, pts)
    assert np.array_equal(back.weights, g.weights)


def test_graph_read_rejects_garbage(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("vertices 3 links 2\n")
    with pytest.raises(ValueError):
        read_graph(str(p))
    p.write_text("nodes 3 edges 2 dim 0\n0 1 1.0\n")
    with pytest.raises(ValueError):
        read_graph(str(p))  # truncated edge list
    p.write_text("nodes 2 edges 1 dim 0\n0 1 -1.0\n")
    with pytest.raises(Exception):
        read_graph(str(p))  # weight validation comes from the graph builder


def test_measure_round_trip(tmp_path):
    # masses summing to an exact 1.0 survive bit for bit
    m = Measure.from_pairs([(0, 0.25), (5, 0.75)])
    p = tmp_path / "m.txt"
    write_measure(str(p), m)
    back = read_measure(str(p))
    assert np.array_equal(back.nodes, m.nodes)
    assert np.array_equal(back.masses, m.masses)

    # thirds renormalize on read; only the last ulp may move
    m = Measure.from_pairs([(0, 1.0 / 3.0), (5, 2.0 / 3.0)])
    write_measure(str(p), m)
    back = read_measure(str(p))
    np.testing.assert_allclose(back.masses, m.masses, rtol=1e-15)


def test_points_round_trip(tmp_path):
    pts = np.random.default_rng(9).normal(size=(17, 3))
    p = tmp_path / "pts.txt"
    write_points(str(p), pts)
    assert np.array_equal(read_points(str(p)), pts)


def test_matrix_round_trip(tmp_path):
    M = np.random.default_rng(4).normal(size=(6, 6))
    p = tmp_path / "m.bin"
    c = tmp_path / "m.csv"
    write_matrix(str(p), M, csv_path=str(c))
    assert np.array_equal(read_matrix(str(p)), M)
    rows = c.read_text().strip().split("\n")
    assert len(rows) == 6
    csv_back = np.array([[float(x) for x in r.split(",")] for r in rows])
    assert np.array_equal(csv_back, M)


def test_matrix_rejects_bad_header(tmp_path):
    p = tmp_path / "m.bin"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        read_matrix(str(p))
    M = np.zeros((2, 2))
    write_matrix(str(p), M)
    raw = bytearray(p.read_bytes())
    raw[4] = 99  # version field
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        read_matrix(str(p))


def test_matrix_rejects_truncation(tmp_path):
    p = tmp_path / "m.bin"
    write_matrix(str(p), np.ones((3, 3)))
    raw = p.read_bytes()
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_matrix(str(p))


def test_matrix_must_be_square():
    with pytest.raises(ValueError):
        write_matrix("/dev/null", np.zeros((2, 3)))


def test_timing_line_round_trip():
    line = format_timing(10, 1.5)
    n, secs, pps = parse_timing(line)
    assert line.startswith("pairs=10 seconds=1.5 pps=")
    assert (n, secs) == (10, 1.5)
    assert pps == 10 / 1.5
    assert parse_timing(format_timing(0, 0.0)) == (0, 0.0, 0.0)
