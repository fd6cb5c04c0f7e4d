"""Text and binary file formats shared by the CLI.

graph:   `nodes N edges M dim D`, N coordinate lines (D reals, D=0 allowed),
         then M lines `u v w` with 0-based ids.
measure: `measure K`, then K lines `node_id mass`.
points:  `points N dim D`, then N lines of D reals.
matrix:  binary, magic GSBM + u32 version + u64 n + n*n little-endian f64
         row-major; optionally mirrored to .csv text.
timing:  one line `pairs=<n> seconds=<s> pps=<r>`.

All reals are emitted with 17 significant digits so round-trips are exact.
"""

from __future__ import annotations

import struct
from typing import List, Tuple

import numpy as np

from .graph import Graph, Measure, build_graph

_MAGIC = b"GSBM"
_VERSION = 1


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _read_lines(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def write_graph(path: str, g: Graph) -> None:
    dim = 0 if g.coords is None else g.coords.shape[1]
    lines = [f"nodes {g.n_nodes} edges {g.n_edges} dim {dim}"]
    for i in range(g.n_nodes):
        lines.append("" if dim == 0 else " ".join(_fmt(c) for c in g.coords[i]))
    for i in range(g.n_edges):
        u, v = g.edges[i]
        lines.append(f"{u} {v} {_fmt(g.weights[i])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph(path: str) -> Graph:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    head = lines[0].split()
    if len(head) != 6 or head[0] != "nodes" or head[2] != "edges" or head[4] != "dim":
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    n, m, dim = int(head[1]), int(head[3]), int(head[5])
    if len(lines) < 1 + n + m:
        raise ValueError(f"{path}: expected {1 + n + m} lines, found {len(lines)}")
    coords = None
    if dim > 0:
        coords = np.zeros((n, dim))
        for i in range(n):
            parts = lines[1 + i].split()
            if len(parts) != dim:
                raise ValueError(f"{path}: node {i} has {len(parts)} coordinates, expected {dim}")
            coords[i] = [float(p) for p in parts]
    edges = []
    for r in range(m):
        parts = lines[1 + n + r].split()
        if len(parts) != 3:
            raise ValueError(f"{path}: bad edge line {lines[1 + n + r]!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return build_graph(coords if coords is not None else n, edges)


def write_measure(path: str, m: Measure) -> None:
    lines = [f"measure {m.nodes.size}"]
    for u, x in zip(m.nodes, m.masses):
        lines.append(f"{u} {_fmt(x)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_measure(path: str) -> Measure:
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("measure "):
        raise ValueError(f"{path}: bad measure header")
    k = int(lines[0].split()[1])
    if len(lines) < 1 + k:
        raise ValueError(f"{path}: expected {k} support lines, found {len(lines) - 1}")
    pairs = []
    for r in range(k):
        parts = lines[1 + r].split()
        if len(parts) != 2:
            raise ValueError(f"{path}: bad support line {lines[1 + r]!r}")
        pairs.append((int(parts[0]), float(parts[1])))
    return Measure.from_pairs(pairs)


def write_points(path: str, pts: np.ndarray) -> None:
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    lines = [f"points {pts.shape[0]} dim {pts.shape[1]}"]
    for row in pts:
        lines.append(" ".join(_fmt(c) for c in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_points(path: str) -> np.ndarray:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty points file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "points" or head[2] != "dim":
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    n, dim = int(head[1]), int(head[3])
    if len(lines) < 1 + n:
        raise ValueError(f"{path}: expected {n} point lines, found {len(lines) - 1}")
    pts = np.zeros((n, dim))
    for i in range(n):
        parts = lines[1 + i].split()
        if len(parts) != dim:
            raise ValueError(f"{path}: point {i} has {len(parts)} coordinates, expected {dim}")
        pts[i] = [float(p) for p in parts]
    return pts


def write_matrix(path: str, M: np.ndarray, csv_path: str = None) -> None:
    M = np.ascontiguousarray(M, dtype=np.float64)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"matrix must be square, got {M.shape}")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", n))
        fh.write(M.astype("<f8").tobytes())
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8") as fh:
            for row in M:
                fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        (n,) = struct.unpack("<Q", fh.read(8))
        data = fh.read(8 * n * n)
        if len(data) != 8 * n * n:
            raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(data, dtype="<f8").reshape(n, n).astype(np.float64)


def format_timing(n_pairs: int, seconds: float) -> str:
    pps = n_pairs / seconds if seconds > 0 else 0.0
    return f"pairs={n_pairs} seconds={_fmt(seconds)} pps={_fmt(pps)}"


def parse_timing(text: str) -> Tuple[int, float, float]:
    fields = dict(part.split("=", 1) for part in text.split())
    return int(fields["pairs"]), float(fields["seconds"]), float(fields["pps"])
