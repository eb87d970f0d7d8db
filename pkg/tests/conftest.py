import functools
import itertools

import numpy as np
import pytest

from pathkit.navgraph import PanoGraph, PanoNode


def make_graph(positions, edges, rooms=None, levels=None, building_id="b"):
    """positions: {id: (x, y, z)}; rooms/levels default to one room on level 0."""
    rooms = rooms or {}
    levels = levels or {}
    nodes = [PanoNode(n, tuple(p), rooms.get(n, "r"), levels.get(n, 0)) for n, p in positions.items()]
    return PanoGraph(building_id, nodes, edges)


def random_graph(rng, n, p_edge=0.3, n_rooms=1):
    positions = {f"n{i:02d}": tuple(float(v) for v in rng.integers(0, 10, size=3)) for i in range(n)}
    ids = sorted(positions)
    edges = [(a, b) for a, b in itertools.combinations(ids, 2) if rng.random() < p_edge]
    rooms = {i: f"r{rng.integers(n_rooms)}" for i in ids}
    return make_graph(positions, edges, rooms)


@pytest.fixture
def line_graph():
    # a --2.0-- b --3.0-- c
    return make_graph({"a": (0, 0, 0), "b": (2, 0, 0), "c": (5, 0, 0)}, [("a", "b"), ("b", "c")])


@pytest.fixture
def fig2_graph():
    """Four rooms; the r0 -> r3 geodesic runs through r1, room path (r0, r2, r3) detours."""
    positions = {
        "p8": (0, 0, 0), "p7": (0, -2, 0),             # r0
        "p0": (2, 0, 0), "p1": (4, 0, 0),              # r1
        "p2": (2, -4, 0), "p3": (4, -4, 0), "p4": (6, -4, 0),  # r2
        "p5": (6, 0, 0), "p6": (6, -2, 0),             # r3
    }
    rooms = {"p8": "r0", "p7": "r0", "p0": "r1", "p1": "r1",
             "p2": "r2", "p3": "r2", "p4": "r2", "p5": "r3", "p6": "r3"}
    edges = [
        ("p8", "p7"), ("p0", "p1"), ("p2", "p3"), ("p3", "p4"), ("p5", "p6"),
        ("p8", "p0"), ("p1", "p5"),  # r0-r1-r3
        ("p7", "p2"), ("p4", "p6"),  # r0-r2-r3
    ]
    return make_graph(positions, edges, rooms, building_id="fig2")


def floyd_warshall(g):
    ids = [n.id for n in g.nodes]
    idx = {n: i for i, n in enumerate(ids)}
    d = np.full((len(ids), len(ids)), np.inf)
    np.fill_diagonal(d, 0.0)
    for a, b in g.edges:
        w = float(np.linalg.norm(np.subtract(g.node(a).position, g.node(b).position)))
        d[idx[a], idx[b]] = d[idx[b], idx[a]] = w
    for k in range(len(ids)):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d, idx


def all_warps(n, m):
    """Every monotone warp from (0, 0) to (n-1, m-1)."""
    @functools.lru_cache(None)
    def rec(i, j):
        if (i, j) == (n - 1, m - 1):
            return [((i, j),)]
        out = []
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            if i + di < n and j + dj < m:
                out += [((i, j),) + rest for rest in rec(i + di, j + dj)]
        return out

    return rec(0, 0)


# --- acceptance reporting -------------------------------------------------

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Context manager that records one PASS/FAIL line per acceptance criterion."""
    import contextlib

    @contextlib.contextmanager
    def _criterion(number, title):
        try:
            yield
        except BaseException:
            _ACCEPTANCE_LINES.append(f"FAIL  criterion {number:2d}: {title}")
            print(_ACCEPTANCE_LINES[-1])
            raise
        _ACCEPTANCE_LINES.append(f"PASS  criterion {number:2d}: {title}")
        print(_ACCEPTANCE_LINES[-1])

    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
