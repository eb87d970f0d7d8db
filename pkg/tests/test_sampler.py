import itertools
import math
from collections import Counter

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pathkit.navgraph import GraphError, RoomGraph, RoomVertex, build_room_graph, generate_synthetic_house
from pathkit.sampler import (
    CoverageState,
    GuidePath,
    build_constrained_digraph,
    constrained_shortest_path,
    dataset_stats,
    enumerate_room_paths,
    generate_candidate_path,
    greedy_select,
    sample_candidates,
    selection_objective,
)

from conftest import make_graph


def room_graph(levels, edges):
    vertices = tuple(RoomVertex(v, v, lvl, frozenset({f"{v}-p"})) for v, lvl in sorted(levels.items()))
    return RoomGraph(vertices, frozenset(tuple(sorted(e)) for e in edges), {f"{v}-p": v for v in levels})


def brute_force_room_paths(rg, max_rooms, max_levels):
    adj = rg.adjacency()
    level = {v.id: v.level_id for v in rg.vertices}
    out = []
    for k in range(1, max_rooms + 1):
        for perm in itertools.permutations(sorted(adj), k):
            if all(b in adj[a] for a, b in zip(perm, perm[1:])) and len({level[v] for v in perm}) <= max_levels:
                out.append(perm)
    return sorted(out)


def test_triangle_room_paths():
    rg = room_graph({"A": 0, "B": 0, "C": 0}, [("A", "B"), ("B", "C"), ("A", "C")])
    paths = enumerate_room_paths(rg, max_rooms=2, max_levels=2)
    assert len(paths) == 9
    assert paths == brute_force_room_paths(rg, 2, 2)


def test_single_vertex_room_paths():
    assert enumerate_room_paths(room_graph({"A": 0}, []), 5, 2) == [("A",)]


def test_level_filter():
    rg = room_graph({"A": 1, "B": 3}, [("A", "B")])
    assert enumerate_room_paths(rg, 5, max_levels=1) == [("A",), ("B",)]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 7), max_rooms=st.integers(1, 5), max_levels=st.integers(1, 3))
def test_room_paths_match_brute_force(seed, n, max_rooms, max_levels):
    rng = np.random.default_rng(seed)
    levels = {f"v{i}": int(rng.integers(0, 3)) for i in range(n)}
    edges = [e for e in itertools.combinations(sorted(levels), 2) if rng.random() < 0.5]
    rg = room_graph(levels, edges)
    assert enumerate_room_paths(rg, max_rooms, max_levels) == brute_force_room_paths(rg, max_rooms, max_levels)


# --- constrained digraph ----------------------------------------------


@pytest.fixture
def two_rooms():
    # room A: a0 - a1 ; room B: b0 - b1 - b2 ; doors a1-b0 and a0-b2
    pos = {"a0": (0, 0, 0), "a1": (2, 0, 0), "b0": (4, 0, 0), "b1": (4, 2, 0), "b2": (0, 2, 0)}
    rooms = {"a0": "A", "a1": "A", "b0": "B", "b1": "B", "b2": "B"}
    edges = [("a0", "a1"), ("b0", "b1"), ("b1", "b2"), ("a1", "b0"), ("a0", "b2")]
    return make_graph(pos, edges, rooms)


def test_single_room_digraph(two_rooms):
    rg = build_room_graph(two_rooms)
    cd = build_constrained_digraph(two_rooms, rg, ("B:0",))
    assert cd.member_panos == {"b0", "b1", "b2"}
    assert cd.arcs == {("b0", "b1"), ("b1", "b0"), ("b1", "b2"), ("b2", "b1")}


def test_forward_only_between_rooms(two_rooms):
    rg = build_room_graph(two_rooms)
    cd = build_constrained_digraph(two_rooms, rg, ("A:0", "B:0"))
    assert ("a1", "b0") in cd.arcs and ("b0", "a1") not in cd.arcs
    assert ("a0", "b2") in cd.arcs and ("b2", "a0") not in cd.arcs
    back = build_constrained_digraph(two_rooms, rg, ("B:0", "A:0"))
    assert ("b0", "a1") in back.arcs and ("a1", "b0") not in back.arcs


def test_unknown_room_vertex(two_rooms):
    with pytest.raises(GraphError):
        build_constrained_digraph(two_rooms, build_room_graph(two_rooms), ("Z:0",))


def test_fig2_subgraph_excludes_skipped_room(fig2_graph):
    rg = build_room_graph(fig2_graph)
    cd = build_constrained_digraph(fig2_graph, rg, ("r0:0", "r2:0", "r3:0"))
    assert cd.member_panos.isdisjoint({"p0", "p1"})
    assert cd.member_panos == {"p8", "p7", "p2", "p3", "p4", "p5", "p6"}


def test_fig2_shortest_path_in_subgraph(fig2_graph):
    rg = build_room_graph(fig2_graph)
    cd = build_constrained_digraph(fig2_graph, rg, ("r0:0", "r2:0", "r3:0"))
    for seed in range(200):
        cand = generate_candidate_path(fig2_graph, cd, np.random.default_rng(seed))
        if cand and (cand.nodes[0], cand.nodes[-1]) == ("p8", "p6"):
            break
    else:
        pytest.fail("no draw produced p8 -> p6")
    assert cand.nodes == ("p8", "p7", "p2", "p3", "p4", "p6")
    assert cand.geodesic_m == pytest.approx(8.0)  # via r1
    assert cand.length_m == pytest.approx(8.0 + 2 * math.sqrt(2))
    assert cand.length_m > cand.geodesic_m


def test_single_pano_room_gives_no_path():
    g = make_graph({"x": (0, 0, 0)}, [], {"x": "A"})
    rg = build_room_graph(g)
    cd = build_constrained_digraph(g, rg, ("A:0",))
    assert generate_candidate_path(g, cd, np.random.default_rng(0)) is None


def bellman_ford(nodes, arcs, weight, source):
    dist = {n: math.inf for n in nodes}
    dist[source] = 0.0
    for _ in range(len(nodes) - 1):
        for a, b in arcs:
            if dist[a] + weight(a, b) < dist[b]:
                dist[b] = dist[a] + weight(a, b)
    return dist


def test_constrained_path_matches_bellman_ford(two_rooms):
    rg = build_room_graph(two_rooms)
    cd = build_constrained_digraph(two_rooms, rg, ("A:0", "B:0"))
    assert len(cd.member_panos) == 5
    for s in sorted(cd.member_panos):
        bf = bellman_ford(cd.member_panos, cd.arcs, two_rooms.edge_length, s)
        for t in sorted(cd.member_panos):
            if s == t:
                continue
            path = constrained_shortest_path(two_rooms, cd, s, t)
            if math.isinf(bf[t]):
                assert path is None
            else:
                assert all((a, b) in cd.arcs for a, b in zip(path, path[1:]))
                w = sum(two_rooms.edge_length(a, b) for a, b in zip(path, path[1:]))
                assert w == pytest.approx(bf[t], abs=1e-9)


def test_candidate_determinism():
    g = generate_synthetic_house(4, 4, 1, seed=2)
    assert sample_candidates(g, seed=9) == sample_candidates(g, seed=9)


def room_sequence(rg, nodes):
    seq = [rg.pano_room[n] for n in nodes]
    return [r for i, r in enumerate(seq) if i == 0 or seq[i - 1] != r]


@pytest.mark.parametrize("seed", range(4))
def test_candidates_are_constrained_shortest_paths(seed):
    g = generate_synthetic_house(6, 5, 2, seed=seed)
    rg = build_room_graph(g)
    for cand in sample_candidates(g, seed=seed):
        cd = build_constrained_digraph(g, rg, cand.room_path)
        dg = nx.DiGraph()
        dg.add_weighted_edges_from((a, b, g.edge_length(a, b)) for a, b in cd.arcs)
        ref = nx.dijkstra_path_length(dg, cand.nodes[0], cand.nodes[-1])
        assert abs(cand.length_m - ref) <= 1e-9
        assert room_sequence(rg, cand.nodes) == list(cand.room_path)
        assert cand.nodes[0] in rg.vertex(cand.room_path[0]).panos
        assert cand.nodes[-1] in rg.vertex(cand.room_path[-1]).panos
        assert cand.length_m >= cand.geodesic_m - 1e-12


def test_cyclic_house_has_detour_candidates():
    g = generate_synthetic_house(4, 4, 1, seed=0)  # 2x2 rooms form a cycle
    rg = build_room_graph(g)
    assert len(rg.edges) >= len(rg.vertices)
    assert any(c.length_m > c.geodesic_m + 1e-6 for c in sample_candidates(g, seed=0))


# --- selection ---------------------------------------------------------


def gp(pid, nodes, length, geodesic, building="b"):
    return GuidePath(pid, tuple(nodes), ("r",), length, geodesic, building)


def test_objective_values():
    empty = CoverageState()
    assert selection_objective(gp("x", "ab", 5.0, 5.0), empty) == 1.0
    assert selection_objective(gp("x", "ab", 12.0, 8.0), empty) == pytest.approx(0.666667, abs=1e-6)
    cov = CoverageState(counts=Counter({("b", "a"): 2, ("b", "c"): 1}))
    assert selection_objective(gp("x", "abc", 4.0, 4.0), cov) == 2.0
    with pytest.raises(ValueError):
        selection_objective(gp("x", "a", 0.0, 0.0), empty)


def test_greedy_prefers_detour():
    ds = greedy_select([gp("p1", "ab", 5.0, 5.0), gp("p2", "cd", 12.0, 8.0)], target_size=1)
    assert [p.path_id for p in ds.paths] == ["p2"]


def test_greedy_skips_too_long():
    pool = [gp("long", "ab", 41.2, 10.0), gp("ok", "cd", 10.0, 10.0)]
    ds = greedy_select(pool, target_size=2)
    assert [p.path_id for p in ds.paths] == ["ok"]
    assert ds.shortfall == 1


def greedy_oracle(pool, target, max_len, cap):
    counts, per_b, chosen = Counter(), Counter(), []
    remaining = list(pool)
    while len(chosen) < target:
        feasible = [c for c in remaining if c.length_m <= max_len and per_b[c.building_id] < cap]
        if not feasible:
            break

        def score(c):
            s = sum(counts[(c.building_id, p)] for p in c.nodes)
            return c.geodesic_m / c.length_m + s / len(c.nodes)

        best = min(feasible, key=lambda c: (score(c), c.path_id))
        remaining.remove(best)
        chosen.append(best.path_id)
        per_b[best.building_id] += 1
        for p in best.nodes:
            counts[(best.building_id, p)] += 1
    return chosen


def random_pool(rng, n, buildings=("b",), panos="abcdefgh"):
    pool = []
    for i in rng.permutation(n):
        m = int(rng.integers(2, 6))
        nodes = list(rng.choice(list(panos), size=m))
        geo = float(rng.integers(1, 10))
        length = geo + float(rng.choice([0, 0, 1, 2.5]))
        if rng.random() < 0.1:
            length = 45.0
        pool.append(gp(f"c{i:02d}", nodes, length, geo, str(rng.choice(list(buildings)))))
    return pool


def test_greedy_matches_oracle_twelve():
    pool = random_pool(np.random.default_rng(0), 12)
    ds = greedy_select(pool, 5)
    assert [p.path_id for p in ds.paths] == greedy_oracle(pool, 5, 40.0, 500)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 20), target=st.integers(1, 20), cap=st.integers(1, 6))
def test_greedy_matches_oracle_with_caps(seed, n, target, cap):
    pool = random_pool(np.random.default_rng(seed), n, buildings=("b1", "b2", "b3"))
    ds = greedy_select(pool, target, max_per_building=cap)
    assert [p.path_id for p in ds.paths] == greedy_oracle(pool, target, 40.0, cap)
    assert all(p.length_m <= 40.0 for p in ds.paths)
    assert all(v <= cap for v in Counter(p.building_id for p in ds.paths).values())
    recount = Counter((p.building_id, x) for p in ds.paths for x in p.nodes)
    assert +ds.coverage.counts == recount
    assert ds.shortfall == target - len(ds.paths)


def test_greedy_rejects_bad_input():
    with pytest.raises(ValueError):
        greedy_select([], 1)
    with pytest.raises(ValueError):
        greedy_select([gp("a", "ab", 1, 1), gp("a", "cd", 1, 1)], 1)


# --- stats -------------------------------------------------------------


def test_stats_single_shortest(line_graph):
    ds = [GuidePath("x", ("a", "b", "c"), ("r:0",), 5.0, 5.0, "b")]
    rep = dataset_stats(ds, {"b": line_graph})
    assert rep.non_shortest_fraction == 0.0
    assert rep.mean_detour_pct == 0.0
    assert rep.visit_count_histogram == {1: 3}


def test_stats_edges_mean(line_graph):
    ds = [
        GuidePath("x", ("a", "b", "c", "b"), ("r:0",), 8.0, 2.0, "b"),
        GuidePath("y", ("a", "b", "c", "b", "a", "b"), ("r:0",), 12.0, 2.0, "b"),
    ]
    rep = dataset_stats(ds, {"b": line_graph})
    assert rep.length_edges_mean == 4.0
    assert rep.length_edges_histogram == {3: 1, 5: 1}
    assert rep.non_shortest_fraction == 1.0
    assert rep.mean_detour_pct == pytest.approx(100 * (3 + 5) / 2)
    with pytest.raises(ValueError):
        dataset_stats([], {"b": line_graph})
