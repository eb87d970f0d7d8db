"""Two-level path sampling: simple room paths, constrained panorama paths,
and greedy coverage selection."""
from __future__ import annotations

import math
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .navgraph import (
    GraphError,
    PanoGraph,
    RoomGraph,
    build_room_graph,
    dijkstra,
    geodesic_distance,
    path_length,
)

RoomPath = Tuple[str, ...]

MAX_ROOMS = 5
MAX_LEVELS = 2
MAX_LEN_M = 40.0
MAX_PER_BUILDING = 500
SHORTEST_EPS = 1e-6


@dataclass(frozen=True)
class ConstrainedDigraph:
    """Panorama subgraph restricted to a room path.

    Same-room edges are kept in both directions; an edge between consecutive
    rooms of the path is kept only in the forward direction.
    """

    arcs: FrozenSet[Tuple[str, str]]
    member_panos: FrozenSet[str]
    room_path: RoomPath
    room_panos: Tuple[FrozenSet[str], ...] = field(repr=False)

    def successors(self, g: PanoGraph):
        out = defaultdict(list)
        for a, b in sorted(self.arcs):
            out[a].append((b, g.edge_length(a, b)))
        return lambda u: out.get(u, ())


@dataclass(frozen=True)
class GuidePath:
    path_id: str
    nodes: Tuple[str, ...]
    room_path: RoomPath
    length_m: float
    geodesic_m: float
    building_id: str

    def to_dict(self) -> dict:
        return {
            "path_id": self.path_id,
            "building_id": self.building_id,
            "nodes": list(self.nodes),
            "room_path": list(self.room_path),
            "length_m": self.length_m,
            "geodesic_m": self.geodesic_m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GuidePath":
        return cls(
            path_id=str(d["path_id"]),
            nodes=tuple(d["nodes"]),
            room_path=tuple(d["room_path"]),
            length_m=float(d["length_m"]),
            geodesic_m=float(d["geodesic_m"]),
            building_id=str(d["building_id"]),
        )


@dataclass
class CoverageState:
    counts: Counter = field(default_factory=Counter)  # (building_id, pano_id) -> occurrences
    per_building: Counter = field(default_factory=Counter)

    def add(self, path: GuidePath):
        for p in path.nodes:
            self.counts[(path.building_id, p)] += 1
        self.per_building[path.building_id] += 1

    def count(self, building_id: str, pano_id: str) -> int:
        return self.counts.get((building_id, pano_id), 0)


@dataclass
class PathDataset:
    paths: List[GuidePath]
    coverage: CoverageState
    shortfall: int = 0


# ---------------------------------------------------------------------------
# high level: room paths


def enumerate_room_paths(rg: RoomGraph, max_rooms: int = MAX_ROOMS, max_levels: int = MAX_LEVELS) -> List[RoomPath]:
    """All simple room paths with 1..max_rooms vertices spanning at most max_levels levels.

    Both orientations of every path are produced; output is sorted.
    """
    if max_rooms < 1 or max_levels < 1:
        raise ValueError("max_rooms and max_levels must be >= 1")
    adj = rg.adjacency()
    level = {v.id: v.level_id for v in rg.vertices}
    out: List[RoomPath] = []

    def extend(path: List[str], levels: Counter):
        out.append(tuple(path))
        if len(path) == max_rooms:
            return
        for nxt in adj[path[-1]]:
            if nxt in path:
                continue
            lv = level[nxt]
            if lv not in levels and len(levels) >= max_levels:
                continue
            path.append(nxt)
            levels[lv] += 1
            extend(path, levels)
            path.pop()
            levels[lv] -= 1
            if not levels[lv]:
                del levels[lv]

    for v in sorted(adj):
        extend([v], Counter([level[v]]))
    out.sort()
    return out


# ---------------------------------------------------------------------------
# low level: panorama paths


def build_constrained_digraph(g: PanoGraph, rg: RoomGraph, rp: Sequence[str]) -> ConstrainedDigraph:
    vmap = rg.vertex_map()
    for vid in rp:
        if vid not in vmap:
            raise GraphError(f"unknown room vertex {vid!r}")
    rp = tuple(rp)
    room_panos = tuple(vmap[v].panos for v in rp)
    members = frozenset().union(*room_panos)
    forward = {(rp[i], rp[i + 1]) for i in range(len(rp) - 1)}
    arcs = set()
    for a, b in g.edges:
        if a not in members or b not in members:
            continue
        ra, rb = rg.pano_room[a], rg.pano_room[b]
        if ra == rb:
            arcs.add((a, b))
            arcs.add((b, a))
        elif (ra, rb) in forward:
            arcs.add((a, b))
        elif (rb, ra) in forward:
            arcs.add((b, a))
    return ConstrainedDigraph(frozenset(arcs), members, rp, room_panos)


def constrained_shortest_path(g: PanoGraph, cd: ConstrainedDigraph, start: str, goal: str) -> Optional[List[str]]:
    """Minimum-weight directed path start -> goal inside ``cd``, or None."""
    dist, prev = dijkstra(start, cd.successors(g), goal)
    if goal not in dist:
        return None
    nodes = [goal]
    while nodes[-1] != start:
        nodes.append(prev[nodes[-1]])
    return nodes[::-1]


def generate_candidate_path(
    g: PanoGraph,
    cd: ConstrainedDigraph,
    rng: np.random.Generator,
    path_id: str = "",
) -> Optional[GuidePath]:
    """Draw start/goal uniformly from the first/last room and return the
    shortest directed path between them, or None (no path)."""
    first = sorted(cd.room_panos[0])
    last = sorted(cd.room_panos[-1])
    start = first[rng.integers(len(first))]
    goal = last[rng.integers(len(last))]
    if start == goal:
        return None
    nodes = constrained_shortest_path(g, cd, start, goal)
    if nodes is None:
        return None
    return GuidePath(
        path_id=path_id,
        nodes=tuple(nodes),
        room_path=cd.room_path,
        length_m=path_length(g, nodes),
        geodesic_m=geodesic_distance(g, start, goal),
        building_id=g.building_id,
    )


def building_rng(seed: int, building_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(building_id.encode("utf-8"))])


def sample_candidates(
    g: PanoGraph,
    seed: int = 0,
    max_rooms: int = MAX_ROOMS,
    max_levels: int = MAX_LEVELS,
    draws_per_room_path: int = 1,
) -> List[GuidePath]:
    """Candidate pool for one building. Unreachable or degenerate draws are dropped."""
    rg = build_room_graph(g)
    rng = building_rng(seed, g.building_id)
    pool = []
    serial = 0
    for rp in enumerate_room_paths(rg, max_rooms, max_levels):
        cd = build_constrained_digraph(g, rg, rp)
        for _ in range(draws_per_room_path):
            cand = generate_candidate_path(g, cd, rng, path_id=f"{g.building_id}/{serial:06d}")
            serial += 1
            if cand is not None:
                pool.append(cand)
    return pool


# ---------------------------------------------------------------------------
# greedy selection


def selection_objective(cand: GuidePath, coverage: CoverageState) -> float:
    """Detour ratio (geodesic / length) plus mean coverage count of the path's panoramas."""
    if not cand.length_m > 0:
        raise ValueError(f"path {cand.path_id!r} has zero length")
    total = sum(coverage.count(cand.building_id, p) for p in cand.nodes)
    return cand.geodesic_m / cand.length_m + total / len(cand.nodes)


def greedy_select(
    candidates: Sequence[GuidePath],
    target_size: int,
    max_len_m: float = MAX_LEN_M,
    max_per_building: int = MAX_PER_BUILDING,
) -> PathDataset:
    """Repeatedly take the feasible candidate with the smallest objective.

    Coverage sums are tracked as integers per candidate so the objective is
    evaluated with exactly the same float operations as
    :func:`selection_objective`. Ties go to the smallest path_id.
    """
    if not candidates:
        raise ValueError("candidate pool is empty")
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    ids = [c.path_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate path_id in candidate pool")
    for c in candidates:
        if not c.length_m > 0:
            raise ValueError(f"path {c.path_id!r} has zero length")

    pool = sorted(candidates, key=lambda c: c.path_id)
    n = len(pool)
    ratio = np.array([c.geodesic_m / c.length_m for c in pool])
    size = np.array([len(c.nodes) for c in pool], dtype=np.int64)
    cov_sum = np.zeros(n, dtype=np.int64)
    alive = np.array([c.length_m <= max_len_m for c in pool])

    # pano -> (candidate indices, occurrences in that candidate)
    pano_key: Dict[Tuple[str, str], int] = {}
    rows = defaultdict(list)
    for ci, c in enumerate(pool):
        for p, k in Counter(c.nodes).items():
            key = (c.building_id, p)
            pid = pano_key.setdefault(key, len(pano_key))
            rows[pid].append((ci, k))
    incidence = {
        pid: (np.array([r[0] for r in rs]), np.array([r[1] for r in rs], dtype=np.int64))
        for pid, rs in rows.items()
    }
    building_members = defaultdict(list)
    for ci, c in enumerate(pool):
        building_members[c.building_id].append(ci)

    coverage = CoverageState()
    chosen: List[GuidePath] = []
    while len(chosen) < target_size and alive.any():
        score = ratio + cov_sum / size
        score[~alive] = np.inf
        best = int(np.argmin(score))  # first minimum = smallest path_id
        cand = pool[best]
        alive[best] = False
        chosen.append(cand)
        coverage.add(cand)
        for p, k in Counter(cand.nodes).items():
            idx, occ = incidence[pano_key[(cand.building_id, p)]]
            cov_sum[idx] += occ * k
        if coverage.per_building[cand.building_id] >= max_per_building:
            alive[building_members[cand.building_id]] = False

    return PathDataset(chosen, coverage, shortfall=target_size - len(chosen))


def random_select(
    candidates: Sequence[GuidePath],
    size: int,
    rng: np.random.Generator,
    max_len_m: float = MAX_LEN_M,
) -> PathDataset:
    """Uniform selection without replacement among length-feasible candidates (comparison baseline)."""
    feasible = sorted((c for c in candidates if c.length_m <= max_len_m), key=lambda c: c.path_id)
    take = min(size, len(feasible))
    picks = rng.choice(len(feasible), size=take, replace=False)
    coverage = CoverageState()
    chosen = [feasible[i] for i in picks]
    for c in chosen:
        coverage.add(c)
    return PathDataset(chosen, coverage, shortfall=size - take)


# ---------------------------------------------------------------------------
# statistics


@dataclass
class StatsReport:
    count: int
    length_m_mean: float
    length_m_std: float
    length_edges_mean: float
    length_edges_std: float
    visit_count_std: float
    non_shortest_fraction: float
    mean_detour_pct: float
    length_m_histogram: Dict[int, int]
    length_edges_histogram: Dict[int, int]
    visit_count_histogram: Dict[int, int]

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        for key in ("length_m_histogram", "length_edges_histogram", "visit_count_histogram"):
            d[key] = {str(k): v for k, v in sorted(d[key].items())}
        return d


def _histogram(values: Iterable[int]) -> Dict[int, int]:
    return dict(sorted(Counter(values).items()))


def dataset_stats(paths: Sequence[GuidePath], graphs: Mapping[str, PanoGraph]) -> StatsReport:
    """Length, coverage and detour statistics of a path collection.

    Visit counts cover every panorama of the supplied graphs, unvisited ones
    included. Length-in-meters histogram bins are 1 m wide (floor).
    """
    if not paths:
        raise ValueError("cannot summarize an empty dataset")
    for p in paths:
        if p.building_id not in graphs:
            raise GraphError(f"no graph for building {p.building_id!r}")
    lengths = np.array([p.length_m for p in paths])
    edges = np.array([len(p.nodes) - 1 for p in paths])
    visits = Counter()
    for p in paths:
        visits.update((p.building_id, n) for n in p.nodes)
    per_pano = [visits.get((b, n.id), 0) for b in sorted(graphs) for n in graphs[b].nodes]
    non_shortest = [p.length_m > p.geodesic_m + SHORTEST_EPS for p in paths]
    detours = [100.0 * (p.length_m / p.geodesic_m - 1.0) for p in paths if p.geodesic_m > 0]
    return StatsReport(
        count=len(paths),
        length_m_mean=float(lengths.mean()),
        length_m_std=float(lengths.std()),
        length_edges_mean=float(edges.mean()),
        length_edges_std=float(edges.std()),
        visit_count_std=float(np.std(per_pano)) if per_pano else 0.0,
        non_shortest_fraction=float(np.mean(non_shortest)),
        mean_detour_pct=float(np.mean(detours)) if detours else 0.0,
        length_m_histogram=_histogram(int(math.floor(x)) for x in lengths),
        length_edges_histogram=_histogram(int(e) for e in edges),
        visit_count_histogram=_histogram(per_pano),
    )
