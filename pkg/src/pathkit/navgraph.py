"""Panorama navigation graphs, room graphs and shortest-path primitives."""
from __future__ import annotations

import heapq
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

# Distance returned when two panoramas are not connected.
UNREACHABLE = math.inf

DEFAULT_SPACING_M = 2.2
LEVEL_HEIGHT_M = 3.0


class GraphError(ValueError):
    """Raised for malformed or inconsistent navigation graph input."""


@dataclass(frozen=True)
class PanoNode:
    id: str
    position: Tuple[float, float, float]
    room_id: str
    level_id: int

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise GraphError(f"node {self.id!r}: position must be 3 finite numbers")
        object.__setattr__(self, "position", pos)
        if not self.room_id:
            raise GraphError(f"node {self.id!r}: missing room_id")


def _edge_key(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class PanoGraph:
    """Undirected panorama graph. Edges are stored once as sorted id pairs.

    Edge weights are always the Euclidean distance between node positions.
    """

    building_id: str
    nodes: Tuple[PanoNode, ...]
    edges: FrozenSet[Tuple[str, str]]
    _index: Dict[str, PanoNode] = field(init=False, repr=False)
    _adj: Dict[str, Tuple[str, ...]] = field(init=False, repr=False)

    def __init__(self, building_id: str, nodes: Iterable[PanoNode], edges: Iterable[Sequence[str]]):
        nodes = tuple(sorted(nodes, key=lambda n: n.id))
        index: Dict[str, PanoNode] = {}
        for n in nodes:
            if n.id in index:
                raise GraphError(f"duplicate node id {n.id!r}")
            index[n.id] = n
        keys = set()
        adj = defaultdict(set)
        for e in edges:
            if len(e) != 2:
                raise GraphError(f"edge {e!r} must have exactly two endpoints")
            a, b = e
            for end in (a, b):
                if end not in index:
                    raise GraphError(f"edge ({a!r}, {b!r}) has dangling endpoint {end!r}")
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            keys.add(_edge_key(a, b))
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "building_id", str(building_id))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(keys))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", {n.id: tuple(sorted(adj.get(n.id, ()))) for n in nodes})

    def __eq__(self, other):
        if not isinstance(other, PanoGraph):
            return NotImplemented
        return (self.building_id, self.nodes, self.edges) == (other.building_id, other.nodes, other.edges)

    def __hash__(self):
        return hash((self.building_id, self.nodes, self.edges))

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: str) -> PanoNode:
        try:
            return self._index[node_id]
        except KeyError:
            raise GraphError(f"unknown node id {node_id!r}") from None

    def neighbors(self, node_id: str) -> Tuple[str, ...]:
        """Neighbor ids in ascending order."""
        self.node(node_id)
        return self._adj[node_id]

    def has_edge(self, a: str, b: str) -> bool:
        return _edge_key(a, b) in self.edges

    def position(self, node_id: str) -> np.ndarray:
        return np.asarray(self.node(node_id).position, dtype=float)

    def edge_length(self, a: str, b: str) -> float:
        pa = self.node(a).position
        pb = self.node(b).position
        return math.dist(pa, pb)

    def positions(self, node_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.node(n).position for n in node_ids], dtype=float).reshape(-1, 3)

    def to_dict(self) -> dict:
        return {
            "building_id": self.building_id,
            "nodes": [
                {"id": n.id, "position": list(n.position), "room_id": n.room_id, "level_id": n.level_id}
                for n in self.nodes
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }


def pano_graph_from_dict(doc: dict) -> PanoGraph:
    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")
    try:
        building_id = doc["building_id"]
        raw_nodes = doc["nodes"]
        raw_edges = doc["edges"]
    except KeyError as e:
        raise GraphError(f"graph document missing field {e.args[0]!r}") from None
    nodes = []
    for raw in raw_nodes:
        for key in ("id", "position", "room_id", "level_id"):
            if key not in raw or raw[key] is None:
                raise GraphError(f"node {raw.get('id')!r} missing field {key!r}")
        level = raw["level_id"]
        if isinstance(level, bool) or not isinstance(level, int):
            raise GraphError(f"node {raw['id']!r}: level_id must be an integer")
        try:
            nodes.append(PanoNode(str(raw["id"]), tuple(raw["position"]), str(raw["room_id"]), level))
        except (TypeError, ValueError) as e:
            if isinstance(e, GraphError):
                raise
            raise GraphError(f"node {raw['id']!r}: bad position {raw['position']!r}") from None
    return PanoGraph(str(building_id), nodes, [tuple(map(str, e)) for e in raw_edges])


def load_pano_graph(document: str) -> PanoGraph:
    """Parse and validate a JSON graph document (the text, not a path)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise GraphError(f"graph document is not valid JSON: {e}") from None
    return pano_graph_from_dict(doc)


def dump_pano_graph(g: PanoGraph) -> str:
    return json.dumps(g.to_dict())


# ---------------------------------------------------------------------------
# shortest paths


def dijkstra(
    source: str,
    successors: Callable[[str], Iterable[Tuple[str, float]]],
    target: Optional[str] = None,
) -> Tuple[Dict[str, float], Dict[str, str]]:
    """Single-source Dijkstra over an arbitrary successor function.

    Nodes are popped in (distance, id) order so predecessor trees are
    reproducible. Stops early once ``target`` is settled.
    """
    dist = {source: 0.0}
    prev: Dict[str, str] = {}
    done = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == target:
            break
        for v, w in successors(u):
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, prev


def _walk_back(prev: Dict[str, str], source: str, target: str) -> List[str]:
    path = [target]
    while path[-1] != source:
        path.append(prev[path[-1]])
    return path[::-1]


def _undirected_successors(g: PanoGraph):
    return lambda u: ((v, g.edge_length(u, v)) for v in g.neighbors(u))


def shortest_path(g: PanoGraph, source: str, target: str) -> Optional[List[str]]:
    """Minimum-weight node sequence from source to target, or None if disconnected."""
    g.node(source)
    g.node(target)
    dist, prev = dijkstra(source, _undirected_successors(g), target)
    if target not in dist:
        return None
    return _walk_back(prev, source, target)


def geodesic_distance(g: PanoGraph, source: str, target: str) -> float:
    """Shortest-path distance in meters; ``UNREACHABLE`` if disconnected."""
    g.node(source)
    g.node(target)
    if source == target:
        return 0.0
    # search from the smaller id so d(a, b) and d(b, a) sum in the same order
    source, target = min(source, target), max(source, target)
    dist, _ = dijkstra(source, _undirected_successors(g), target)
    return dist.get(target, UNREACHABLE)


def path_length(g: PanoGraph, nodes: Sequence[str]) -> float:
    if len(nodes) == 0:
        raise GraphError("path must contain at least one node")
    g.node(nodes[0])
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        if not g.has_edge(a, b):
            raise GraphError(f"consecutive nodes {a!r} and {b!r} are not adjacent")
        total += g.edge_length(a, b)
    return total


# ---------------------------------------------------------------------------
# room graph


@dataclass(frozen=True)
class RoomVertex:
    id: str
    source_room_id: str
    level_id: int
    panos: FrozenSet[str]


@dataclass(frozen=True)
class RoomGraph:
    vertices: Tuple[RoomVertex, ...]
    edges: FrozenSet[Tuple[str, str]]
    # pano id -> containing room vertex id
    pano_room: Dict[str, str] = field(compare=False, repr=False)

    def vertex(self, vid: str) -> RoomVertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise GraphError(f"unknown room vertex {vid!r}")

    def vertex_map(self) -> Dict[str, RoomVertex]:
        return {v.id: v for v in self.vertices}

    def neighbors(self, vid: str) -> List[str]:
        out = []
        for a, b in self.edges:
            if a == vid:
                out.append(b)
            elif b == vid:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> Dict[str, List[str]]:
        adj = {v.id: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {k: sorted(v) for k, v in adj.items()}


def connected_components(nodes: Iterable[str], neighbors: Callable[[str], Iterable[str]]) -> List[List[str]]:
    """Components of the subgraph induced by ``nodes``, each sorted, ordered by smallest member."""
    members = set(nodes)
    seen = set()
    comps = []
    for start in sorted(members):
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        stack = [start]
        while stack:
            u = stack.pop()
            for v in neighbors(u):
                if v in members and v not in seen:
                    seen.add(v)
                    comp.append(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def _majority_level(levels: List[int]) -> int:
    counts = Counter(levels)
    best = max(counts.values())
    return min(lvl for lvl, c in counts.items() if c == best)


def build_room_graph(g: PanoGraph) -> RoomGraph:
    by_room: Dict[str, List[str]] = defaultdict(list)
    for n in g.nodes:
        by_room[n.room_id].append(n.id)

    vertices = []
    pano_room = {}
    for room_id in sorted(by_room):
        for idx, comp in enumerate(connected_components(by_room[room_id], g.neighbors)):
            vid = f"{room_id}:{idx}"
            level = _majority_level([g.node(p).level_id for p in comp])
            vertices.append(RoomVertex(vid, room_id, level, frozenset(comp)))
            for p in comp:
                pano_room[p] = vid

    edges = set()
    for a, b in g.edges:
        ra, rb = pano_room[a], pano_room[b]
        if ra != rb:
            edges.add(_edge_key(ra, rb))
    return RoomGraph(tuple(vertices), frozenset(edges), pano_room)


# ---------------------------------------------------------------------------
# synthetic houses


def _room_block(panos_per_room: int) -> Tuple[int, int]:
    cols = math.ceil(math.sqrt(panos_per_room))
    rows = math.ceil(panos_per_room / cols)
    return cols, rows


def generate_synthetic_house(
    rooms_per_level: int,
    panos_per_room: int,
    levels: int = 1,
    spacing: float = DEFAULT_SPACING_M,
    seed: int = 0,
    building_id: Optional[str] = None,
) -> PanoGraph:
    """Build a grid-of-rooms house for desk-scale experiments.

    Rooms on each level are laid out on a near-square grid of blocks; the
    panoramas of a room fill a small grid (row-major, 4-connected). Each pair
    of grid-adjacent rooms gets one door edge, chosen at random among the
    facing pano pairs. Levels are stacked ``LEVEL_HEIGHT_M`` apart and joined
    by a stair edge between the first panorama of room 0 on each level.
    Positions are jittered by up to 10% of ``spacing``.
    """
    if rooms_per_level < 1 or panos_per_room < 1 or levels < 1:
        raise GraphError("rooms_per_level, panos_per_room and levels must all be >= 1")
    if not spacing > 0:
        raise GraphError("spacing must be > 0")
    rng = np.random.default_rng(seed)
    building_id = building_id or f"synth-{seed}"

    room_cols = math.ceil(math.sqrt(rooms_per_level))
    cols, rows = _room_block(panos_per_room)
    jitter = 0.1 * spacing

    nodes = []
    edges = []
    cell_of = {}  # (level, room, col, row) -> node id

    for lvl in range(levels):
        for r in range(rooms_per_level):
            bx, by = r % room_cols, r // room_cols
            room_id = f"L{lvl}-R{r:02d}"
            for k in range(panos_per_room):
                i, j = k % cols, k // cols
                nid = f"L{lvl}-R{r:02d}-P{k:02d}"
                x = (bx * cols + i) * spacing + rng.uniform(-jitter, jitter)
                y = (by * rows + j) * spacing + rng.uniform(-jitter, jitter)
                z = lvl * LEVEL_HEIGHT_M
                nodes.append(PanoNode(nid, (round(x, 6), round(y, 6), z), room_id, lvl))
                cell_of[(lvl, r, i, j)] = nid
                if i > 0:
                    edges.append((cell_of[(lvl, r, i - 1, j)], nid))
                if j > 0:
                    edges.append((cell_of[(lvl, r, i, j - 1)], nid))

        for r in range(rooms_per_level):
            bx, by = r % room_cols, r // room_cols
            # east neighbor: same block row, next column
            east = r + 1
            if bx + 1 < room_cols and east < rooms_per_level:
                pairs = [
                    (cell_of[(lvl, r, cols - 1, j)], cell_of[(lvl, east, 0, j)])
                    for j in range(rows)
                    if (lvl, r, cols - 1, j) in cell_of and (lvl, east, 0, j) in cell_of
                ]
                edges.append(pairs[rng.integers(len(pairs))])
            north = r + room_cols
            if north < rooms_per_level:
                top = max(j for (l2, r2, _, j) in cell_of if l2 == lvl and r2 == r)
                pairs = [
                    (cell_of[(lvl, r, i, top)], cell_of[(lvl, north, i, 0)])
                    for i in range(cols)
                    if (lvl, r, i, top) in cell_of and (lvl, north, i, 0) in cell_of
                ]
                edges.append(pairs[rng.integers(len(pairs))])

        if lvl > 0:
            edges.append((cell_of[(lvl - 1, 0, 0, 0)], cell_of[(lvl, 0, 0, 0)]))

    return PanoGraph(building_id, nodes, edges)
