"""Simple non-learned navigation baselines."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .navgraph import PanoGraph

RXR_STEPS = 8
R2R_STEPS = 5
# give up on "straight" once the best turn exceeds this
MAX_TURN_RAD = math.pi / 2
_FLAT_EPS = 1e-9


class Policy(str, Enum):
    RANDOM_WALK = "random-walk"
    RANDOM_STRAIGHT = "random-straight"
    ORACLE_STRAIGHT = "oracle-straight"


@dataclass(frozen=True)
class PolicyRun:
    policy: Policy
    steps: int
    seed: int
    executed: tuple


def bearing(g: PanoGraph, a: str, b: str) -> Optional[float]:
    """Horizontal bearing a->b (0 = +y, clockwise), None for a vertical move."""
    pa, pb = g.node(a).position, g.node(b).position
    dx, dy = pb[0] - pa[0], pb[1] - pa[1]
    if math.hypot(dx, dy) < _FLAT_EPS:
        return None
    return math.atan2(dx, dy) % (2 * math.pi)


def angle_diff(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def go_straight_step(g: PanoGraph, current: str, heading: float) -> Optional[str]:
    """Neighbor requiring the smallest turn from ``heading``; None (stop) if every turn exceeds 90 degrees."""
    best, best_turn = None, None
    for nb in g.neighbors(current):  # ascending id, so ties keep the smallest
        b = bearing(g, current, nb)
        turn = 0.0 if b is None else angle_diff(heading, b)
        if best_turn is None or turn < best_turn:
            best, best_turn = nb, turn
    if best is None or best_turn > MAX_TURN_RAD:
        return None
    return best


def _go_straight(g: PanoGraph, path: List[str], heading: float, n_steps: int) -> List[str]:
    while len(path) - 1 < n_steps:
        nxt = go_straight_step(g, path[-1], heading)
        if nxt is None:
            break
        b = bearing(g, path[-1], nxt)
        if b is not None:
            heading = b
        path.append(nxt)
    return path


def run_random_walk(g: PanoGraph, start: str, n_steps: int, rng: np.random.Generator) -> List[str]:
    path = [start]
    for _ in range(n_steps):
        nbs = g.neighbors(path[-1])
        if not nbs:
            break
        path.append(nbs[rng.integers(len(nbs))])
    return path


def run_random_heading_straight(g: PanoGraph, start: str, n_steps: int, rng: np.random.Generator) -> List[str]:
    g.node(start)
    heading = rng.uniform(0.0, 2 * math.pi)
    return _go_straight(g, [start], heading, n_steps)


def run_oracle_first_step_straight(g: PanoGraph, reference: Sequence[str], n_steps: int) -> List[str]:
    if len(reference) < 2:
        raise ValueError("reference must have at least two nodes")
    start, first = reference[0], reference[1]
    if n_steps < 1:
        return [start]
    if not g.has_edge(start, first):
        raise ValueError(f"reference step {start!r}->{first!r} is not an edge")
    heading = bearing(g, start, first)
    path = [start, first]
    if heading is None:
        # vertical first move: no horizontal direction to keep
        return path
    return _go_straight(g, path, heading, n_steps)


def episode_rng(seed: int, path_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(path_id.encode("utf-8"))])


def run_policy(policy, g: PanoGraph, reference: Sequence[str], n_steps: int = RXR_STEPS, seed: int = 0, path_id: str = "") -> PolicyRun:
    policy = Policy(policy)
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    rng = episode_rng(seed, path_id)
    start = reference[0]
    if policy is Policy.RANDOM_WALK:
        executed = run_random_walk(g, start, n_steps, rng)
    elif policy is Policy.RANDOM_STRAIGHT:
        executed = run_random_heading_straight(g, start, n_steps, rng)
    else:
        executed = run_oracle_first_step_straight(g, reference, n_steps)
    return PolicyRun(policy, n_steps, seed, tuple(executed))
