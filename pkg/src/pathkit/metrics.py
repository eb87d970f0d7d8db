"""Episode metrics (PL, NE, SR, SPL, NDTW, SDTW), NDTW reward shaping and
follower-validation decisions."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .dtw import accumulated_cost
from .navgraph import PanoGraph, geodesic_distance, path_length
from .sampler import GuidePath

SUCCESS_THRESHOLD_M = 3.0


def dtw_cost(ref_pts, query_pts) -> float:
    """DTW distance between two point sequences with Euclidean local cost."""
    ref = np.asarray(ref_pts, dtype=float).reshape(len(ref_pts), -1)
    query = np.asarray(query_pts, dtype=float).reshape(len(query_pts), -1)
    if len(ref) == 0 or len(query) == 0:
        raise ValueError("dtw_cost needs two non-empty sequences")
    return float(accumulated_cost(cdist(ref, query))[-1, -1])


def ndtw(g: PanoGraph, reference: Sequence[str], executed: Sequence[str], d_th: float = SUCCESS_THRESHOLD_M) -> float:
    cost = dtw_cost(g.positions(reference), g.positions(executed))
    return math.exp(-cost / (len(reference) * d_th))


def navigation_error(g: PanoGraph, node: str, goal: str, euclidean: bool = False) -> float:
    if euclidean:
        return float(np.linalg.norm(g.position(node) - g.position(goal)))
    return geodesic_distance(g, node, goal)


@dataclass(frozen=True)
class Episode:
    reference: GuidePath
    executed: tuple
    graph: PanoGraph

    def __post_init__(self):
        executed = tuple(self.executed)
        object.__setattr__(self, "executed", executed)
        if not executed:
            raise ValueError("executed trajectory is empty")
        if executed[0] != self.reference.nodes[0]:
            raise ValueError(
                f"episode {self.reference.path_id!r}: executed starts at {executed[0]!r}, "
                f"reference at {self.reference.nodes[0]!r}"
            )
        path_length(self.graph, executed)  # adjacency check


@dataclass(frozen=True)
class MetricsReport:
    pl_m: float
    ne_m: float
    sr: float
    spl: float
    ndtw: float
    sdtw: float

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def evaluate_episode(ep: Episode, d_th: float = SUCCESS_THRESHOLD_M, ne_euclidean: bool = False) -> MetricsReport:
    ref = ep.reference
    if not ref.geodesic_m > 0:
        raise ValueError(f"reference {ref.path_id!r} has zero geodesic length")
    g = ep.graph
    pl = path_length(g, ep.executed)
    ne = navigation_error(g, ep.executed[-1], ref.nodes[-1], ne_euclidean)
    sr = 1.0 if ne <= d_th else 0.0
    spl = sr * ref.geodesic_m / max(pl, ref.geodesic_m)
    nd = ndtw(g, ref.nodes, ep.executed, d_th)
    return MetricsReport(pl_m=pl, ne_m=ne, sr=sr, spl=spl, ndtw=nd, sdtw=sr * nd)


def step_reward(
    g: PanoGraph,
    reference: Sequence[str],
    prefix: Sequence[str],
    prev_prefix: Sequence[str],
    stopped: bool = False,
    d_th: float = SUCCESS_THRESHOLD_M,
    w0: float = 1.0,
    w1: Optional[float] = None,
) -> float:
    """Change in NDTW from ``prev_prefix`` to ``prefix``; on stop, add ``w0 + w1 * NE``.

    ``w1`` defaults to ``-1 / d_th``.
    """
    if not prefix or not prev_prefix:
        raise ValueError("step_reward needs non-empty prefixes")
    r = ndtw(g, reference, prefix, d_th) - ndtw(g, reference, prev_prefix, d_th)
    if stopped:
        r += terminal_reward(navigation_error(g, prefix[-1], reference[-1]), d_th, w0, w1)
    return r


def terminal_reward(ne: float, d_th: float = SUCCESS_THRESHOLD_M, w0: float = 1.0, w1: Optional[float] = None) -> float:
    if w1 is None:
        w1 = -1.0 / d_th
    return w0 + w1 * ne


# ---------------------------------------------------------------------------
# follower validation


class Verdict(str, Enum):
    ACCEPT = "Accept"
    RETRY_FOLLOWER = "RetryFollower"
    REENQUEUE_PATH = "ReEnqueuePath"
    SELECT_BEST = "SelectBest"


@dataclass(frozen=True)
class FollowerAttempt:
    follower_sr: int
    sdtw: float


@dataclass(frozen=True)
class QADecision:
    verdict: Verdict
    selected_attempt: Optional[int] = None


def validate_annotation(attempts: Sequence[FollowerAttempt]) -> QADecision:
    """Decide what happens to a guide annotation given its follower attempts so far.

    One or two attempts belong to the first guide; a third attempt is the
    pairing of a re-enqueued guide with a fresh follower, at which point the
    pair with the highest SDTW wins (lowest index on ties).
    """
    if not attempts:
        raise ValueError("no follower attempts")
    if len(attempts) > 3:
        raise ValueError("at most three guide-follower pairs per path")
    if len(attempts) == 3:
        scores = [a.sdtw for a in attempts]
        return QADecision(Verdict.SELECT_BEST, scores.index(max(scores)))
    if attempts[0].follower_sr:
        return QADecision(Verdict.ACCEPT, 0)
    if len(attempts) == 1:
        return QADecision(Verdict.RETRY_FOLLOWER)
    if attempts[1].follower_sr:
        return QADecision(Verdict.ACCEPT, 1)
    return QADecision(Verdict.REENQUEUE_PATH)


# ---------------------------------------------------------------------------
# aggregation

PERCENT_METRICS = ("sr", "spl", "ndtw", "sdtw")


def aggregate(reports: Sequence[MetricsReport]) -> Dict[str, float]:
    """Mean of every metric; rate-like metrics are also given x100 (``*_pct``)."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    names = [f.name for f in fields(MetricsReport)]
    table = np.array([[getattr(r, n) for n in names] for r in reports], dtype=float)
    means = table.mean(axis=0)
    out: Dict[str, float] = {"episodes": len(reports)}
    for n, v in zip(names, means):
        out[n] = float(v)
    for n in PERCENT_METRICS:
        out[f"{n}_pct"] = 100.0 * out[n]
    return out
