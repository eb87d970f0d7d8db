"""Pose traces to per-step text / visual masks, and the attention-supervision loss."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .alignment import TimedInstruction

CANVAS_ASPECT = 640 / 480
DEFAULT_VFOV_RAD = math.radians(75.0)
DEFAULT_H = 96
DEFAULT_W = 192
YAW_BINS = 12
ELEVATION_BANDS = 3
POOLED_SIZE = YAW_BINS * ELEVATION_BANDS


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class PoseSample:
    time_s: float
    pano_id: str
    heading_rad: float  # 0 = +y, clockwise positive
    elevation_rad: float  # up positive
    vfov_rad: float = DEFAULT_VFOV_RAD

    def __post_init__(self):
        if not 0 < self.vfov_rad < math.pi:
            raise TraceError(f"vfov {self.vfov_rad} outside (0, pi)")
        if not -math.pi / 2 <= self.elevation_rad <= math.pi / 2:
            raise TraceError(f"elevation {self.elevation_rad} outside [-pi/2, pi/2]")

    def to_dict(self) -> dict:
        return {
            "time_s": self.time_s,
            "pano_id": self.pano_id,
            "heading_rad": self.heading_rad,
            "elevation_rad": self.elevation_rad,
            "vfov_rad": self.vfov_rad,
        }


@dataclass(frozen=True)
class PoseTrace:
    samples: Tuple[PoseSample, ...]
    path: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "path", tuple(self.path))
        if not self.samples:
            raise TraceError("pose trace has no samples")
        if not self.path:
            raise TraceError("pose trace has an empty path")
        times = [s.time_s for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise TraceError("sample times must be strictly increasing")
        object.__setattr__(self, "_steps", _sample_steps(self.samples, self.path))

    @property
    def sample_steps(self) -> Tuple[int, ...]:
        """Path index of each sample."""
        return self._steps


def _sample_steps(samples: Sequence[PoseSample], path: Sequence[str]) -> Tuple[int, ...]:
    k = 0
    out = []
    for s in samples:
        if s.pano_id != path[k]:
            try:
                k = path.index(s.pano_id, k + 1)
            except ValueError:
                raise TraceError(f"sample at t={s.time_s} on {s.pano_id!r} breaks the path order") from None
        out.append(k)
    return tuple(out)


def step_windows(trace: PoseTrace) -> List[Tuple[int, float, float]]:
    """(step, start, end) per path position.

    Step t ends when the first sample beyond path[t] appears; the last step
    ends at the final sample. Windows are half-open except the last.
    """
    times = [s.time_s for s in trace.samples]
    steps = trace.sample_steps
    out = []
    start = times[0]
    for t in range(len(trace.path)):
        end = next((tm for tm, k in zip(times, steps) if k > t), times[-1])
        out.append((t, start, end))
        start = end
    return out


def _check_step(trace: PoseTrace, t: int):
    if not 0 <= t < len(trace.path):
        raise TraceError(f"step {t} outside path of length {len(trace.path)}")


def text_mask(instr: TimedInstruction, trace: PoseTrace, t: int) -> np.ndarray:
    """b_t: tokens finished by the end of step t."""
    _check_step(trace, t)
    end = step_windows(trace)[t][2]
    return np.array([tok.end_s <= end for tok in instr.tokens], dtype=np.uint8)


def pixel_directions(h: int, w: int) -> Tuple[np.ndarray, np.ndarray]:
    """Elevation and yaw (radians) at cell centers; row 0 is the top of the panorama."""
    el = math.pi / 2 - (np.arange(h) + 0.5) * math.pi / h
    yaw = (np.arange(w) + 0.5) * 2 * math.pi / w
    return np.meshgrid(el, yaw, indexing="ij")


def frustum_coverage(samples: Sequence[PoseSample], h: int, w: int, aspect: float = CANVAS_ASPECT) -> np.ndarray:
    """Union of the view frusta of ``samples`` rasterized on an h x w equirectangular grid."""
    if h < 1 or w < 1:
        raise ValueError("mask resolution must be at least 1x1")
    el, yaw = pixel_directions(h, w)
    d = np.stack([np.cos(el) * np.sin(yaw), np.cos(el) * np.cos(yaw), np.sin(el)], axis=-1)
    mask = np.zeros((h, w), dtype=bool)
    for s in samples:
        ch, sh = math.cos(s.heading_rad), math.sin(s.heading_rad)
        ce, se = math.cos(s.elevation_rad), math.sin(s.elevation_rad)
        forward = np.array([ce * sh, ce * ch, se])
        right = np.array([ch, -sh, 0.0])
        up = np.array([-se * sh, -se * ch, ce])
        f = d @ forward
        tan_v = math.tan(s.vfov_rad / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (d @ right) / f
            y = (d @ up) / f
        mask |= (f > 0) & (np.abs(x) <= aspect * tan_v) & (np.abs(y) <= tan_v)
    return mask.astype(np.uint8)


def visual_mask(
    trace: PoseTrace,
    t: int,
    h: int = DEFAULT_H,
    w: int = DEFAULT_W,
    aspect: float = CANVAS_ASPECT,
) -> np.ndarray:
    """M_t: pixels seen at viewpoint path[t] up to the end of step t."""
    _check_step(trace, t)
    end = step_windows(trace)[t][2]
    node = trace.path[t]
    seen = [s for s in trace.samples if s.pano_id == node and s.time_s <= end]
    return frustum_coverage(seen, h, w, aspect)


def pool_mask(mask: np.ndarray) -> np.ndarray:
    """Max-pool an equirectangular mask into 36 bins.

    Yaw bins are [30j, 30j + 30) degrees; elevation bands are centered at
    -30, 0 and +30 degrees, with anything beyond +-45 folded into the outer
    bands. Index = band * 12 + yaw_bin, bands ordered low to high.
    """
    mask = np.asarray(mask)
    h, w = mask.shape
    el_deg = 90.0 - (np.arange(h) + 0.5) * 180.0 / h
    band = np.where(el_deg < -15.0, 0, np.where(el_deg < 15.0, 1, 2))
    yaw_bin = np.minimum(((np.arange(w) + 0.5) * YAW_BINS / w).astype(int), YAW_BINS - 1)
    out = np.zeros((ELEVATION_BANDS, YAW_BINS), dtype=np.uint8)
    for b in range(ELEVATION_BANDS):
        rows = mask[band == b]
        if rows.size == 0:
            continue
        col_any = rows.max(axis=0)
        np.maximum.at(out[b], yaw_bin, col_any)
    return out.reshape(-1)


def observed_fraction(mask: np.ndarray) -> float:
    """Share of raster cells observed (not solid-angle weighted)."""
    return float(np.mean(mask))


# ---------------------------------------------------------------------------
# loss


def _check_loss_inputs(z, m):
    z = np.asarray(z, dtype=float)
    m = np.asarray(m)
    if z.shape != m.shape or z.ndim != 1:
        raise ValueError(f"logits {z.shape} and mask {m.shape} must be equal-length vectors")
    keep = m.astype(bool)
    if not keep.any():
        raise ValueError("mask has no set bits; loss is undefined")
    return z, keep


def _logsumexp(x: np.ndarray) -> float:
    top = x.max()
    return float(top + np.log(np.exp(x - top).sum()))


def grounding_loss(z, m) -> float:
    """log sum exp(z) - log sum over set mask bits of exp(z)."""
    z, keep = _check_loss_inputs(z, m)
    if keep.all():
        return 0.0
    return max(0.0, _logsumexp(z) - _logsumexp(z[keep]))


def grounding_loss_grad(z, m) -> np.ndarray:
    z, keep = _check_loss_inputs(z, m)
    p = np.exp(z - z.max())
    p /= p.sum()
    q = np.zeros_like(z)
    zk = z[keep]
    e = np.exp(zk - zk.max())
    q[keep] = e / e.sum()
    return p - q
