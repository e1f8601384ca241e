"""Core trajectory types and planar geometry primitives.

Coordinates are continuous pixels in the camera image plane (y grows
downward, subpixel values allowed); time is seconds from the start of
the recording. Everything here is immutable and side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import ValidationError


def _xy(p) -> tuple[float, float]:
    """Accept a TrackPoint or any (x, y) sequence."""
    if isinstance(p, TrackPoint):
        return (p.x, p.y)
    return (float(p[0]), float(p[1]))


@dataclass(frozen=True)
class TrackPoint:
    """One tracked observation: pixel position plus timestamp in seconds."""

    x: float
    y: float
    t: float

    def __post_init__(self):
        # normalize numpy scalars etc. so downstream repr/serialization is uniform
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "t", float(self.t))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"coordinates must be finite, got ({self.x}, {self.y})")
        if not math.isfinite(self.t) or self.t < 0:
            raise ValidationError(f"time must be finite and >= 0, got {self.t}")


@dataclass(frozen=True)
class Trajectory:
    """An ordered sequence of TrackPoints for one tracked road user."""

    id: str
    points: tuple[TrackPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValidationError(f"trajectory {self.id!r} has no points")
        ts = [p.t for p in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError(f"trajectory {self.id!r}: timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def first(self) -> TrackPoint:
        return self.points[0]

    @property
    def last(self) -> TrackPoint:
        return self.points[-1]

    @property
    def duration(self) -> float:
        """Time on screen: last minus first observation, seconds."""
        return self.points[-1].t - self.points[0].t

    @cached_property
    def xy(self) -> np.ndarray:
        """(n, 2) float64 view of the coordinates."""
        a = np.array([(p.x, p.y) for p in self.points], dtype=np.float64)
        a.flags.writeable = False
        return a

    @cached_property
    def times(self) -> np.ndarray:
        a = np.array([p.t for p in self.points], dtype=np.float64)
        a.flags.writeable = False
        return a

    @cached_property
    def path_length(self) -> float:
        """Total piecewise-linear length in pixels."""
        if len(self.points) < 2:
            return 0.0
        d = np.diff(self.xy, axis=0)
        return float(np.sqrt((d * d).sum(axis=1)).sum())

    @classmethod
    def from_arrays(cls, traj_id: str, xy: np.ndarray, t: np.ndarray) -> "Trajectory":
        pts = tuple(TrackPoint(float(x), float(y), float(ti)) for (x, y), ti in zip(xy, t))
        return cls(traj_id, pts)


@dataclass(frozen=True)
class TrajectorySet:
    """A collection of trajectories expressed in one pixel resolution.

    Coordinates slightly outside the frame are tolerated up to `margin`
    (a fraction of each dimension) because trackers emit out-of-frame
    positions near the image edges; anything beyond that is rejected.
    """

    trajectories: tuple[Trajectory, ...]
    resolution: tuple[int, int]
    margin: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "resolution", (int(self.resolution[0]), int(self.resolution[1])))
        w, h = self.resolution
        if w <= 0 or h <= 0:
            raise ValidationError(f"resolution must be positive, got {self.resolution}")
        seen: set[str] = set()
        for traj in self.trajectories:
            if traj.id in seen:
                raise ValidationError(f"duplicate trajectory id {traj.id!r}")
            seen.add(traj.id)
        mx, my = w * self.margin, h * self.margin
        for traj in self.trajectories:
            for p in traj.points:
                if not (-mx <= p.x <= w + mx and -my <= p.y <= h + my):
                    raise ValidationError(
                        f"trajectory {traj.id!r}: point ({p.x}, {p.y}) outside "
                        f"[{-mx}, {w + mx}] x [{-my}, {h + my}] at resolution {w}x{h}"
                    )

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self.trajectories)

    @cached_property
    def by_id(self) -> dict:
        return {t.id: t for t in self.trajectories}

    def get(self, traj_id: str) -> Trajectory:
        try:
            return self.by_id[traj_id]
        except KeyError:
            raise ValidationError(f"unknown trajectory id {traj_id!r}") from None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.trajectories)


@dataclass(frozen=True)
class Polyline:
    """An open piecewise-linear curve with at least two vertices."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValidationError(f"polyline needs >= 2 vertices, got {len(verts)}")
        for i, (a, b) in enumerate(zip(verts, verts[1:])):
            if a == b:
                raise ValidationError(f"polyline has zero-length segment at index {i}")

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def as_array(self) -> np.ndarray:
        a = np.array(self.vertices, dtype=np.float64)
        a.flags.writeable = False
        return a


def euclidean(a, b) -> float:
    """Euclidean distance between two points (TrackPoints or (x, y) pairs)."""
    ax, ay = _xy(a)
    bx, by = _xy(b)
    dx = ax - bx
    dy = ay - by
    return math.sqrt(dx * dx + dy * dy)


def arc_length(p: "Polyline | Sequence | np.ndarray") -> float:
    """Total length of a polyline (or raw vertex sequence) in pixels."""
    xy = p.as_array if isinstance(p, Polyline) else np.asarray(p, dtype=np.float64)
    if len(xy) < 2:
        return 0.0
    d = np.diff(xy, axis=0)
    return float(np.sqrt((d * d).sum(axis=1)).sum())


def cumulative_arclength(xy: np.ndarray) -> np.ndarray:
    """Arc length from the first vertex to each vertex, starting at 0."""
    d = np.diff(np.asarray(xy, dtype=np.float64), axis=0)
    seg = np.sqrt((d * d).sum(axis=1))
    return np.concatenate(([0.0], np.cumsum(seg)))


def point_segment_distance(q, a, b) -> float:
    """Distance from point q to the closed segment a-b."""
    qx, qy = _xy(q)
    ax, ay = _xy(a)
    bx, by = _xy(b)
    vx, vy = bx - ax, by - ay
    wx, wy = qx - ax, qy - ay
    vv = vx * vx + vy * vy
    if vv <= 0.0:
        return math.sqrt(wx * wx + wy * wy)
    t = (wx * vx + wy * vy) / vv
    if t <= 0.0:
        cx, cy = ax, ay
    elif t >= 1.0:
        cx, cy = bx, by
    else:
        cx, cy = ax + t * vx, ay + t * vy
    dx, dy = qx - cx, qy - cy
    return math.sqrt(dx * dx + dy * dy)


def point_to_polyline(q, p: Polyline) -> float:
    """Minimum distance from q to any point on the polyline (segment interiors included)."""
    verts = p.vertices if isinstance(p, Polyline) else [(_xy(v)) for v in p]
    return min(point_segment_distance(q, a, b) for a, b in zip(verts, verts[1:]))


def points_to_polyline(xy: np.ndarray, p: Polyline) -> np.ndarray:
    """Vectorized point_to_polyline for an (n, 2) array of points."""
    pts = np.asarray(xy, dtype=np.float64)
    verts = p.as_array
    a = verts[:-1]            # (m, 2)
    v = verts[1:] - a         # (m, 2)
    vv = (v * v).sum(axis=1)  # (m,)
    w = pts[:, None, :] - a[None, :, :]           # (n, m, 2)
    # vv can underflow to 0 for tiny segments; project onto the first endpoint then
    safe_vv = np.where(vv > 0.0, vv, 1.0)
    t = (w * v[None, :, :]).sum(axis=2) / safe_vv  # (n, m)
    t = np.clip(np.where(vv > 0.0, t, 0.0), 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * v[None, :, :]
    d = pts[:, None, :] - proj
    return np.sqrt((d * d).sum(axis=2)).min(axis=1)


def _cross(ox, oy, ax, ay, bx, by) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_segment(px, py, ax, ay, bx, by) -> bool:
    """True when (px, py) lies on the closed segment a-b (exact arithmetic test)."""
    if _cross(ax, ay, bx, by, px, py) != 0.0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(p1, p2, p3, p4) -> bool:
    """True when closed segments p1-p2 and p3-p4 share at least one point."""
    x1, y1 = _xy(p1)
    x2, y2 = _xy(p2)
    x3, y3 = _xy(p3)
    x4, y4 = _xy(p4)
    d1 = _cross(x3, y3, x4, y4, x1, y1)
    d2 = _cross(x3, y3, x4, y4, x2, y2)
    d3 = _cross(x1, y1, x2, y2, x3, y3)
    d4 = _cross(x1, y1, x2, y2, x4, y4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_segment(x1, y1, x3, y3, x4, y4):
        return True
    if d2 == 0 and _on_segment(x2, y2, x3, y3, x4, y4):
        return True
    if d3 == 0 and _on_segment(x3, y3, x1, y1, x2, y2):
        return True
    if d4 == 0 and _on_segment(x4, y4, x1, y1, x2, y2):
        return True
    return False


def polygon_is_simple(ring: Sequence) -> bool:
    """Check that a closed ring (no repeated last vertex) does not self-intersect.

    Adjacent edges may only touch at their shared vertex; non-adjacent
    edges may not touch at all.
    """
    verts = [_xy(v) for v in ring]
    n = len(verts)
    if n < 3:
        return False
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    if any(a == b for a, b in edges):
        return False
    for i in range(n):
        for j in range(i + 1, n):
            (a, b), (c, d) = edges[i], edges[j]
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                # Shared vertex allowed; any further contact means a spike or fold.
                if j == i + 1:
                    if _on_segment(*d, *a, *b) or _on_segment(*a, *c, *d):
                        return False
                else:  # edges (v0, v1) and (v_{n-1}, v0)
                    if _on_segment(*c, *a, *b) or _on_segment(*b, *c, *d):
                        return False
            elif segments_intersect(a, b, c, d):
                return False
    return True


def point_in_polygon(q, ring: Sequence) -> bool:
    """Ray-casting containment test; points on the boundary count as outside."""
    qx, qy = _xy(q)
    verts = [_xy(v) for v in ring]
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if _on_segment(qx, qy, ax, ay, bx, by):
            return False
    inside = False
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if (ay > qy) != (by > qy):
            x_int = ax + (qy - ay) * (bx - ax) / (by - ay)
            if qx < x_int:
                inside = not inside
    return inside


def points_in_polygon(xy: np.ndarray, ring: Sequence) -> np.ndarray:
    """Vectorized point_in_polygon: boolean array for an (n, 2) point set.

    Agrees with the scalar version point for point (same edge arithmetic,
    boundary counts as outside).
    """
    pts = np.asarray(xy, dtype=np.float64)
    verts = np.asarray([_xy(v) for v in ring], dtype=np.float64)
    a = verts
    b = np.roll(verts, -1, axis=0)
    qx = pts[:, 0][:, None]
    qy = pts[:, 1][:, None]
    ax, ay = a[:, 0][None, :], a[:, 1][None, :]
    bx, by = b[:, 0][None, :], b[:, 1][None, :]
    cross = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
    on_edge = (
        (cross == 0.0)
        & (np.minimum(ax, bx) <= qx)
        & (qx <= np.maximum(ax, bx))
        & (np.minimum(ay, by) <= qy)
        & (qy <= np.maximum(ay, by))
    )
    straddle = (ay > qy) != (by > qy)
    denom = np.where(straddle, by - ay, 1.0)
    x_int = ax + (qy - ay) * (bx - ax) / denom
    crossings = (straddle & (qx < x_int)).sum(axis=1)
    return ((crossings % 2) == 1) & ~on_edge.any(axis=1)
