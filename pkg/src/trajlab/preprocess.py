"""Filtering of broken trajectories and fixed-length resampling.

Tracker output contains fragments: tracks that appear mid-scene after an
occlusion, vanish after a handful of frames, or never move. The filter
makes the discard criteria explicit and attributable so that every input
trajectory is accounted for in the final report.

Resampling converts each trajectory to exactly K points spaced uniformly
in arc length. Shape comparison then operates on equal-length sequences,
and queuing time (many samples at one spot) no longer dominates distances;
durations are computed from raw timestamps elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .geometry import Trajectory, TrajectorySet, cumulative_arclength

DEFAULT_K = 64


@dataclass(frozen=True)
class FilterParams:
    """Criteria separating usable trajectories from broken fragments.

    Pixel values are interpreted in the coordinate units of the set being
    filtered; defaults are stated at 640x360 reference resolution.
    """

    min_points: int = 10
    min_path_length: float = 40.0
    max_time_gap: float = 2.0
    min_duration: float = 1.0

    def __post_init__(self):
        if self.min_points <= 0:
            raise ValidationError(f"min_points must be positive, got {self.min_points}")
        for name in ("min_path_length", "max_time_gap", "min_duration"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be positive and finite, got {v}")

    def rescaled(self, factor: float) -> "FilterParams":
        """Scale pixel-valued fields by `factor`; counts and times unchanged."""
        return replace(self, min_path_length=self.min_path_length * factor)


@dataclass(frozen=True)
class ResampledPath:
    """A trajectory reduced to K arc-length-uniform sample points."""

    source_id: str
    samples: np.ndarray  # (K, 2) float64, read-only

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValidationError(f"samples must be (K>=2, 2), got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def k(self) -> int:
        return self.samples.shape[0]


def _first_violation(traj: Trajectory, p: FilterParams) -> str | None:
    # Criteria checked in declaration order; the first hit names the reason.
    if len(traj) < p.min_points:
        return "min_points"
    if traj.path_length < p.min_path_length:
        return "min_path_length"
    t = traj.times
    if len(t) > 1 and float(np.max(np.diff(t))) > p.max_time_gap:
        return "max_time_gap"
    if traj.duration < p.min_duration:
        return "min_duration"
    return None


def filter_broken(tset: TrajectorySet, p: FilterParams) -> tuple[TrajectorySet, list[tuple[str, str]]]:
    """Partition a set into kept trajectories and (id, reason) discards."""
    kept = []
    discarded = []
    for traj in tset:
        reason = _first_violation(traj, p)
        if reason is None:
            kept.append(traj)
        else:
            discarded.append((traj.id, reason))
    return TrajectorySet(tuple(kept), tset.resolution, margin=tset.margin), discarded


def resample(traj: Trajectory, k: int = DEFAULT_K) -> ResampledPath:
    """Resample to k points uniform in arc length, endpoints preserved exactly."""
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if len(traj) < 2:
        raise ValidationError(f"trajectory {traj.id!r}: need >= 2 points to resample")
    xy = traj.xy
    # Collapse consecutive duplicates so the arc-length axis is strictly
    # increasing; stationary dwell contributes nothing to shape.
    keep = np.ones(len(xy), dtype=bool)
    keep[1:] = np.any(xy[1:] != xy[:-1], axis=1)
    pts = xy[keep]
    if len(pts) < 2:
        raise ValidationError(f"trajectory {traj.id!r}: degenerate geometry (zero path length)")
    cum = cumulative_arclength(pts)
    total = cum[-1]
    targets = np.linspace(0.0, total, k)
    out = np.empty((k, 2), dtype=np.float64)
    out[:, 0] = np.interp(targets, cum, pts[:, 0])
    out[:, 1] = np.interp(targets, cum, pts[:, 1])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return ResampledPath(traj.id, out)


def resample_all(tset: TrajectorySet, k: int = DEFAULT_K) -> list[ResampledPath]:
    """Resample every trajectory; single-point trajectories are rejected."""
    return [resample(t, k) for t in tset]
