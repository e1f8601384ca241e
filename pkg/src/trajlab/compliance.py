"""Scoring of observed paths against the designed infrastructure.

A path-cluster is compliant when its medoid stays inside a corridor of
half-width tau around some designed path for at least the configured
fraction of its samples. Aggregating cluster verdicts over members gives
mismatch fractions per SD pair and scene-wide. Durations, forbidden-zone
events and raw endpoint queries operate on the original timestamped
trajectories, not the resampled shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import TrajectorySet, points_in_polygon, points_to_polyline
from .ingest import DesignedPath, SceneSpec, Zone
from .pathcluster import PathCluster
from .preprocess import ResampledPath

NO_DESIGNED_PATH = "no designed path"
ABOVE_THRESHOLD = "deviation above threshold"


@dataclass(frozen=True)
class ComplianceParams:
    """Corridor test and zone-event parameters.

    deviation_threshold (tau) is stated at 640x360 reference resolution;
    deviation_quantile is the fraction of samples that must fall within
    tau of a designed path; zone_min_points is the number of consecutive
    inside points required before a zone event is counted (suppresses
    single-frame tracker jitter).
    """

    deviation_threshold: float = 12.0
    deviation_quantile: float = 0.9
    zone_min_points: int = 3

    def __post_init__(self):
        if not (self.deviation_threshold > 0 and math.isfinite(self.deviation_threshold)):
            raise ValidationError(f"deviation_threshold must be positive, got {self.deviation_threshold}")
        if not (0.0 < self.deviation_quantile <= 1.0):
            raise ValidationError(f"deviation_quantile must be in (0, 1], got {self.deviation_quantile}")
        if self.zone_min_points < 1:
            raise ValidationError(f"zone_min_points must be >= 1, got {self.zone_min_points}")

    def rescaled(self, factor: float) -> "ComplianceParams":
        from dataclasses import replace

        return replace(self, deviation_threshold=self.deviation_threshold * factor)


@dataclass(frozen=True)
class DeviationStats:
    """Per-sample distance summary of one path against one design."""

    max_dev: float
    quantile_dev: float
    within_fraction: float


@dataclass(frozen=True)
class ClusterVerdict:
    compliant: bool
    matched_design: str | None
    reason: str | None
    stats: DeviationStats | None


@dataclass(frozen=True)
class DurationStats:
    mean: float
    median: float
    min: float
    max: float


@dataclass(frozen=True)
class ZoneEvent:
    traj_id: str
    zone: str
    first_entry_t: float


@dataclass(frozen=True)
class PathClusterRow:
    """One report line: a path-cluster with verdict and duration stats."""

    sd_label: int
    sd_name: str
    path_index: int
    size: int
    medoid_id: str
    compliant: bool
    matched_design: str | None
    reason: str | None
    max_dev: float | None
    within_fraction: float | None
    durations: DurationStats


@dataclass(frozen=True)
class SDPairRow:
    sd_label: int
    sd_name: str
    size: int
    compliant_members: int
    noncompliant_members: int
    mismatch_fraction: float


@dataclass(frozen=True)
class ComplianceReport:
    """Scene-level compliance summary; counts are exactly conserved."""

    rows: tuple[PathClusterRow, ...]
    sd_pairs: tuple[SDPairRow, ...]
    zone_events: tuple[ZoneEvent, ...]
    total_trajectories: int
    total_noncompliant: int
    mismatch_fraction: float

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "sd_pairs", tuple(self.sd_pairs))
        object.__setattr__(self, "zone_events", tuple(self.zone_events))
        for sd in self.sd_pairs:
            if sd.compliant_members + sd.noncompliant_members != sd.size:
                raise ValidationError(f"SD {sd.sd_name}: compliant + non-compliant != size")
        if sum(sd.size for sd in self.sd_pairs) != self.total_trajectories:
            raise ValidationError("SD pair sizes do not sum to total")
        if sum(sd.noncompliant_members for sd in self.sd_pairs) != self.total_noncompliant:
            raise ValidationError("non-compliant counts do not sum to total")

    @property
    def wrongway_event_count(self) -> int:
        return len(self.zone_events)


def trajectory_deviation(path, design: DesignedPath | object, p: ComplianceParams) -> DeviationStats:
    """Distance summary of one resampled path against one designed polyline."""
    samples = path.samples if isinstance(path, ResampledPath) else np.asarray(path, dtype=np.float64)
    polyline = design.polyline if isinstance(design, DesignedPath) else design
    d = points_to_polyline(samples, polyline)
    return DeviationStats(
        max_dev=float(d.max()),
        quantile_dev=float(np.quantile(d, p.deviation_quantile)),
        within_fraction=float((d <= p.deviation_threshold).sum() / len(d)),
    )


def _design_name(designs: tuple[DesignedPath, ...], i: int) -> str:
    name = designs[i].name
    if sum(1 for d in designs if d.name == name) > 1:
        return f"{name}[{i}]"
    return name


def classify_path(path: ResampledPath, designs, p: ComplianceParams) -> ClusterVerdict:
    """Corridor verdict for one path against the best of several designs.

    Best design is the one with the highest within_fraction; exact ties go
    to the smaller quantile deviation, then to design order.
    """
    designs = tuple(designs)
    if not designs:
        return ClusterVerdict(False, None, NO_DESIGNED_PATH, None)
    best_i = 0
    best_stats = trajectory_deviation(path, designs[0], p)
    for i in range(1, len(designs)):
        st = trajectory_deviation(path, designs[i], p)
        if st.within_fraction > best_stats.within_fraction or (
            st.within_fraction == best_stats.within_fraction and st.quantile_dev < best_stats.quantile_dev
        ):
            best_i, best_stats = i, st
    ok = best_stats.within_fraction >= p.deviation_quantile
    return ClusterVerdict(
        compliant=ok,
        matched_design=_design_name(designs, best_i),
        reason=None if ok else ABOVE_THRESHOLD,
        stats=best_stats,
    )


def classify_cluster(pc: PathCluster, medoid_path: ResampledPath, designs, p: ComplianceParams) -> ClusterVerdict:
    """Verdict for a whole path-cluster, judged by its medoid."""
    if medoid_path.source_id != pc.medoid_id:
        raise ValidationError(f"medoid path {medoid_path.source_id!r} does not match cluster medoid {pc.medoid_id!r}")
    return classify_path(medoid_path, designs, p)


def classify_trajectories(paths: list[ResampledPath], designs, p: ComplianceParams) -> dict[str, ClusterVerdict]:
    """Per-trajectory verdicts (the override mode for raw recounts)."""
    return {path.source_id: classify_path(path, designs, p) for path in paths}


def duration_stats(tset: TrajectorySet, members) -> DurationStats:
    """Time-on-screen stats (first to last observation) over member ids."""
    ids = sorted(members)
    if not ids:
        raise ValidationError("duration_stats needs at least one member")
    d = np.array([tset.get(i).duration for i in ids], dtype=np.float64)
    return DurationStats(
        mean=float(d.mean()), median=float(np.median(d)), min=float(d.min()), max=float(d.max())
    )


def forbidden_zone_events(tset: TrajectorySet, zones, p: ComplianceParams) -> list[ZoneEvent]:
    """Detect sustained presence inside forbidden zones.

    An event is >= zone_min_points consecutive observations strictly inside
    a zone; at most one event per (trajectory, zone), stamped with the time
    of the first point of the first qualifying run. Output is sorted by
    (traj_id, zone name).
    """
    zones = tuple(zones)
    events = []
    for tid in sorted(t.id for t in tset):
        traj = tset.get(tid)
        for z in zones:
            ring = z.ring if isinstance(z, Zone) else tuple(z)
            inside = points_in_polygon(traj.xy, ring)
            run = 0
            for i, flag in enumerate(inside):
                run = run + 1 if flag else 0
                if run == p.zone_min_points:
                    name = z.name if isinstance(z, Zone) else f"zone{zones.index(z)}"
                    events.append(ZoneEvent(tid, name, traj.points[i - run + 1].t))
                    break
    events.sort(key=lambda e: (e.traj_id, e.zone))
    return events


def raw_sd_query(tset: TrajectorySet, spec: SceneSpec, source: str, dest: str, snap: float) -> list[str]:
    """Ids of trajectories starting within snap of `source` and ending within snap of `dest`.

    Operates on raw endpoints irrespective of any clustering, so it can
    recount flows that DBSCAN split or discarded as noise.
    """
    sg = spec.gate(source)
    dg = spec.gate(dest)
    out = []
    for t in tset:
        dsx = t.first.x - sg.x
        dsy = t.first.y - sg.y
        ddx = t.last.x - dg.x
        ddy = t.last.y - dg.y
        if math.sqrt(dsx * dsx + dsy * dsy) <= snap and math.sqrt(ddx * ddx + ddy * ddy) <= snap:
            out.append(t.id)
    return sorted(out)


def mismatch_report(rows: list[PathClusterRow], zone_events: list[ZoneEvent]) -> ComplianceReport:
    """Aggregate per-cluster rows into SD-pair and scene-level fractions."""
    by_sd: dict[int, list[PathClusterRow]] = {}
    for r in rows:
        by_sd.setdefault(r.sd_label, []).append(r)
    sd_rows = []
    for sd_label in sorted(by_sd):
        group = by_sd[sd_label]
        size = sum(r.size for r in group)
        bad = sum(r.size for r in group if not r.compliant)
        sd_rows.append(
            SDPairRow(
                sd_label=sd_label,
                sd_name=group[0].sd_name,
                size=size,
                compliant_members=size - bad,
                noncompliant_members=bad,
                mismatch_fraction=bad / size,
            )
        )
    total = sum(r.size for r in sd_rows)
    bad = sum(r.noncompliant_members for r in sd_rows)
    return ComplianceReport(
        rows=tuple(sorted(rows, key=lambda r: (r.sd_label, r.path_index))),
        sd_pairs=tuple(sd_rows),
        zone_events=tuple(zone_events),
        total_trajectories=total,
        total_noncompliant=bad,
        mismatch_fraction=bad / total if total else 0.0,
    )
