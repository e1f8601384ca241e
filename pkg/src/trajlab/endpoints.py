"""Source-destination clustering of trajectory endpoints.

Each trajectory is summarized by a 4-D endpoint vector (start x, start y,
end x, end y). DBSCAN over these vectors groups trajectories that enter
and leave the scene at approximately the same places; the groups are the
SD-clusters that all downstream path analysis operates on.

The implementation trades the classic scan-order-dependent DBSCAN for an
order-independent formulation with identical semantics: core points are
found from neighbor counts, clusters are the connected components of the
core-core proximity graph, and border points join the cluster of their
nearest core neighbor (ties broken by smallest trajectory id). The result
is invariant under input permutation, which scan-order DBSCAN is not.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ParseError, ValidationError
from .geometry import Trajectory, TrajectorySet
from .ingest import SceneSpec

NOISE = -1


@dataclass(frozen=True)
class EndpointVector:
    """Start and end position of one trajectory, in pixels."""

    sx: float
    sy: float
    dx: float
    dy: float

    def __post_init__(self):
        for v in (self.sx, self.sy, self.dx, self.dy):
            if not math.isfinite(v):
                raise ValidationError("endpoint coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.dx, self.dy], dtype=np.float64)


@dataclass(frozen=True)
class ClusterParams:
    """DBSCAN parameters; eps is stated at 640x360 reference resolution."""

    eps: float = 8.0
    min_pts: int = 25

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValidationError(f"eps must be positive and finite, got {self.eps}")
        if self.min_pts < 1:
            raise ValidationError(f"min_pts must be >= 1, got {self.min_pts}")

    def rescaled(self, factor: float) -> "ClusterParams":
        return replace(self, eps=self.eps * factor)


@dataclass(frozen=True)
class SDCluster:
    """One source-destination cluster of trajectories."""

    label: int
    member_ids: tuple[str, ...]
    centroid: EndpointVector
    source_gate: str | None = None
    dest_gate: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if not self.member_ids:
            raise ValidationError("SD-cluster must have at least one member")

    @property
    def size(self) -> int:
        return len(self.member_ids)

    @property
    def name(self) -> str:
        if self.source_gate and self.dest_gate:
            return f"{self.source_gate}->{self.dest_gate}"
        return f"sd{self.label}"


@dataclass(frozen=True)
class Directives:
    """Declarative post-clustering edits: merge label sets, discard labels.

    Replaces ad-hoc manual inspection with a version-controlled artifact so
    a run's cluster bookkeeping is auditable.
    """

    merges: tuple[tuple[int, ...], ...] = ()
    discards: tuple[tuple[int, str], ...] = ()  # (label, reason)

    def __post_init__(self):
        merges = tuple(tuple(sorted(int(x) for x in group)) for group in self.merges)
        discards = tuple((int(lbl), str(reason)) for lbl, reason in self.discards)
        object.__setattr__(self, "merges", merges)
        object.__setattr__(self, "discards", discards)
        seen: set[int] = set()
        for group in merges:
            if len(group) < 2:
                raise ValidationError(f"merge group {group} must contain >= 2 labels")
            if len(set(group)) != len(group):
                raise ValidationError(f"merge group {group} repeats a label")
            overlap = seen & set(group)
            if overlap:
                raise ValidationError(f"label(s) {sorted(overlap)} appear in more than one merge group")
            seen |= set(group)
        dl = [lbl for lbl, _ in discards]
        if len(set(dl)) != len(dl):
            raise ValidationError("duplicate labels in discards")
        both = seen & set(dl)
        if both:
            raise ValidationError(f"label(s) {sorted(both)} appear in both merges and discards")


def parse_directives(source) -> Directives:
    """Parse a directives file (path or dict): {merges: [[..]], discards: [{label, reason}]}."""
    if isinstance(source, dict):
        doc, path = source, None
    else:
        path = str(source)
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}", path=path) from e
        except OSError as e:
            raise ParseError(f"cannot read file: {e}", path=path) from e
    if not isinstance(doc, dict):
        raise ParseError("directives file must be a JSON object", path=path)
    unknown = set(doc) - {"merges", "discards", "notes"}
    if unknown:
        raise ParseError(f"unknown keys in directives file: {sorted(unknown)}", path=path)
    try:
        merges = tuple(tuple(int(x) for x in group) for group in doc.get("merges", []))
        discards = tuple((int(d["label"]), str(d["reason"])) for d in doc.get("discards", []))
        return Directives(merges, discards)
    except (TypeError, KeyError, ValueError, ValidationError) as e:
        raise ParseError(f"bad directives content: {e}", path=path) from e


def endpoint_vector(traj: Trajectory) -> EndpointVector:
    """(first.x, first.y, last.x, last.y); direction-sensitive by design."""
    return EndpointVector(traj.first.x, traj.first.y, traj.last.x, traj.last.y)


def endpoint_matrix(tset: TrajectorySet) -> np.ndarray:
    """(n, 4) float64 endpoint vectors in set iteration order."""
    out = np.empty((len(tset), 4), dtype=np.float64)
    for i, t in enumerate(tset):
        out[i, 0] = t.first.x
        out[i, 1] = t.first.y
        out[i, 2] = t.last.x
        out[i, 3] = t.last.y
    return out


@njit(cache=True)
def _dbscan_kernel(pts, eps2, min_pts, rank):
    """Serial order-independent DBSCAN core.

    Returns (core flags, union-find parent over cores, border attachment).
    Distances are compared as squared sums in a fixed term order so results
    are reproducible bit for bit.
    """
    n = pts.shape[0]
    core = np.zeros(n, np.bool_)
    for i in range(n):
        c = 0
        for j in range(n):
            d0 = pts[i, 0] - pts[j, 0]
            d1 = pts[i, 1] - pts[j, 1]
            d2 = pts[i, 2] - pts[j, 2]
            d3 = pts[i, 3] - pts[j, 3]
            if d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 <= eps2:
                c += 1
        if c >= min_pts:
            core[i] = True

    parent = np.arange(n)
    for i in range(n):
        if not core[i]:
            continue
        for j in range(i + 1, n):
            if not core[j]:
                continue
            d0 = pts[i, 0] - pts[j, 0]
            d1 = pts[i, 1] - pts[j, 1]
            d2 = pts[i, 2] - pts[j, 2]
            d3 = pts[i, 3] - pts[j, 3]
            if d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 <= eps2:
                ri = i
                while parent[ri] != ri:
                    parent[ri] = parent[parent[ri]]
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    parent[rj] = parent[parent[rj]]
                    rj = parent[rj]
                if ri < rj:
                    parent[rj] = ri
                elif rj < ri:
                    parent[ri] = rj

    attach = np.full(n, -1, np.int64)
    for i in range(n):
        if core[i]:
            continue
        best = -1
        bestd = 0.0
        for j in range(n):
            if not core[j]:
                continue
            d0 = pts[i, 0] - pts[j, 0]
            d1 = pts[i, 1] - pts[j, 1]
            d2 = pts[i, 2] - pts[j, 2]
            d3 = pts[i, 3] - pts[j, 3]
            dd = d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3
            if dd <= eps2:
                if best == -1 or dd < bestd or (dd == bestd and rank[j] < rank[best]):
                    best = j
                    bestd = dd
        attach[i] = best
    return core, parent, attach


def _find_root(parent: np.ndarray, i: int) -> int:
    while parent[i] != i:
        i = parent[i]
    return int(i)


def dbscan(points, p: ClusterParams, *, ids=None) -> list[int]:
    """Cluster 4-D endpoint vectors; returns per-point labels, noise as -1.

    `ids` (one per point) drive all tie-breaking and canonical label order;
    point indices are used when omitted. Labels are assigned by decreasing
    cluster size, ties by smallest member id.
    """
    if isinstance(points, np.ndarray):
        pts = np.ascontiguousarray(points, dtype=np.float64)
    else:
        pts = np.array([v.as_array() if isinstance(v, EndpointVector) else v for v in points], dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ValidationError(f"points must be (n, 4), got shape {pts.shape}")
    n = pts.shape[0]
    if n == 0:
        raise ValidationError("points must be non-empty")
    if ids is None:
        ids = list(range(n))
    if len(ids) != n:
        raise ValidationError(f"ids length {len(ids)} != point count {n}")

    # rank[i] = position of ids[i] in sorted id order; drives tie-breaking.
    order = sorted(range(n), key=lambda i: ids[i])
    rank = np.empty(n, dtype=np.int64)
    for r, i in enumerate(order):
        rank[i] = r

    core, parent, attach = _dbscan_kernel(pts, float(p.eps) * float(p.eps), int(p.min_pts), rank)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        if core[i]:
            groups.setdefault(_find_root(parent, i), []).append(i)
    for i in range(n):
        if not core[i] and attach[i] >= 0:
            groups[_find_root(parent, int(attach[i]))].append(i)

    ordered = sorted(groups.values(), key=lambda g: (-len(g), min(ids[i] for i in g)))
    labels = [NOISE] * n
    for lbl, members in enumerate(ordered):
        for i in members:
            labels[i] = lbl
    return labels


def _centroid(tset: TrajectorySet, member_ids) -> EndpointVector:
    # Mean over members in id-sorted order, for run-to-run determinism.
    vecs = np.array([endpoint_vector(tset.get(tid)).as_array() for tid in sorted(member_ids)])
    m = vecs.mean(axis=0)
    return EndpointVector(float(m[0]), float(m[1]), float(m[2]), float(m[3]))


def cluster_endpoints(tset: TrajectorySet, p: ClusterParams) -> tuple[list[SDCluster], dict[str, int]]:
    """Run DBSCAN over a trajectory set's endpoints.

    Returns canonical SD-clusters and a {traj_id: label} map (noise = -1).
    """
    ids = [t.id for t in tset]
    labels = dbscan(endpoint_matrix(tset), p, ids=ids)
    by_label: dict[int, list[str]] = {}
    for tid, lbl in zip(ids, labels):
        if lbl != NOISE:
            by_label.setdefault(lbl, []).append(tid)
    clusters = [
        SDCluster(lbl, tuple(sorted(members)), _centroid(tset, members))
        for lbl, members in sorted(by_label.items())
    ]
    return clusters, dict(zip(ids, labels))


def apply_directives(
    clusters: list[SDCluster], d: Directives, tset: TrajectorySet
) -> tuple[list[SDCluster], list[tuple[str, str]]]:
    """Merge and discard clusters per directives; relabel by decreasing size.

    Returns (clusters, discarded) where discarded lists (traj_id, reason)
    for every member of a discarded cluster. Trajectory count is conserved:
    retained members + discarded members = input members.
    """
    by_label = {c.label: c for c in clusters}
    referenced = [lbl for group in d.merges for lbl in group] + [lbl for lbl, _ in d.discards]
    unknown = [lbl for lbl in referenced if lbl not in by_label]
    if unknown:
        raise ValidationError(f"directives reference unknown cluster label(s) {sorted(set(unknown))}")

    discard_reason = dict(d.discards)
    merged_away = {lbl for group in d.merges for lbl in group}

    out_members: list[tuple[str, ...]] = []
    discarded: list[tuple[str, str]] = []
    for group in d.merges:
        union: list[str] = []
        for lbl in group:
            union.extend(by_label[lbl].member_ids)
        out_members.append(tuple(sorted(union)))
    for c in clusters:
        if c.label in merged_away:
            continue
        if c.label in discard_reason:
            reason = discard_reason[c.label]
            discarded.extend((tid, reason) for tid in c.member_ids)
            continue
        out_members.append(c.member_ids)

    out_members.sort(key=lambda m: (-len(m), m[0]))
    relabeled = [
        SDCluster(lbl, members, _centroid(tset, members)) for lbl, members in enumerate(out_members)
    ]
    return relabeled, discarded


def assign_gates(clusters: list[SDCluster], spec: SceneSpec, snap: float) -> list[SDCluster]:
    """Attach nearest gate names (within snap radius) to each cluster centroid.

    Source candidates are gates of kind entry/both, destination candidates
    exit/both. A centroid with no gate in radius keeps the field unset.
    """

    def nearest(x: float, y: float, kinds: tuple[str, ...]) -> str | None:
        best: tuple[float, str] | None = None
        for g in spec.gates:
            if g.kind not in kinds:
                continue
            ddx = g.x - x
            ddy = g.y - y
            dist = math.sqrt(ddx * ddx + ddy * ddy)
            if dist <= snap and (best is None or (dist, g.name) < best):
                best = (dist, g.name)
        return best[1] if best else None

    out = []
    for c in clusters:
        src = nearest(c.centroid.sx, c.centroid.sy, ("entry", "both"))
        dst = nearest(c.centroid.dx, c.centroid.dy, ("exit", "both"))
        out.append(replace(c, source_gate=src, dest_gate=dst))
    return out
