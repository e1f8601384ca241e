"""Shape clustering within SD-clusters via dynamic time warping.

Distances between arc-length-resampled trajectories are classic
accumulated-cost DTW (Euclidean point cost, unconstrained warping window
by default). Each SD-cluster's pairwise distance matrix is then cut into
path-clusters by agglomerative hierarchical clustering with deterministic
tie-breaking, so identical inputs give identical partitions no matter the
input order or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ValidationError
from .preprocess import ResampledPath


@dataclass(frozen=True)
class PathClusterParams:
    """Linkage, cut and size floor for the within-SD-cluster partition.

    Exactly one of target_count / distance_threshold may be set; with
    neither set, the cut defaults to distance_threshold = 30 * K/64
    (accumulated DTW scales linearly with sample count K).
    """

    linkage: str = "average"
    target_count: int | None = None
    distance_threshold: float | None = None
    min_cluster_size: int = 1

    def __post_init__(self):
        if self.linkage not in ("average", "complete"):
            raise ValidationError(f"linkage must be 'average' or 'complete', got {self.linkage!r}")
        if self.target_count is not None and self.distance_threshold is not None:
            raise ValidationError("set at most one of target_count / distance_threshold")
        if self.target_count is not None and self.target_count < 1:
            raise ValidationError(f"target_count must be >= 1, got {self.target_count}")
        if self.distance_threshold is not None and not (
            self.distance_threshold > 0 and math.isfinite(self.distance_threshold)
        ):
            raise ValidationError(f"distance_threshold must be positive, got {self.distance_threshold}")
        if self.min_cluster_size < 1:
            raise ValidationError(f"min_cluster_size must be >= 1, got {self.min_cluster_size}")

    def effective_threshold(self, k: int) -> float | None:
        if self.target_count is not None:
            return None
        if self.distance_threshold is not None:
            return self.distance_threshold
        return 30.0 * k / 64.0


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise DTW distances over one SD-cluster's members."""

    values: np.ndarray  # (n, n) float64, read-only
    id_order: tuple[str, ...]
    k: int  # sample count shared by all paths

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        n = len(self.id_order)
        if arr.shape != (n, n):
            raise ValidationError(f"matrix shape {arr.shape} does not match {n} ids")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "id_order", tuple(self.id_order))

    @property
    def n(self) -> int:
        return len(self.id_order)


@dataclass(frozen=True)
class PathCluster:
    """A shape-homogeneous subgroup of one SD-cluster."""

    sd_label: int
    index: int  # 1-based, ordered by decreasing size
    member_ids: tuple[str, ...]
    medoid_id: str

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if not self.member_ids:
            raise ValidationError("path-cluster must have at least one member")
        if self.medoid_id not in self.member_ids:
            raise ValidationError("medoid must be a member")

    @property
    def size(self) -> int:
        return len(self.member_ids)


@njit(cache=True, nogil=True)
def _dtw_kernel(a, b, r):
    """Accumulated-cost DTW with band radius r (r >= max(n,m) disables it).

    Two-row dynamic program; cells outside the band stay +inf. The cost
    term order is fixed so results are reproducible bit for bit.
    """
    n = a.shape[0]
    m = b.shape[0]
    prev = np.full(m, np.inf)
    curr = np.full(m, np.inf)
    dx = a[0, 0] - b[0, 0]
    dy = a[0, 1] - b[0, 1]
    prev[0] = math.sqrt(dx * dx + dy * dy)
    hi0 = r if r < m - 1 else m - 1
    for j in range(1, hi0 + 1):
        dx = a[0, 0] - b[j, 0]
        dy = a[0, 1] - b[j, 1]
        prev[j] = prev[j - 1] + math.sqrt(dx * dx + dy * dy)
    for i in range(1, n):
        lo = i - r if i - r > 0 else 0
        hi = i + r if i + r < m - 1 else m - 1
        for j in range(m):
            curr[j] = np.inf
        for j in range(lo, hi + 1):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            c = math.sqrt(dx * dx + dy * dy)
            if j == 0:
                best = prev[0]
            else:
                best = prev[j - 1]
                if prev[j] < best:
                    best = prev[j]
                if curr[j - 1] < best:
                    best = curr[j - 1]
            curr[j] = c + best
        tmp = prev
        prev = curr
        curr = tmp
    return prev[m - 1]


def _band_radius(n: int, m: int, band: float | None) -> int:
    if band is None:
        return max(n, m)
    if not 0.0 < band <= 1.0:
        raise ValidationError(f"band must be in (0, 1], got {band}")
    r = int(math.ceil(band * max(n, m)))
    if r < abs(n - m):
        raise ValidationError(f"band radius {r} cannot align lengths {n} and {m}")
    return r


def dtw_distance(a, b, *, band: float | None = None) -> float:
    """DTW distance between two sample arrays or ResampledPaths.

    `band` optionally restricts the warping window to |i - j| <= band * K
    (a Sakoe-Chiba band); it is purely a speed knob and band=1.0 is exactly
    equivalent to no band.
    """
    pa = a.samples if isinstance(a, ResampledPath) else np.ascontiguousarray(a, dtype=np.float64)
    pb = b.samples if isinstance(b, ResampledPath) else np.ascontiguousarray(b, dtype=np.float64)
    if pa.ndim != 2 or pa.shape[1] != 2 or pb.ndim != 2 or pb.shape[1] != 2:
        raise ValidationError("sequences must be (n, 2) arrays")
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise ValidationError("sequences must be non-empty")
    return float(_dtw_kernel(pa, pb, _band_radius(pa.shape[0], pb.shape[0], band)))


def distance_matrix(paths: list[ResampledPath], *, threads: int = 1, band: float | None = None) -> DistanceMatrix:
    """All-pairs DTW over paths sharing one K.

    Rows are computed independently (optionally across threads) and each
    pair is evaluated exactly once, so the result is identical for any
    thread count.
    """
    if not paths:
        raise ValidationError("need at least one path")
    k = paths[0].k
    for p in paths:
        if p.k != k:
            raise ValidationError(f"mismatched K: {p.source_id!r} has {p.k}, expected {k}")
    n = len(paths)
    arrs = [p.samples for p in paths]
    r = _band_radius(k, k, band)
    values = np.zeros((n, n), dtype=np.float64)

    def fill_row(i: int) -> None:
        ai = arrs[i]
        for j in range(i + 1, n):
            d = _dtw_kernel(ai, arrs[j], r)
            values[i, j] = d
            values[j, i] = d

    if threads > 1 and n > 2:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(fill_row, range(n - 1)))
    else:
        for i in range(n - 1):
            fill_row(i)
    return DistanceMatrix(values, tuple(p.source_id for p in paths), k)


def medoid(m: DistanceMatrix, members) -> str:
    """Member (by index into m) minimizing summed distance to the others.

    Sums run in id-sorted member order and ties fall to the smallest id,
    so the result does not depend on input order.
    """
    idx = sorted(members, key=lambda i: m.id_order[i])
    if not idx:
        raise ValidationError("members must be non-empty")
    best_id = None
    best_sum = math.inf
    for i in idx:
        s = 0.0
        for j in idx:
            s += m.values[i, j]
        if s < best_sum or (s == best_sum and best_id is not None and m.id_order[i] < best_id):
            best_sum = s
            best_id = m.id_order[i]
    return best_id


def _agglomerate(m: DistanceMatrix, p: PathClusterParams) -> list[list[int]]:
    """Merge singletons bottom-up; return clusters as index lists.

    Tie-breaking is by the pair of smallest member ids, and the
    Lance-Williams update always puts the smaller-id cluster first, so the
    dendrogram is a pure function of {id: samples} regardless of ordering.
    """
    n = m.n
    if p.target_count is not None and p.target_count > n:
        raise ValidationError(f"target_count {p.target_count} exceeds {n} paths")
    threshold = p.effective_threshold(m.k)

    d = m.values.copy()
    np.fill_diagonal(d, np.inf)
    active = list(range(n))
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    # Minimum member id per cluster, as position in the sorted id order.
    order = sorted(range(n), key=lambda i: m.id_order[i])
    rank = {i: r for r, i in enumerate(order)}
    min_rank = {i: rank[i] for i in range(n)}

    while len(active) > 1:
        if p.target_count is not None and len(active) <= p.target_count:
            break
        sub = d[np.ix_(active, active)]
        mn = sub.min()
        if threshold is not None and mn > threshold:
            break
        ii, jj = np.nonzero(sub == mn)
        best = None
        for a_pos, b_pos in zip(ii, jj):
            if a_pos >= b_pos:
                continue
            a, b = active[a_pos], active[b_pos]
            key = tuple(sorted((min_rank[a], min_rank[b])))
            if best is None or key < best[0]:
                best = (key, a, b)
        _, a, b = best
        if min_rank[b] < min_rank[a]:
            a, b = b, a
        na, nb = len(members[a]), len(members[b])
        for c in active:
            if c == a or c == b:
                continue
            if p.linkage == "average":
                d[a, c] = (na * d[a, c] + nb * d[b, c]) / (na + nb)
            else:
                d[a, c] = max(d[a, c], d[b, c])
            d[c, a] = d[a, c]
        members[a].extend(members[b])
        min_rank[a] = min(min_rank[a], min_rank[b])
        del members[b], min_rank[b]
        active.remove(b)

    return [members[a] for a in active]


def _enforce_min_size(clusters: list[list[int]], m: DistanceMatrix, p: PathClusterParams) -> list[list[int]]:
    """Fold clusters below min_cluster_size into their nearest neighbor."""

    def linkage_dist(a: list[int], b: list[int]) -> float:
        block = m.values[np.ix_(sorted(a), sorted(b))]
        return float(block.max() if p.linkage == "complete" else block.mean())

    def min_id(c: list[int]) -> str:
        return min(m.id_order[i] for i in c)

    clusters = [list(c) for c in clusters]
    while len(clusters) > 1:
        small = [c for c in clusters if len(c) < p.min_cluster_size]
        if not small:
            break
        victim = min(small, key=lambda c: (len(c), min_id(c)))
        rest = [c for c in clusters if c is not victim]
        target = min(rest, key=lambda c: (linkage_dist(victim, c), min_id(c)))
        target.extend(victim)
        clusters = rest
    return clusters


def cluster_paths(m: DistanceMatrix, p: PathClusterParams, *, sd_label: int = 0) -> list[PathCluster]:
    """Partition a distance matrix into PathClusters, largest first."""
    raw = _agglomerate(m, p)
    if p.min_cluster_size > 1:
        raw = _enforce_min_size(raw, m, p)
    raw.sort(key=lambda c: (-len(c), min(m.id_order[i] for i in c)))
    out = []
    for pos, idx in enumerate(raw, start=1):
        ids = tuple(sorted(m.id_order[i] for i in idx))
        out.append(PathCluster(sd_label, pos, ids, medoid(m, idx)))
    return out
