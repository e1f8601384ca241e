"""Independent reference implementations used to check the fast paths.

These are deliberately written with different algorithms than the
production code (recursion instead of tabulation, breadth-first search
instead of union-find) while sharing the same arithmetic definitions, so
agreement is meaningful and exact.
"""

from __future__ import annotations

import math
from collections import deque


def dtw_reference(a, b) -> float:
    """Recursive-memoization DTW with Euclidean point cost.

    D(i, j) = cost(a_i, b_j) + min(D(i-1, j), D(i, j-1), D(i-1, j-1)),
    with boundary cells accumulating along the edges.
    """
    n, m = len(a), len(b)
    memo: dict[tuple[int, int], float] = {}

    def cost(i: int, j: int) -> float:
        dx = a[i][0] - b[j][0]
        dy = a[i][1] - b[j][1]
        return math.sqrt(dx * dx + dy * dy)

    def d(i: int, j: int) -> float:
        if (i, j) in memo:
            return memo[(i, j)]
        if i == 0 and j == 0:
            val = cost(0, 0)
        elif i == 0:
            val = cost(0, j) + d(0, j - 1)
        elif j == 0:
            val = cost(i, 0) + d(i - 1, 0)
        else:
            val = cost(i, j) + min(d(i - 1, j), d(i, j - 1), d(i - 1, j - 1))
        memo[(i, j)] = val
        return val

    # Fill bottom-up through the memo to avoid recursion depth limits;
    # the recurrence itself stays the recursive definition above.
    for i in range(n):
        for j in range(m):
            d(i, j)
    return d(n - 1, m - 1)


def dbscan_reference(points, eps: float, min_pts: int, ids=None) -> list[int]:
    """Brute-force density clustering with the deterministic border rule.

    Cores have >= min_pts neighbors within eps (closed ball, self
    included); clusters are BFS components of the core-core graph; border
    points join the cluster of their nearest core neighbor with exact
    distance ties broken by smallest id. Labels are canonical: decreasing
    cluster size, then smallest member id; noise is -1.
    """
    pts = [tuple(float(c) for c in p) for p in points]
    n = len(pts)
    if ids is None:
        ids = list(range(n))

    def d2(i: int, j: int) -> float:
        d0 = pts[i][0] - pts[j][0]
        d1 = pts[i][1] - pts[j][1]
        d2_ = pts[i][2] - pts[j][2]
        d3 = pts[i][3] - pts[j][3]
        return d0 * d0 + d1 * d1 + d2_ * d2_ + d3 * d3

    eps2 = float(eps) * float(eps)
    neighbors = [[j for j in range(n) if d2(i, j) <= eps2] for i in range(n)]
    core = [len(neighbors[i]) >= min_pts for i in range(n)]

    comp = [-1] * n
    n_comp = 0
    for s in range(n):
        if not core[s] or comp[s] != -1:
            continue
        comp[s] = n_comp
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in neighbors[u]:
                if core[v] and comp[v] == -1:
                    comp[v] = n_comp
                    queue.append(v)
        n_comp += 1

    for i in range(n):
        if core[i]:
            continue
        cands = [j for j in neighbors[i] if core[j]]
        if not cands:
            continue
        best = min(cands, key=lambda j: (d2(i, j), ids[j]))
        comp[i] = comp[best]

    groups: dict[int, list[int]] = {}
    for i, c in enumerate(comp):
        if c != -1:
            groups.setdefault(c, []).append(i)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), min(ids[i] for i in g)))
    labels = [-1] * n
    for lbl, members in enumerate(ordered):
        for i in members:
            labels[i] = lbl
    return labels


def medoid_reference(values, ids, members) -> str:
    """Exhaustive medoid: smallest summed distance, ties to smallest id."""
    best = None
    for i in sorted(members, key=lambda i: ids[i]):
        s = sum(values[i][j] for j in sorted(members, key=lambda j: ids[j]))
        if best is None or s < best[0]:
            best = (s, ids[i])
    return best[1]
