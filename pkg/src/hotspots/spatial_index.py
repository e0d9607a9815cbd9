"""Immutable 2D point index with exact radius and k-nearest-neighbor queries.

The index is a bucketed k-d tree over degree coordinates.  Queries return
exactly what a brute-force scan with the same distance predicate returns
(closed ball, Euclidean metric on the plane), at sub-quadratic average
cost; the tree only prunes regions that provably cannot contain a match.

Construction is deterministic for a fixed input order, and the built
index is never mutated, so it is safe to share across threads.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import DataError
from .geo import as_points

LEAF_SIZE = 32


class IndexedPoints:
    """k-d tree over a fixed point collection; build with :func:`build`."""

    __slots__ = (
        "points",
        "_order",
        "_axis",
        "_split",
        "_left",
        "_right",
        "_lo",
        "_hi",
    )

    def __init__(self, points: np.ndarray):
        pts = as_points(points)
        if len(pts) == 0:
            raise DataError("cannot index an empty point set")
        self.points = pts
        self._build()

    def __len__(self) -> int:
        return len(self.points)

    def _build(self) -> None:
        pts = self.points
        n = len(pts)
        order = np.arange(n)
        axis: list[int] = []
        split: list[float] = []
        left: list[int] = []
        right: list[int] = []
        lo_arr: list[int] = []
        hi_arr: list[int] = []

        def new_node() -> int:
            axis.append(-1)
            split.append(0.0)
            left.append(-1)
            right.append(-1)
            lo_arr.append(0)
            hi_arr.append(0)
            return len(axis) - 1

        stack = [(new_node(), 0, n)]
        while stack:
            node, lo, hi = stack.pop()
            lo_arr[node] = lo
            hi_arr[node] = hi
            if hi - lo <= LEAF_SIZE:
                continue
            seg = order[lo:hi]
            coords = pts[seg]
            spans = coords.max(axis=0) - coords.min(axis=0)
            dim = 0 if spans[0] >= spans[1] else 1
            mid = (lo + hi) // 2
            part = np.argpartition(coords[:, dim], mid - lo)
            order[lo:hi] = seg[part]
            axis[node] = dim
            split[node] = float(pts[order[mid], dim])
            lc, rc = new_node(), new_node()
            left[node], right[node] = lc, rc
            stack.append((lc, lo, mid))
            stack.append((rc, mid, hi))

        self._order = order
        self._axis = np.asarray(axis, dtype=np.int8)
        self._split = np.asarray(split, dtype=np.float64)
        self._left = np.asarray(left, dtype=np.int64)
        self._right = np.asarray(right, dtype=np.int64)
        self._lo = np.asarray(lo_arr, dtype=np.int64)
        self._hi = np.asarray(hi_arr, dtype=np.int64)

    def radius_query(self, center_index: int, eps: float) -> np.ndarray:
        """Indices of all points within distance ``eps`` of a member point.

        The ball is closed (distance <= eps), so the center itself and any
        exact duplicates are always included.  Indices come back sorted
        ascending.
        """
        n = len(self.points)
        if not 0 <= center_index < n:
            raise DataError(f"point index {center_index} out of range for {n} points")
        if not eps > 0:
            raise DataError("eps must be positive")
        center = self.points[center_index]
        eps2 = eps * eps
        found: list[np.ndarray] = []
        stack = [0]
        while stack:
            node = stack.pop()
            dim = self._axis[node]
            if dim < 0:
                seg = self._order[self._lo[node] : self._hi[node]]
                diff = self.points[seg] - center
                d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
                found.append(seg[d2 <= eps2])
                continue
            sv = self._split[node]
            c = center[dim]
            if c - eps <= sv:
                stack.append(self._left[node])
            if c + eps >= sv:
                stack.append(self._right[node])
        out = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
        out.sort()
        return out

    def kth_nn_distance(self, point_index: int, k: int) -> float:
        """Distance from a member point to its k-th nearest *other* point."""
        n = len(self.points)
        if not 0 <= point_index < n:
            raise DataError(f"point index {point_index} out of range for {n} points")
        if not 1 <= k <= n - 1:
            raise DataError(f"k={k} out of range for {n} points (need 1 <= k <= n-1)")
        d2 = self._knn_sq(self.points[point_index], k, exclude=point_index)
        return math.sqrt(d2)

    def nearest_distance(self, location) -> float:
        """Distance from an arbitrary location to the nearest indexed point."""
        loc = np.asarray(location, dtype=np.float64).reshape(2)
        return math.sqrt(self._knn_sq(loc, 1, exclude=-1))

    def _knn_sq(self, center: np.ndarray, k: int, exclude: int) -> float:
        # Max-heap of the k smallest squared distances, stored negated.
        heap: list[float] = []

        def visit(node: int) -> None:
            dim = self._axis[node]
            if dim < 0:
                seg = self._order[self._lo[node] : self._hi[node]]
                if exclude >= 0:
                    seg = seg[seg != exclude]
                if len(seg) == 0:
                    return
                diff = self.points[seg] - center
                d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
                for v in d2:
                    if len(heap) < k:
                        heapq.heappush(heap, -v)
                    elif v < -heap[0]:
                        heapq.heapreplace(heap, -v)
                return
            sv = self._split[node]
            delta = center[dim] - sv
            near, far = (
                (self._left[node], self._right[node])
                if delta <= 0
                else (self._right[node], self._left[node])
            )
            visit(near)
            # The far side only holds points at least |delta| away along this axis.
            if len(heap) < k or delta * delta <= -heap[0]:
                visit(far)

        visit(0)
        return -heap[0]


def build(points) -> IndexedPoints:
    """Build an index over a nonempty point collection."""
    return IndexedPoints(points)
