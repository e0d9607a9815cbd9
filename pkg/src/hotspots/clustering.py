"""Density-based clustering with deterministic core/border/noise labeling.

A point is *core* when its closed eps-ball (the point itself included)
holds at least ``min_pts`` points; *border* when it is not core but lies
within eps of some core point; *noise* otherwise.  Clusters are the
connected components of the core points under mutual eps-reachability.

Everything here is deterministic: cluster ids are assigned consecutively
from 0 in order of discovery while scanning point indices ascending, and
each border point joins the cluster of its lowest-index core neighbor.

eps selection automates the usual k-distance elbow read: sort every
point's k-th nearest-neighbor distance ascending and pick the curve point
with maximum perpendicular distance from the chord joining the curve's
endpoints (ties break toward the smallest index).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geo import as_points
from .spatial_index import IndexedPoints, build

NOISE = -1

ROLE_NOISE = 0
ROLE_BORDER = 1
ROLE_CORE = 2
ROLE_NAMES = {ROLE_NOISE: "noise", ROLE_BORDER: "border", ROLE_CORE: "core"}

DEFAULT_MIN_PTS = 4  # twice the number of coordinate dimensions


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int = DEFAULT_MIN_PTS

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise DataError("eps must be positive")
        if self.min_pts < 1:
            raise DataError("min_pts must be >= 1")


@dataclass(frozen=True)
class DbscanLabeling:
    """Per-point cluster assignment (-1 for noise) and density role."""

    assignment: np.ndarray
    role: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.assignment.max()) + 1 if len(self.assignment) else 0


@dataclass(frozen=True)
class Cluster:
    id: int
    members: np.ndarray
    core_members: np.ndarray


def dbscan(points, params: DbscanParams, index: IndexedPoints | None = None) -> DbscanLabeling:
    """Label every point core/border/noise and assign cluster ids.

    ``index`` may be passed to reuse a previously built spatial index over
    the same points.  Memory grows with the total neighbor count, which is
    fine at the per-district, per-year sizes this pipeline works with.
    """
    pts = as_points(points)
    if len(pts) == 0:
        raise DataError("dbscan requires at least one point")
    idx = index if index is not None else build(pts)
    n = len(pts)
    eps, min_pts = params.eps, params.min_pts

    neighborhoods = [idx.radius_query(i, eps) for i in range(n)]
    counts = np.fromiter((len(nb) for nb in neighborhoods), dtype=np.int64, count=n)
    core = counts >= min_pts

    assignment = np.full(n, NOISE, dtype=np.int64)
    role = np.full(n, ROLE_NOISE, dtype=np.int8)
    role[core] = ROLE_CORE

    next_id = 0
    for i in range(n):
        if not core[i] or assignment[i] != NOISE:
            continue
        assignment[i] = next_id
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for m in neighborhoods[j]:
                if core[m] and assignment[m] == NOISE:
                    assignment[m] = next_id
                    queue.append(m)
        next_id += 1

    for i in range(n):
        if core[i]:
            continue
        nb = neighborhoods[i]
        core_nb = nb[core[nb]]
        if len(core_nb):
            # radius_query returns sorted indices, so [0] is the lowest-index core.
            assignment[i] = assignment[core_nb[0]]
            role[i] = ROLE_BORDER

    return DbscanLabeling(assignment=assignment, role=role)


def clusters(labeling: DbscanLabeling) -> list[Cluster]:
    """One Cluster per id, ordered by id; noise points are excluded."""
    out = []
    for cid in range(labeling.n_clusters):
        members = np.flatnonzero(labeling.assignment == cid)
        core_members = members[labeling.role[members] == ROLE_CORE]
        out.append(Cluster(id=cid, members=members, core_members=core_members))
    return out


def k_distance_curve(points, k: int, index: IndexedPoints | None = None) -> np.ndarray:
    """Every point's k-th nearest-neighbor distance, sorted ascending."""
    pts = as_points(points)
    if len(pts) < k + 1:
        raise DataError(f"k-distance curve needs at least {k + 1} points, got {len(pts)}")
    idx = index if index is not None else build(pts)
    dists = np.array([idx.kth_nn_distance(i, k) for i in range(len(pts))])
    dists.sort()
    return dists


def knee_index(values) -> int:
    """Index of the knee of an ascending curve: the point with maximum
    perpendicular distance from the chord joining the curve's endpoints.
    Ties break toward the smallest index; a single-point curve knees at 0.
    """
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1 or len(y) == 0:
        raise DataError("knee_index expects a nonempty 1D curve")
    m = len(y)
    if m == 1:
        return 0
    x = np.arange(m, dtype=np.float64)
    dy = y[-1] - y[0]
    dx = x[-1]  # chord runs from (0, y[0]) to (m-1, y[-1])
    num = np.abs(dy * x - dx * (y - y[0]))
    den = float(np.hypot(dy, dx))
    return int(np.argmax(num / den))


def select_epsilon(points, k: int = DEFAULT_MIN_PTS, index: IndexedPoints | None = None) -> float:
    """Pick eps as the k-distance curve value at the knee."""
    curve = k_distance_curve(points, k, index=index)
    return float(curve[knee_index(curve)])


def labeling_csv_rows(labeling: DbscanLabeling, ids=None) -> list[tuple]:
    """(point id, cluster id, role name) rows for CSV export."""
    n = len(labeling.assignment)
    if ids is None:
        ids = range(n)
    return [
        (pid, int(labeling.assignment[i]), ROLE_NAMES[int(labeling.role[i])])
        for i, pid in zip(range(n), ids)
    ]


def to_geojson(points, labeling: DbscanLabeling, include_members: bool = True,
               extra_properties: dict | None = None) -> dict:
    """Cluster results as a GeoJSON FeatureCollection.

    Representatives (mean of each cluster's core points) are always
    included; member points are optional.  GeoJSON coordinate order is
    [lon, lat].
    """
    from .nsi import representative  # local import to avoid a module cycle

    pts = as_points(points)
    base = dict(extra_properties or {})
    features = []
    for cluster in clusters(labeling):
        rep = representative(cluster, pts)
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [rep[1], rep[0]]},
                "properties": {
                    **base,
                    "kind": "representative",
                    "cluster": cluster.id,
                    "n_members": int(len(cluster.members)),
                    "n_core": int(len(cluster.core_members)),
                },
            }
        )
        if include_members:
            for i in cluster.members:
                features.append(
                    {
                        "type": "Feature",
                        "geometry": {
                            "type": "Point",
                            "coordinates": [float(pts[i, 1]), float(pts[i, 0])],
                        },
                        "properties": {
                            **base,
                            "kind": "member",
                            "cluster": cluster.id,
                            "role": ROLE_NAMES[int(labeling.role[i])],
                        },
                    }
                )
    return {"type": "FeatureCollection", "features": features}
