"""Hotspot drift index over yearly cluster representatives.

Each cluster is summarized by its *representative*: the coordinate-wise
mean of its core points (border points excluded).  Two yearly sets of
representatives S1, S2 are compared with a symmetric average-of-minimum
distance:

    d_set(S1, S2) = avg_{p1 in S1} min_{p2 in S2} d(p1, p2)
                  + avg_{p2 in S2} min_{p1 in S1} d(p2, p1)

Averaging (rather than summing over a pairing) keeps the value stable
under duplicated points and mismatched set sizes.  For a district with
yearly sets S_1..S_n the n x n matrix M[i, j] = d_set(S_i, S_j) is
collapsed into a single non-systemic index:

    NSI = Frobenius norm of M  (entrywise 2-norm)

A low NSI means the hotspot representatives barely move across years
(*systemic* pattern); a high NSI means they relocate (*non-systemic*).
The index is not normalized by n, so comparisons are only meaningful
within one run over one year range.

Distances are plane Euclidean over (lat, lon) degrees throughout, which
puts the conventional classification threshold at 0.06 degree units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geo import as_points

SYSTEMIC = "systemic"
NON_SYSTEMIC = "non-systemic"
DEFAULT_THRESHOLD = 0.06


@dataclass(frozen=True)
class RepresentativeSet:
    """Cluster representatives for one (district, year) run."""

    year: int
    reps: np.ndarray  # (m, 2) array; m == 0 when the year had no clusters


@dataclass(frozen=True)
class DistanceMatrix:
    years: tuple[int, ...]
    entries: np.ndarray


@dataclass(frozen=True)
class NsiResult:
    district: int
    value: float
    years_used: tuple[int, ...]
    classification: str
    threshold: float


def representative(cluster, points) -> np.ndarray:
    """Coordinate-wise mean of a cluster's core points."""
    pts = as_points(points)
    if len(cluster.core_members) == 0:
        raise DataError(f"cluster {cluster.id} has no core points")
    return pts[cluster.core_members].mean(axis=0)


def representatives(points, labeling, year: int) -> RepresentativeSet:
    """Representative set for one clustering run."""
    from .clustering import clusters

    pts = as_points(points)
    reps = [representative(c, pts) for c in clusters(labeling)]
    arr = np.array(reps) if reps else np.empty((0, 2))
    return RepresentativeSet(year=year, reps=arr)


def set_distance(s1, s2) -> float:
    """Symmetric average-of-minimum distance between two nonempty point sets."""
    a = as_points(s1)
    b = as_points(s2)
    if len(a) == 0 or len(b) == 0:
        raise DataError("set_distance requires two nonempty sets")
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt(diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2)
    return float(d.min(axis=1).mean() + d.min(axis=0).mean())


def distance_matrix(rep_sets) -> DistanceMatrix:
    """Pairwise set distances between the nonempty yearly sets.

    Years whose representative set is empty (no clusters found) are
    skipped; the years actually used are recorded in the result.  Fewer
    than two nonempty years is an error.
    """
    usable = [rs for rs in rep_sets if len(rs.reps) > 0]
    if len(usable) < 2:
        raise DataError(
            f"distance matrix needs at least 2 nonempty yearly sets, got {len(usable)}"
        )
    n = len(usable)
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = set_distance(usable[i].reps, usable[j].reps)
            entries[i, j] = d
            entries[j, i] = d
    return DistanceMatrix(years=tuple(rs.year for rs in usable), entries=entries)


def nsi(matrix: DistanceMatrix) -> float:
    """Frobenius norm (square root of the sum of squared entries)."""
    return float(np.sqrt((matrix.entries**2).sum()))


def classify(value: float, threshold: float = DEFAULT_THRESHOLD) -> str:
    """Systemic strictly below the threshold, non-systemic at or above."""
    if not threshold > 0:
        raise DataError("threshold must be positive")
    return SYSTEMIC if value < threshold else NON_SYSTEMIC


def median_threshold(values) -> float:
    """Run-median threshold mode: the median of a run's district NSI values."""
    arr = np.asarray(list(values), dtype=np.float64)
    if len(arr) == 0:
        raise DataError("median threshold needs at least one NSI value")
    return float(np.median(arr))


def rank_districts(results) -> list[NsiResult]:
    """Ascending by NSI value; ties break by district id."""
    ranked = sorted(results, key=lambda r: (r.value, r.district))
    if not ranked:
        raise DataError("rank_districts needs at least one result")
    return ranked
