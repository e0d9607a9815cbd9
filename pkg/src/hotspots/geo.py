"""Shared coordinate types and array coercion helpers.

All analysis in this package runs on plane Euclidean geometry over
(latitude, longitude) degree coordinates.  Point collections are handled
as float64 arrays of shape (n, 2) with column order (lat, lon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

GRADES = ("A", "B", "C", "D")
UNGRADED = "Ungraded"


@dataclass(frozen=True)
class GeoPoint:
    """A single coordinate pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned rectangle in degree coordinates."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self) -> None:
        if not (self.lat_min <= self.lat_max and self.lon_min <= self.lon_max):
            raise DataError(f"inverted bounds: {self}")

    @property
    def height(self) -> float:
        return self.lat_max - self.lat_min

    @property
    def width(self) -> float:
        return self.lon_max - self.lon_min

    def is_degenerate(self) -> bool:
        return self.height == 0.0 or self.width == 0.0

    def contains(self, points: np.ndarray) -> bool:
        pts = as_points(points)
        return bool(
            (pts[:, 0] >= self.lat_min).all()
            and (pts[:, 0] <= self.lat_max).all()
            and (pts[:, 1] >= self.lon_min).all()
            and (pts[:, 1] <= self.lon_max).all()
        )

    @staticmethod
    def of_points(points: np.ndarray) -> "Bounds":
        pts = as_points(points)
        if len(pts) == 0:
            raise DataError("cannot take the bounding box of zero points")
        return Bounds(
            float(pts[:, 0].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].min()),
            float(pts[:, 1].max()),
        )


def as_points(points) -> np.ndarray:
    """Coerce a point collection into a float64 array of shape (n, 2).

    Accepts an (n, 2) array, a sequence of (lat, lon) pairs, or a sequence
    of GeoPoint instances.  An empty input yields shape (0, 2).
    """
    if isinstance(points, np.ndarray):
        arr = points.astype(np.float64, copy=False)
    else:
        seq = list(points)
        if seq and isinstance(seq[0], GeoPoint):
            arr = np.array([(p.lat, p.lon) for p in seq], dtype=np.float64)
        else:
            arr = np.asarray(seq, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError(f"expected point array of shape (n, 2), got {arr.shape}")
    return arr
