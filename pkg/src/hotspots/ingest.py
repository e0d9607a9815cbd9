"""Incident CSV ingestion, cleaning, and polygon-layer spatial joins.

Cleaning is total: malformed rows never raise, they become drop counts in
a CleanReport whose totals always reconcile with the input row count.
Rows are checked in a fixed order and counted once under the first
failure:

1. missing/NA/unparseable/out-of-range coordinates  -> dropped_na_location
2. unparseable dispatch timestamp, empty street address,
   or unparseable district id                        -> dropped_invalid_fields
3. district in the removed set (default {4, 23})     -> dropped_removed_districts

Polygon layers come from GeoJSON FeatureCollections (Polygon or
MultiPolygon features; MultiPolygons split into one entry per part).
Note GeoJSON stores coordinates as [lon, lat]; everything in this package
is (lat, lon), so loading swaps the axes.

Containment uses even-odd ray casting over all rings, so a point inside
a hole is outside the polygon.  Points exactly on any ring edge count as
inside; the same rule applies everywhere.  On overlapping polygons the
first containing entry in file order wins.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import DataError, SchemaError
from .geo import GRADES, UNGRADED, GeoPoint

FIELDS = ("dispatch_time", "lat", "lon", "district", "block_address")

DEFAULT_SCHEMA = {
    "dispatch_time": "dispatch_date_time",
    "lat": "lat",
    "lon": "lng",
    "district": "dc_dist",
    "block_address": "location_block",
}

DEFAULT_REMOVED_DISTRICTS = frozenset({4, 23})

_NA_TOKENS = {"", "na", "n/a", "nan", "null", "none"}

_DISPATCH_FORMATS = ("%m/%d/%Y %H:%M:%S", "%m/%d/%Y %H:%M", "%m/%d/%Y")


@dataclass(frozen=True)
class CrimeRecord:
    """One cleaned incident."""

    id: int
    dispatch_time: datetime
    location: GeoPoint
    district: int
    block_address: str


@dataclass(frozen=True)
class CleanReport:
    input_rows: int
    dropped_na_location: int
    dropped_invalid_fields: int
    dropped_removed_districts: int
    kept: int

    def __post_init__(self) -> None:
        drops = (
            self.dropped_na_location
            + self.dropped_invalid_fields
            + self.dropped_removed_districts
        )
        if self.kept + drops != self.input_rows:
            raise DataError("clean report totals do not reconcile")

    def to_dict(self) -> dict:
        return {
            "input_rows": self.input_rows,
            "dropped_na_location": self.dropped_na_location,
            "dropped_invalid_fields": self.dropped_invalid_fields,
            "dropped_removed_districts": self.dropped_removed_districts,
            "kept": self.kept,
        }


def parse_crime_csv(path, schema: dict | None = None) -> list[dict]:
    """Read raw rows from a UTF-8 CSV with a header row.

    ``schema`` maps the logical field names in FIELDS to column names in
    the file (defaults to the OpenDataPhilly names).  No validation is
    applied; each row keeps its 0-based ordinal under "ordinal".  A
    mapped column absent from the header is a SchemaError naming it.
    """
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    rows: list[dict] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, restval="")
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, expected a CSV header row")
        header = set(reader.fieldnames)
        for field in FIELDS:
            if schema[field] not in header:
                raise SchemaError(
                    f"{path}: missing column {schema[field]!r} (mapped from {field!r})"
                )
        for ordinal, raw in enumerate(reader):
            row = {field: (raw.get(schema[field]) or "").strip() for field in FIELDS}
            row["ordinal"] = ordinal
            rows.append(row)
    return rows


def parse_dispatch(text: str) -> datetime | None:
    """Parse a dispatch timestamp; None when no known format matches."""
    text = text.strip()
    if not text:
        return None
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        pass
    for fmt in _DISPATCH_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    return None


def _parse_coordinate(text: str) -> float | None:
    if text.lower() in _NA_TOKENS:
        return None
    try:
        return float(text)
    except ValueError:
        return None


def clean(
    rows, removed_districts=DEFAULT_REMOVED_DISTRICTS
) -> tuple[list[CrimeRecord], CleanReport]:
    """Validate raw rows into CrimeRecords plus a reconciling CleanReport.

    Record ids are the surviving rows' original ordinals, which makes
    cleaning idempotent: re-cleaning the cleaned output keeps every
    record (ids then renumber to the new file's ordinals).
    """
    removed = frozenset(int(d) for d in removed_districts)
    records: list[CrimeRecord] = []
    na_location = invalid_fields = removed_count = 0
    for row in rows:
        lat = _parse_coordinate(row["lat"])
        lon = _parse_coordinate(row["lon"])
        if lat is None or lon is None:
            na_location += 1
            continue
        try:
            location = GeoPoint(lat, lon)
        except ValueError:
            na_location += 1
            continue
        dispatch = parse_dispatch(row["dispatch_time"])
        address = row["block_address"].strip()
        try:
            district = int(row["district"])
        except ValueError:
            district = None
        if dispatch is None or not address or district is None or district < 0:
            invalid_fields += 1
            continue
        if district in removed:
            removed_count += 1
            continue
        records.append(
            CrimeRecord(
                id=int(row["ordinal"]),
                dispatch_time=dispatch,
                location=location,
                district=district,
                block_address=address,
            )
        )
    report = CleanReport(
        input_rows=len(rows),
        dropped_na_location=na_location,
        dropped_invalid_fields=invalid_fields,
        dropped_removed_districts=removed_count,
        kept=len(records),
    )
    return records, report


def write_records_csv(records, path, schema: dict | None = None) -> None:
    """Write cleaned records with the input column names plus an id column."""
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [schema[field] for field in FIELDS])
        for rec in records:
            writer.writerow(
                [
                    rec.id,
                    rec.dispatch_time.isoformat(sep=" "),
                    repr(rec.location.lat),
                    repr(rec.location.lon),
                    rec.district,
                    rec.block_address,
                ]
            )


def records_points(records) -> np.ndarray:
    """(n, 2) array of (lat, lon) in record order."""
    return np.array(
        [(r.location.lat, r.location.lon) for r in records], dtype=np.float64
    ).reshape(-1, 2)


def record_years(records) -> np.ndarray:
    return np.array([r.dispatch_time.year for r in records], dtype=np.int64)


@dataclass(frozen=True)
class Polygon:
    """Outer ring plus optional hole rings, each an (m, 2) array of (lat, lon).

    Rings are stored open (no repeated closing vertex); closure is
    implicit.  Every ring needs at least 3 distinct vertices.
    """

    outer: np.ndarray
    holes: tuple[np.ndarray, ...] = ()


@dataclass(frozen=True)
class PolygonLayer:
    """Ordered (Polygon, tag) entries; order defines the containment scan."""

    entries: tuple


def _as_ring(coords) -> np.ndarray:
    ring = np.asarray(coords, dtype=np.float64)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise DataError(f"ring must be an (m, 2) coordinate array, got {ring.shape}")
    if len(ring) >= 2 and (ring[0] == ring[-1]).all():
        ring = ring[:-1]
    if len(np.unique(ring, axis=0)) < 3:
        raise DataError("ring needs at least 3 distinct vertices")
    return ring


def polygon_from_rings(rings) -> Polygon:
    """Build a Polygon from (lat, lon) rings; first ring is the outer one."""
    rings = [_as_ring(r) for r in rings]
    if not rings:
        raise DataError("polygon needs at least an outer ring")
    return Polygon(outer=rings[0], holes=tuple(rings[1:]))


def _geojson_rings(coordinates) -> list[np.ndarray]:
    # GeoJSON ring: [[lon, lat], ...] -> (lat, lon) array
    return [np.asarray(ring, dtype=np.float64)[:, ::-1] for ring in coordinates]


def load_polygon_layer(path, tag_property: str, holc: bool = False) -> PolygonLayer:
    """Load tagged polygons from a GeoJSON FeatureCollection.

    MultiPolygon features split into one entry per part, all carrying the
    feature's tag.  With ``holc=True`` tags must be HOLC grades A-D.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed GeoJSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise SchemaError(f"{path}: expected a GeoJSON FeatureCollection")
    entries = []
    for i, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        if tag_property not in props:
            raise SchemaError(f"{path}: feature {i} missing property {tag_property!r}")
        tag = props[tag_property]
        if holc:
            tag = str(tag).strip()
            if tag not in GRADES:
                raise SchemaError(
                    f"{path}: feature {i} has grade {tag!r}, expected one of {GRADES}"
                )
        geometry = feature.get("geometry") or {}
        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if gtype == "Polygon":
            parts = [coords]
        elif gtype == "MultiPolygon":
            parts = coords
        else:
            raise SchemaError(f"{path}: feature {i} has geometry {gtype!r}, "
                              "expected Polygon or MultiPolygon")
        for part in parts:
            entries.append((polygon_from_rings(_geojson_rings(part)), tag))
    return PolygonLayer(entries=tuple(entries))


def _on_ring_edge(lat: float, lon: float, ring: np.ndarray) -> bool:
    n = len(ring)
    for i in range(n):
        y1, x1 = ring[i]
        y2, x2 = ring[(i + 1) % n]
        cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1)
        if cross != 0.0:
            continue
        if min(x1, x2) <= lon <= max(x1, x2) and min(y1, y2) <= lat <= max(y1, y2):
            return True
    return False


def _ray_crossings(lat: float, lon: float, ring: np.ndarray) -> int:
    # Horizontal ray toward +lon; half-open vertex rule avoids double counts.
    crossings = 0
    n = len(ring)
    for i in range(n):
        y1, x1 = ring[i]
        y2, x2 = ring[(i + 1) % n]
        if (y1 > lat) == (y2 > lat):
            continue
        x_at = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
        if lon < x_at:
            crossings += 1
    return crossings


def point_in_polygon(p, poly: Polygon) -> bool:
    """Even-odd containment; ring edges count as inside, holes as outside."""
    lat, lon = (p.lat, p.lon) if isinstance(p, GeoPoint) else (float(p[0]), float(p[1]))
    rings = (poly.outer, *poly.holes)
    for ring in rings:
        if _on_ring_edge(lat, lon, ring):
            return True
    crossings = sum(_ray_crossings(lat, lon, ring) for ring in rings)
    return crossings % 2 == 1


def assign_grade(p, layer: PolygonLayer) -> str:
    """Tag of the first containing polygon in layer order, else Ungraded."""
    for poly, tag in layer.entries:
        if point_in_polygon(p, poly):
            return tag
    return UNGRADED


def assign_grades(points, layer: PolygonLayer) -> list[str]:
    """Grade for each point of an array-like of (lat, lon) pairs."""
    return [assign_grade(p, layer) for p in np.asarray(points, dtype=np.float64)]
