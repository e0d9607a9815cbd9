"""Deterministic synthetic point processes for verification and demos.

Scenarios place Gaussian blobs at fixed centers, optionally drifting by a
fixed displacement per year, over a uniform background.  Gaussian blobs
(rather than uniform disks) make the core-point means of a density
clustering concentrate near the generative centers, so drift-index
expectations are analyzable.

Every generator is pure given its seed.  Yearly streams derive from
(seed, calendar year), so years can be generated in any order, in
parallel, with identical results.

The bundled 21-district demo city mixes stationary districts with
districts drifting along latitude at configurable multiples of the blob
spread; it writes the same crime-CSV schema the ingest module reads, so
synthetic data flows through the real pipeline unmodified.  District ids
skip 4 (and stay below 23) so default cleaning keeps every row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geo import Bounds, as_points
from .ingest import DEFAULT_SCHEMA, FIELDS

STATIONARY = "stationary"
DRIFTING = "drifting"

MIN_POINTS_PER_CLUSTER = 4  # keep blobs big enough to seed a core point

CITY_SEED = 20120101
CITY_YEARS = tuple(range(2012, 2023))
CITY_SIGMA = 0.002
CITY_DISTRICT_IDS = tuple(d for d in range(1, 23) if d != 4)  # 21 ids, none removed by default


@dataclass(frozen=True)
class ScenarioSpec:
    """Generative recipe for one district's yearly point sets."""

    mode: str
    years: tuple[int, ...]
    centers: np.ndarray
    sigma: float
    points_per_cluster: int
    drift_per_year: tuple[float, float] = (0.0, 0.0)
    background_fraction: float = 0.0
    bounds: Bounds | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (STATIONARY, DRIFTING):
            raise DataError(f"unknown scenario mode {self.mode!r}")
        if not self.sigma > 0:
            raise DataError("sigma must be positive")
        if self.points_per_cluster < MIN_POINTS_PER_CLUSTER:
            raise DataError(
                f"points_per_cluster must be >= {MIN_POINTS_PER_CLUSTER}"
            )
        if not 0.0 <= self.background_fraction < 1.0:
            raise DataError("background_fraction must be in [0, 1)")
        if len(self.years) == 0:
            raise DataError("years must be nonempty")
        object.__setattr__(self, "centers", as_points(self.centers))
        if len(self.centers) == 0:
            raise DataError("centers must be nonempty")


def gen_uniform(n: int, bounds: Bounds, seed) -> np.ndarray:
    """n i.i.d. uniform points in ``bounds``; seed may be an rng."""
    if n < 0:
        raise DataError("n must be nonnegative")
    if bounds.is_degenerate():
        raise DataError(f"degenerate bounds: {bounds}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u01 = rng.random((n, 2))
    return np.column_stack(
        (
            bounds.lat_min + u01[:, 0] * bounds.height,
            bounds.lon_min + u01[:, 1] * bounds.width,
        )
    )


def scenario_bounds(spec: ScenarioSpec) -> Bounds:
    """Explicit bounds, or a box around the centers covering drift plus 5 sigma."""
    if spec.bounds is not None:
        return spec.bounds
    pad = 5.0 * spec.sigma
    total_drift = np.array(spec.drift_per_year) * (len(spec.years) - 1)
    if spec.mode == STATIONARY:
        total_drift = np.zeros(2)
    lat = np.concatenate((spec.centers[:, 0], spec.centers[:, 0] + total_drift[0]))
    lon = np.concatenate((spec.centers[:, 1], spec.centers[:, 1] + total_drift[1]))
    return Bounds(
        float(lat.min() - pad),
        float(lat.max() + pad),
        float(lon.min() - pad),
        float(lon.max() + pad),
    )


def _background_count(n_blob: int, fraction: float) -> int:
    # fraction is the share of the year's total that is background noise
    return int(round(n_blob * fraction / (1.0 - fraction)))


def _year_points(spec: ScenarioSpec, bounds: Bounds, year_index: int, year: int) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, year])
    drift = np.array(spec.drift_per_year, dtype=np.float64)
    offset = drift * year_index if spec.mode == DRIFTING else np.zeros(2)
    parts = []
    for center in spec.centers:
        blob = center + offset + spec.sigma * rng.standard_normal(
            (spec.points_per_cluster, 2)
        )
        parts.append(blob)
    n_blob = spec.points_per_cluster * len(spec.centers)
    n_bg = _background_count(n_blob, spec.background_fraction)
    if n_bg:
        parts.append(gen_uniform(n_bg, bounds, rng))
    return np.concatenate(parts)


def gen_scenario(spec: ScenarioSpec) -> dict[int, np.ndarray]:
    """Per-year point arrays: blobs at (possibly drifted) centers plus noise.

    Within a year the draw order is fixed: one Gaussian blob per center in
    center order, then the uniform background, all from an rng seeded by
    (spec.seed, calendar year).
    """
    bounds = scenario_bounds(spec)
    return {
        year: _year_points(spec, bounds, year_index, year)
        for year_index, year in enumerate(spec.years)
    }


# ---------------------------------------------------------------------------
# The bundled demo city
# ---------------------------------------------------------------------------

def demo_city(
    seed: int = CITY_SEED,
    drift_sigma_multiple: float = 3.0,
    years: tuple[int, ...] = CITY_YEARS,
) -> dict[int, ScenarioSpec]:
    """21-district synthetic city: 11 stationary districts, 10 drifting.

    Districts sit on a 5-column grid of disjoint regions.  Each has two
    blobs separated along longitude; drifting districts move along
    latitude (perpendicular to the blob axis, so nearest-representative
    matching between years never aliases across blobs).  Odd district
    positions are stationary, even ones drift, alternating direction.
    """
    specs: dict[int, ScenarioSpec] = {}
    for pos, district in enumerate(CITY_DISTRICT_IDS):
        row, col = divmod(pos, 5)
        base_lat = 39.0 + row * 0.3
        base_lon = -75.5 + col * 0.3
        centers = np.array(
            [(base_lat, base_lon - 0.02), (base_lat, base_lon + 0.02)]
        )
        drifting = pos % 2 == 1
        direction = 1.0 if (pos // 2) % 2 == 0 else -1.0
        drift = (direction * drift_sigma_multiple * CITY_SIGMA, 0.0)
        pad = 0.08 + abs(drift[0]) * (len(years) - 1)
        bounds = Bounds(base_lat - pad, base_lat + pad, base_lon - 0.08, base_lon + 0.08)
        specs[district] = ScenarioSpec(
            mode=DRIFTING if drifting else STATIONARY,
            years=tuple(years),
            centers=centers,
            sigma=CITY_SIGMA,
            points_per_cluster=40,
            drift_per_year=drift if drifting else (0.0, 0.0),
            background_fraction=0.1,
            bounds=bounds,
            seed=seed + district,
        )
    return specs


def city_districts_by_mode(city: dict[int, ScenarioSpec]) -> dict[str, list[int]]:
    modes: dict[str, list[int]] = {STATIONARY: [], DRIFTING: []}
    for district, spec in sorted(city.items()):
        modes[spec.mode].append(district)
    return modes


def scenario_rows(district: int, spec: ScenarioSpec) -> list[dict]:
    """Crime-CSV rows (logical field names) for one district's scenario."""
    rows = []
    for year in spec.years:
        for lat, lon in gen_scenario_year(spec, year):
            rows.append(
                {
                    "dispatch_time": f"{year}-06-15 12:00:00",
                    "lat": repr(float(lat)),
                    "lon": repr(float(lon)),
                    "district": str(district),
                    "block_address": "100 BLOCK SYNTH AVE",
                }
            )
    return rows


def gen_scenario_year(spec: ScenarioSpec, year: int) -> np.ndarray:
    """Points for a single year (same stream as gen_scenario)."""
    if year not in spec.years:
        raise DataError(f"year {year} not in scenario years {spec.years}")
    return _year_points(spec, scenario_bounds(spec), spec.years.index(year), year)


def city_rows(city: dict[int, ScenarioSpec]) -> list[dict]:
    rows = []
    for district in sorted(city):
        rows.extend(scenario_rows(district, city[district]))
    return rows


def write_crime_csv(path, rows, schema: dict | None = None) -> None:
    """Write rows of logical fields under the mapped CSV column names."""
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([schema[field] for field in FIELDS])
        for row in rows:
            writer.writerow([row[field] for field in FIELDS])


# ---------------------------------------------------------------------------
# Redlining test fixtures
# ---------------------------------------------------------------------------

REDLINE_DISTRICT = 9
_STRIP_LON = (-75.3, -74.7)
_STRIP_BOUNDS = (38.8, 39.0, 39.2, 39.4, 39.6)  # latitude cut lines, D..A upward


def holc_strip_layer_geojson() -> dict:
    """Four horizontal grade strips (D at the bottom through A at the top)."""
    lon_min, lon_max = _STRIP_LON
    features = []
    for grade, (lo, hi) in zip(
        ("D", "C", "B", "A"), zip(_STRIP_BOUNDS[:-1], _STRIP_BOUNDS[1:])
    ):
        ring = [
            [lon_min, lo],
            [lon_max, lo],
            [lon_max, hi],
            [lon_min, hi],
            [lon_min, lo],
        ]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"grade": grade},
            }
        )
    return {"type": "FeatureCollection", "features": features}


def redline_fixture(biased: bool, seed: int) -> tuple[list[dict], dict]:
    """(crime rows, HOLC GeoJSON) with known grade/cluster dependence.

    One district, three blobs: a large one (becomes Cluster 1) and two
    small ones.  Biased mode parks the large blob mid-strip D and the
    small ones mid-strips B and C, forcing a strong association.  Uniform
    mode centers every blob on the B/C boundary at different longitudes
    and reuses one offset draw across blobs (the small blobs take leading
    slices of the large blob's offsets), so the grade mix is identical
    across clusters by construction and the null holds with margin.
    """
    rng = np.random.default_rng([seed, 77])
    sigma = 0.02
    year = 2020
    big_n, small_n = 400, 100
    lon_centers = (-75.2, -75.0, -74.8)
    if biased:
        lat_centers = (38.9, 39.3, 39.1)  # mid-D, mid-B, mid-C
        offsets = [
            sigma * rng.standard_normal((n, 2)) for n in (big_n, small_n, small_n)
        ]
    else:
        boundary = _STRIP_BOUNDS[2]  # B/C line
        lat_centers = (boundary, boundary, boundary)
        shared = sigma * rng.standard_normal((big_n, 2))
        offsets = [shared, shared[:small_n], shared[small_n : 2 * small_n]]
    rows = []
    for (lat_c, lon_c, off) in zip(lat_centers, lon_centers, offsets):
        for dlat, dlon in off:
            rows.append(
                {
                    "dispatch_time": f"{year}-06-15 12:00:00",
                    "lat": repr(float(lat_c + dlat)),
                    "lon": repr(float(lon_c + dlon)),
                    "district": str(REDLINE_DISTRICT),
                    "block_address": "100 BLOCK SYNTH AVE",
                }
            )
    return rows, holc_strip_layer_geojson()
