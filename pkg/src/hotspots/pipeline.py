"""Batch orchestration over (district, year) subsets of cleaned records.

These are the pure worker functions behind the CLI subcommands.  Tasks
are independent per (district, year) and may run in a process pool;
results always merge in (district, year) sort order, so output is
identical regardless of completion order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import clustering, nsi, stats, tendency
from .errors import DataError
from .geo import UNGRADED
from .ingest import assign_grades, records_points, record_years

CITYWIDE = "all"

DEFAULT_YEARS = (2012, 2022)

SKIP_TOO_FEW = "too few points"
SKIP_NO_CURVE = "too few points to select epsilon"
SKIP_NO_CLUSTERS = "no clusters"


def year_span(years: tuple[int, int]) -> list[int]:
    lo, hi = years
    if lo > hi:
        raise DataError(f"empty year range {years}")
    return list(range(lo, hi + 1))


def run_tasks(items: list, fn, jobs: int = 1) -> list:
    """Map ``fn`` over items, optionally in a process pool, keeping order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _district_key(district) -> tuple:
    return (1, 0) if district == CITYWIDE else (0, int(district))


def split_runs(records, years: tuple[int, int], citywide: bool = False) -> list[tuple]:
    """Sorted [(district, year, record indices)] for years holding data."""
    yrs = record_years(records)
    wanted = set(year_span(years))
    buckets: dict[tuple, list[int]] = {}
    for i, rec in enumerate(records):
        year = int(yrs[i])
        if year not in wanted:
            continue
        district = CITYWIDE if citywide else rec.district
        buckets.setdefault((district, year), []).append(i)
    keys = sorted(buckets, key=lambda k: (_district_key(k[0]), k[1]))
    return [(d, y, np.array(buckets[(d, y)], dtype=np.int64)) for d, y in keys]


@dataclass(frozen=True)
class ClusterRun:
    """Outcome of one (district, year) clustering task."""

    district: object
    year: int
    n_points: int
    eps: float | None
    eps_source: str  # "selected" | "override" | "skipped"
    skip_reason: str | None
    labeling: clustering.DbscanLabeling | None
    indices: np.ndarray


def cluster_subset(points, min_pts: int, eps_override: float | None):
    """(eps, eps_source, skip_reason, labeling) for one point subset."""
    n = len(points)
    if n < min_pts:
        return None, "skipped", SKIP_TOO_FEW, None
    if eps_override is not None:
        eps, source = float(eps_override), "override"
    else:
        if n < min_pts + 1:
            return None, "skipped", SKIP_NO_CURVE, None
        eps = clustering.select_epsilon(points, k=min_pts)
        source = "selected"
        if eps <= 0:
            return None, "skipped", SKIP_NO_CURVE, None
    labeling = clustering.dbscan(points, clustering.DbscanParams(eps, min_pts))
    return eps, source, None, labeling


def _cluster_task(args) -> ClusterRun:
    district, year, indices, points, min_pts, eps_override = args
    eps, source, reason, labeling = cluster_subset(points, min_pts, eps_override)
    return ClusterRun(
        district=district,
        year=year,
        n_points=len(points),
        eps=eps,
        eps_source=source,
        skip_reason=reason,
        labeling=labeling,
        indices=indices,
    )


def cluster_runs(
    records,
    years: tuple[int, int] = DEFAULT_YEARS,
    min_pts: int = clustering.DEFAULT_MIN_PTS,
    eps_override: float | None = None,
    citywide: bool = False,
    jobs: int = 1,
) -> list[ClusterRun]:
    """Select epsilon and cluster every (district, year) subset."""
    pts = records_points(records)
    tasks = [
        (district, year, indices, pts[indices], min_pts, eps_override)
        for district, year, indices in split_runs(records, years, citywide=citywide)
    ]
    return run_tasks(tasks, _cluster_task, jobs=jobs)


def district_year_counts(records, years: tuple[int, int]) -> list[tuple[int, int, int, float]]:
    """(district, year, count, percent-of-year) rows; empty years dropped."""
    yrs = record_years(records)
    wanted = set(year_span(years))
    counts: dict[tuple[int, int], int] = {}
    year_totals: dict[int, int] = {}
    for i, rec in enumerate(records):
        year = int(yrs[i])
        if year not in wanted:
            continue
        counts[(rec.district, year)] = counts.get((rec.district, year), 0) + 1
        year_totals[year] = year_totals.get(year, 0) + 1
    if not counts:
        raise DataError(f"no records in year range {years}")
    rows = []
    for (district, year), count in sorted(counts.items()):
        rows.append((district, year, count, 100.0 * count / year_totals[year]))
    return rows


def grid_counts(records, grid_size: int) -> list[tuple]:
    """Uniform grid_size x grid_size bin counts over the data's bounding box."""
    if grid_size < 1:
        raise DataError("grid size must be >= 1")
    pts = records_points(records)
    if len(pts) == 0:
        raise DataError("no records to bin")
    lat_edges = np.linspace(pts[:, 0].min(), pts[:, 0].max(), grid_size + 1)
    lon_edges = np.linspace(pts[:, 1].min(), pts[:, 1].max(), grid_size + 1)
    lat_bin = np.clip(np.searchsorted(lat_edges, pts[:, 0], side="right") - 1, 0, grid_size - 1)
    lon_bin = np.clip(np.searchsorted(lon_edges, pts[:, 1], side="right") - 1, 0, grid_size - 1)
    hist = np.zeros((grid_size, grid_size), dtype=np.int64)
    np.add.at(hist, (lat_bin, lon_bin), 1)
    rows = []
    for i in range(grid_size):
        for j in range(grid_size):
            rows.append(
                (
                    i,
                    j,
                    float(lat_edges[i]),
                    float(lat_edges[i + 1]),
                    float(lon_edges[j]),
                    float(lon_edges[j + 1]),
                    int(hist[i, j]),
                )
            )
    return rows


def hopkins_by_district(records, cfg: tendency.HopkinsConfig, years: tuple[int, int]):
    """(district, n_points, HopkinsSummary) per district, pooled over years."""
    yrs = record_years(records)
    wanted = set(year_span(years))
    buckets: dict[int, list[int]] = {}
    for i, rec in enumerate(records):
        if int(yrs[i]) in wanted:
            buckets.setdefault(rec.district, []).append(i)
    pts = records_points(records)
    out = []
    for district in sorted(buckets):
        subset = pts[np.array(buckets[district])]
        summary = tendency.hopkins_mean(subset, cfg)
        out.append((district, len(subset), summary))
    if not out:
        raise DataError(f"no records in year range {years}")
    return out


@dataclass(frozen=True)
class DistrictNsi:
    district: int
    result: nsi.NsiResult | None
    matrix: nsi.DistanceMatrix | None
    cluster_counts: dict[int, int]  # year -> number of clusters
    skipped_years: dict[int, str]  # year -> reason
    skip_reason: str | None  # set when the whole district could not be scored


def nsi_by_district(
    records,
    years: tuple[int, int] = DEFAULT_YEARS,
    min_pts: int = clustering.DEFAULT_MIN_PTS,
    eps_override: float | None = None,
    threshold: float = nsi.DEFAULT_THRESHOLD,
    threshold_mode: str = "fixed",
    jobs: int = 1,
) -> list[DistrictNsi]:
    """Cluster each district per year, score hotspot drift, classify.

    threshold_mode "fixed" uses ``threshold`` as given; "median" replaces
    it with the median NSI value of the scored districts in this run.
    """
    if threshold_mode not in ("fixed", "median"):
        raise DataError(f"unknown threshold mode {threshold_mode!r}")
    runs = cluster_runs(
        records, years=years, min_pts=min_pts, eps_override=eps_override, jobs=jobs
    )
    pts = records_points(records)
    by_district: dict[int, list[ClusterRun]] = {}
    for run in runs:
        by_district.setdefault(run.district, []).append(run)

    partial = []
    for district in sorted(by_district):
        rep_sets = []
        cluster_counts: dict[int, int] = {}
        skipped: dict[int, str] = {}
        for run in by_district[district]:
            if run.labeling is None:
                skipped[run.year] = run.skip_reason
                continue
            rep_set = nsi.representatives(pts[run.indices], run.labeling, run.year)
            if len(rep_set.reps) == 0:
                skipped[run.year] = SKIP_NO_CLUSTERS
                continue
            cluster_counts[run.year] = len(rep_set.reps)
            rep_sets.append(rep_set)
        if len(rep_sets) < 2:
            partial.append((district, None, None, cluster_counts, skipped))
            continue
        matrix = nsi.distance_matrix(rep_sets)
        partial.append((district, nsi.nsi(matrix), matrix, cluster_counts, skipped))

    values = [value for _, value, _, _, _ in partial if value is not None]
    if threshold_mode == "median" and values:
        threshold = nsi.median_threshold(values)

    out = []
    for district, value, matrix, cluster_counts, skipped in partial:
        if value is None:
            out.append(
                DistrictNsi(
                    district=district,
                    result=None,
                    matrix=None,
                    cluster_counts=cluster_counts,
                    skipped_years=skipped,
                    skip_reason="fewer than 2 years with clusters",
                )
            )
            continue
        result = nsi.NsiResult(
            district=district,
            value=value,
            years_used=matrix.years,
            classification=nsi.classify(value, threshold),
            threshold=threshold,
        )
        out.append(
            DistrictNsi(
                district=district,
                result=result,
                matrix=matrix,
                cluster_counts=cluster_counts,
                skipped_years=skipped,
                skip_reason=None,
            )
        )
    return out


def redline_analysis(
    records,
    district: int,
    layer,
    years: tuple[int, int] = DEFAULT_YEARS,
    min_pts: int = clustering.DEFAULT_MIN_PTS,
    eps_override: float | None = None,
) -> dict:
    """Re-cluster one district pooled across all years and test HOLC association.

    Returns a plain dict (JSON-ready) with the count table, percentage
    table, and chi-square outcome.
    """
    yrs_wanted = set(year_span(years))
    subset = [
        r for r in records if r.district == district and r.dispatch_time.year in yrs_wanted
    ]
    if not subset:
        raise DataError(f"no records for district {district} in year range {years}")
    points = records_points(subset)
    eps, source, reason, labeling = cluster_subset(points, min_pts, eps_override)
    if labeling is None:
        raise DataError(f"district {district}: {reason}")
    if labeling.n_clusters == 0:
        raise DataError(f"district {district}: no clusters found at eps={eps}")
    groups = stats.group_clusters(labeling)
    grades = assign_grades(points, layer)
    table = stats.contingency(grades, groups)
    result = stats.chi_square(table)
    percents = stats.percent_breakdown(table)
    sizes = [int((labeling.assignment == cid).sum()) for cid in range(labeling.n_clusters)]
    return {
        "district": district,
        "years": list(years),
        "n_points": len(subset),
        "eps": eps,
        "eps_source": source,
        "min_pts": min_pts,
        "cluster_sizes": sizes,
        "ungraded_points": table.ungraded,
        "row_labels": list(table.row_labels),
        "col_labels": list(table.col_labels),
        "counts": table.counts.tolist(),
        "percent": [[round(v, 4) for v in row] for row in percents.tolist()],
        "chi_square": {
            "statistic": result.statistic,
            "df": result.df,
            "p_value": result.p_value,
            "pruned_rows": list(result.pruned_rows),
            "pruned_cols": list(result.pruned_cols),
            "low_expected": result.low_expected,
        },
    }
