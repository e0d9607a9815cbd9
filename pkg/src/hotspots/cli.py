"""Batch command-line front end.

Subcommands: clean, heatmap, cluster, hopkins, nsi, redline, synth.
Every setting can come from a JSON config file (--config) and every
config key has a flag override; flags win.  Commands are deterministic
given config plus seeds, and reruns produce byte-identical outputs.

Exit codes: 0 success, 1 usage/config error, 2 data error.  Errors are
reported as one JSON object on stderr: {"error": ..., "kind": ...}.

All commands except synth accept any crime CSV (raw or already cleaned)
and apply the cleaning rules on the way in; cleaning is idempotent, so
feeding a cleaned file back through is harmless.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import clustering, nsi, pipeline, stats, synth, tendency
from .errors import DataError, SchemaError
from .ingest import (
    DEFAULT_REMOVED_DISTRICTS,
    DEFAULT_SCHEMA,
    clean,
    load_polygon_layer,
    parse_crime_csv,
    records_points,
    write_records_csv,
)

_CONFIG_KEYS = {
    "input",
    "output_dir",
    "holc",
    "districts_geojson",
    "columns",
    "removed_districts",
    "years",
    "min_pts",
    "eps",
    "threshold",
    "threshold_mode",
    "grid_size",
    "jobs",
    "seed",
    "hopkins_sample_size",
    "hopkins_trials",
    "district",
    "grade_property",
    "citywide",
    "dump_matrices",
}

_COLUMN_FLAGS = {
    "dispatch_time": "col_dispatch",
    "lat": "col_lat",
    "lon": "col_lon",
    "district": "col_district",
    "block_address": "col_address",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # map argparse failures onto exit code 1
        raise UsageError(message)


def _parse_years(text: str) -> tuple[int, int]:
    parts = text.split("-")
    try:
        if len(parts) == 1:
            year = int(parts[0])
            return (year, year)
        if len(parts) == 2:
            return (int(parts[0]), int(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"cannot parse year range {text!r}; expected YYYY or YYYY-YYYY")


def _parse_districts(text: str) -> frozenset[int]:
    items = [part.strip() for part in text.split(",") if part.strip()]
    try:
        return frozenset(int(part) for part in items)
    except ValueError:
        raise UsageError(f"cannot parse district list {text!r}")


def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"{flag} expects 'a,b', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _setting(args, cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if cfg.get(key) is not None:
        return cfg[key]
    return default


def _schema(args, cfg: dict) -> dict:
    schema = dict(DEFAULT_SCHEMA)
    schema.update(cfg.get("columns") or {})
    for field, flag in _COLUMN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            schema[field] = value
    return schema


def _years(args, cfg: dict) -> tuple[int, int]:
    value = _setting(args, cfg, "years", None)
    if value is None:
        return pipeline.DEFAULT_YEARS
    if isinstance(value, str):
        return _parse_years(value)
    lo, hi = value
    return (int(lo), int(hi))


def _removed_districts(args, cfg: dict) -> frozenset[int]:
    value = _setting(args, cfg, "removed_districts", None)
    if value is None:
        return DEFAULT_REMOVED_DISTRICTS
    if isinstance(value, str):
        return _parse_districts(value)
    return frozenset(int(d) for d in value)


def _load_records(args, cfg: dict):
    path = _setting(args, cfg, "input")
    if path is None:
        raise UsageError("an input CSV is required (--input or config 'input')")
    rows = parse_crime_csv(path, _schema(args, cfg))
    records, report = clean(rows, _removed_districts(args, cfg))
    if not records:
        raise DataError(f"{path}: no records survive cleaning")
    return records, report


def _out_dir(args, cfg: dict) -> Path:
    out = Path(_setting(args, cfg, "output_dir", "hotspots_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_clean(args, cfg: dict) -> int:
    path = _setting(args, cfg, "input")
    if path is None:
        raise UsageError("an input CSV is required (--input or config 'input')")
    schema = _schema(args, cfg)
    rows = parse_crime_csv(path, schema)
    records, report = clean(rows, _removed_districts(args, cfg))
    out = _out_dir(args, cfg)
    write_records_csv(records, out / "cleaned.csv", schema)
    _write_json(out / "clean_report.json", report.to_dict())
    print(f"kept {report.kept} of {report.input_rows} rows -> {out / 'cleaned.csv'}")
    return 0


def cmd_heatmap(args, cfg: dict) -> int:
    records, _ = _load_records(args, cfg)
    years = _years(args, cfg)
    out = _out_dir(args, cfg)
    rows = pipeline.district_year_counts(records, years)
    _write_csv(
        out / "district_year_percent.csv",
        ["district", "year", "count", "percent"],
        [(d, y, c, _fmt(p)) for d, y, c, p in rows],
    )
    grid_size = int(_setting(args, cfg, "grid_size", 50))
    grid_rows = pipeline.grid_counts(records, grid_size)
    _write_csv(
        out / "grid_counts.csv",
        ["lat_bin", "lon_bin", "lat_min", "lat_max", "lon_min", "lon_max", "count"],
        [(a, b, _fmt(c), _fmt(d), _fmt(e), _fmt(f), g) for a, b, c, d, e, f, g in grid_rows],
    )
    print(f"wrote {len(rows)} district-year rows and {grid_size}x{grid_size} grid -> {out}")
    return 0


def _cluster_settings(args, cfg: dict):
    min_pts = int(_setting(args, cfg, "min_pts", clustering.DEFAULT_MIN_PTS))
    eps = _setting(args, cfg, "eps", None)
    return min_pts, (float(eps) if eps is not None else None)


def cmd_cluster(args, cfg: dict) -> int:
    records, _ = _load_records(args, cfg)
    years = _years(args, cfg)
    min_pts, eps_override = _cluster_settings(args, cfg)
    citywide = bool(_setting(args, cfg, "citywide", False))
    jobs = int(_setting(args, cfg, "jobs", 1))
    runs = pipeline.cluster_runs(
        records, years=years, min_pts=min_pts, eps_override=eps_override,
        citywide=citywide, jobs=jobs,
    )
    out = _out_dir(args, cfg)
    pts = records_points(records)

    label_rows = []
    eps_rows = []
    features = []
    for run in runs:
        eps_rows.append(
            (
                run.district,
                run.year,
                run.n_points,
                _fmt(run.eps) if run.eps is not None else "",
                run.eps_source,
                run.skip_reason or "",
            )
        )
        if run.labeling is None:
            continue
        ids = [records[i].id for i in run.indices]
        for local, (pid, cid, role) in enumerate(
            clustering.labeling_csv_rows(run.labeling, ids)
        ):
            p = pts[run.indices[local]]
            label_rows.append(
                (run.district, run.year, pid, _fmt(p[0]), _fmt(p[1]), cid, role)
            )
        doc = clustering.to_geojson(
            pts[run.indices],
            run.labeling,
            include_members=False,
            extra_properties={"district": run.district, "year": run.year,
                              "eps": run.eps},
        )
        features.extend(doc["features"])

    _write_csv(
        out / "cluster_labels.csv",
        ["district", "year", "id", "lat", "lon", "cluster", "role"],
        label_rows,
    )
    _write_csv(
        out / "epsilon_log.csv",
        ["district", "year", "n_points", "eps", "source", "notice"],
        eps_rows,
    )
    _write_json(
        out / "representatives.geojson",
        {"type": "FeatureCollection", "features": features},
    )
    skipped = sum(1 for run in runs if run.labeling is None)
    print(f"clustered {len(runs) - skipped} runs ({skipped} skipped) -> {out}")
    return 0


def cmd_hopkins(args, cfg: dict) -> int:
    records, _ = _load_records(args, cfg)
    years = _years(args, cfg)
    sample_size = _setting(args, cfg, "hopkins_sample_size", None)
    cfg_h = tendency.HopkinsConfig(
        sample_size=int(sample_size) if sample_size is not None else None,
        trials=int(_setting(args, cfg, "hopkins_trials", tendency.DEFAULT_TRIALS)),
        seed=int(_setting(args, cfg, "seed", 0)),
    )
    rows = pipeline.hopkins_by_district(records, cfg_h, years)
    out = _out_dir(args, cfg)
    _write_csv(
        out / "hopkins_by_district.csv",
        ["district", "n_points", "mean", "std", "trials"],
        [
            (district, n, _fmt(s.mean), _fmt(s.std), s.trials)
            for district, n, s in rows
        ],
    )
    print(f"wrote Hopkins summaries for {len(rows)} districts -> {out}")
    return 0


def cmd_nsi(args, cfg: dict) -> int:
    records, _ = _load_records(args, cfg)
    years = _years(args, cfg)
    min_pts, eps_override = _cluster_settings(args, cfg)
    threshold = float(_setting(args, cfg, "threshold", nsi.DEFAULT_THRESHOLD))
    threshold_mode = _setting(args, cfg, "threshold_mode", "fixed")
    jobs = int(_setting(args, cfg, "jobs", 1))
    scored = pipeline.nsi_by_district(
        records, years=years, min_pts=min_pts, eps_override=eps_override,
        threshold=threshold, threshold_mode=threshold_mode, jobs=jobs,
    )
    out = _out_dir(args, cfg)

    results = [d.result for d in scored if d.result is not None]
    if not results:
        raise DataError("no district could be scored (need >= 2 years with clusters)")
    ranked = nsi.rank_districts(results)
    by_district = {d.district: d for d in scored}

    csv_rows = []
    report = {"threshold_mode": threshold_mode, "districts": [], "skipped_districts": []}
    for res in ranked:
        detail = by_district[res.district]
        counts = ";".join(
            f"{year}:{detail.cluster_counts[year]}" for year in res.years_used
        )
        csv_rows.append(
            (
                res.district,
                _fmt(res.value),
                res.classification,
                _fmt(res.threshold),
                " ".join(str(y) for y in res.years_used),
                counts,
            )
        )
        report["districts"].append(
            {
                "district": res.district,
                "nsi": res.value,
                "classification": res.classification,
                "threshold": res.threshold,
                "years_used": list(res.years_used),
                "cluster_counts": {str(y): detail.cluster_counts[y] for y in res.years_used},
                "skipped_years": {str(y): r for y, r in sorted(detail.skipped_years.items())},
            }
        )
    for detail in scored:
        if detail.result is None:
            report["skipped_districts"].append(
                {"district": detail.district, "reason": detail.skip_reason}
            )
    _write_csv(
        out / "nsi_report.csv",
        ["district", "nsi", "classification", "threshold", "years_used", "cluster_counts"],
        csv_rows,
    )
    _write_json(out / "nsi_report.json", report)

    if bool(_setting(args, cfg, "dump_matrices", False)):
        matrix_dir = out / "matrices"
        matrix_dir.mkdir(exist_ok=True)
        for detail in scored:
            if detail.matrix is None:
                continue
            header = ["year"] + [str(y) for y in detail.matrix.years]
            rows = [
                [year] + [_fmt(v) for v in row]
                for year, row in zip(detail.matrix.years, detail.matrix.entries)
            ]
            _write_csv(matrix_dir / f"district_{detail.district}_matrix.csv", header, rows)

    print(f"ranked {len(ranked)} districts -> {out / 'nsi_report.csv'}")
    return 0


def _render_table(title: str, row_labels, col_labels, cells) -> list[str]:
    width = max(len(str(c)) for c in col_labels) + 2
    lines = [title, "grade".ljust(8) + "".join(str(c).rjust(width) for c in col_labels)]
    for label, row in zip(row_labels, cells):
        lines.append(str(label).ljust(8) + "".join(str(v).rjust(width) for v in row))
    return lines


def cmd_redline(args, cfg: dict) -> int:
    records, _ = _load_records(args, cfg)
    district = _setting(args, cfg, "district")
    if district is None:
        raise UsageError("a district id is required (--district or config 'district')")
    holc_path = _setting(args, cfg, "holc")
    if holc_path is None:
        raise UsageError("a HOLC GeoJSON layer is required (--holc or config 'holc')")
    layer = load_polygon_layer(
        holc_path, _setting(args, cfg, "grade_property", "grade"), holc=True
    )
    years = _years(args, cfg)
    min_pts, eps_override = _cluster_settings(args, cfg)
    report = pipeline.redline_analysis(
        records, int(district), layer, years=years, min_pts=min_pts,
        eps_override=eps_override,
    )
    out = _out_dir(args, cfg)
    _write_json(out / "redline_report.json", report)

    chi = report["chi_square"]
    lines = [f"district {report['district']}  years {report['years'][0]}-{report['years'][1]}"]
    lines += _render_table("counts", report["row_labels"], report["col_labels"], report["counts"])
    lines += _render_table(
        "percent by cluster group",
        report["row_labels"],
        report["col_labels"],
        [[f"{v:.1f}%" for v in row] for row in report["percent"]],
    )
    lines.append(
        f"chi-square = {chi['statistic']:.4g}  df = {chi['df']}  p = {chi['p_value']:.4g}"
    )
    if chi["pruned_rows"]:
        lines.append(f"pruned all-zero rows: {', '.join(chi['pruned_rows'])}")
    if chi["pruned_cols"]:
        lines.append(f"pruned all-zero columns: {', '.join(chi['pruned_cols'])}")
    if report["ungraded_points"]:
        lines.append(f"ungraded points excluded: {report['ungraded_points']}")
    if chi["low_expected"]:
        lines.append("warning: some expected cell counts are below 5")
    text = "\n".join(lines) + "\n"
    (out / "redline_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_synth(args, cfg: dict) -> int:
    out_path = args.out
    if out_path is None:
        raise UsageError("synth requires --out")
    seed = int(_setting(args, cfg, "seed", synth.CITY_SEED))
    if args.mode is None:
        city = synth.demo_city(seed=seed, drift_sigma_multiple=args.drift_multiple)
        rows = synth.city_rows(city)
    else:
        if args.centers is None:
            raise UsageError("scenario mode requires --centers")
        centers = [
            _parse_pair(part, "--centers") for part in args.centers.split(";") if part
        ]
        years = _years(args, cfg)
        bounds = None
        if args.bounds is not None:
            vals = [float(v) for v in args.bounds.split(",")]
            if len(vals) != 4:
                raise UsageError("--bounds expects latmin,latmax,lonmin,lonmax")
            from .geo import Bounds

            bounds = Bounds(*vals)
        spec = synth.ScenarioSpec(
            mode=args.mode,
            years=tuple(pipeline.year_span(years)),
            centers=np.array(centers),
            sigma=args.sigma,
            points_per_cluster=args.points_per_cluster,
            drift_per_year=_parse_pair(args.drift, "--drift") if args.drift else (0.0, 0.0),
            background_fraction=args.background_fraction,
            bounds=bounds,
            seed=seed,
        )
        rows = synth.scenario_rows(args.district, spec)
    synth.write_crime_csv(out_path, rows, _schema(args, cfg))
    print(f"wrote {len(rows)} synthetic rows -> {out_path}")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its keys")
    sub.add_argument("--input", help="crime CSV (raw or cleaned)")
    sub.add_argument("--output-dir", dest="output_dir", help="output directory")
    sub.add_argument("--years", help="inclusive year range, e.g. 2012-2022")
    sub.add_argument("--removed-districts", dest="removed_districts",
                     help='districts dropped during cleaning, e.g. "4,23"; "" keeps all')
    for field, flag in _COLUMN_FLAGS.items():
        sub.add_argument(f"--{flag.replace('_', '-')}", dest=flag,
                         help=f"CSV column holding {field}")


def _add_cluster_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--min-pts", dest="min_pts", type=int,
                     help="minimum closed-ball neighborhood size for a core point")
    sub.add_argument("--eps", type=float, help="fixed eps override (degrees)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hotspots", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("clean", help="validate and clean a crime CSV")
    _add_common(sub)

    sub = subs.add_parser("heatmap", help="district-year percentages and grid bin counts")
    _add_common(sub)
    sub.add_argument("--grid-size", dest="grid_size", type=int,
                     help="grid resolution per axis (default 50)")

    sub = subs.add_parser("cluster", help="per-(district, year) DBSCAN runs")
    _add_common(sub)
    _add_cluster_flags(sub)
    sub.add_argument("--citywide", action="store_const", const=True, default=None,
                     help="cluster without the district partition")
    sub.add_argument("--jobs", type=int, help="worker processes (default 1)")

    sub = subs.add_parser("hopkins", help="per-district clustering tendency")
    _add_common(sub)
    sub.add_argument("--sample-size", dest="hopkins_sample_size", type=int)
    sub.add_argument("--trials", dest="hopkins_trials", type=int)
    sub.add_argument("--seed", type=int)

    sub = subs.add_parser("nsi", help="rank districts by hotspot drift")
    _add_common(sub)
    _add_cluster_flags(sub)
    sub.add_argument("--threshold", type=float,
                     help="systemic/non-systemic split (default 0.06)")
    sub.add_argument("--threshold-mode", dest="threshold_mode",
                     choices=("fixed", "median"))
    sub.add_argument("--dump-matrices", dest="dump_matrices", action="store_const",
                     const=True, default=None, help="write per-district distance matrices")
    sub.add_argument("--jobs", type=int)

    sub = subs.add_parser("redline", help="HOLC-grade association test for one district")
    _add_common(sub)
    _add_cluster_flags(sub)
    sub.add_argument("--district", type=int, help="district to analyze")
    sub.add_argument("--holc", help="HOLC GeoJSON layer")
    sub.add_argument("--grade-property", dest="grade_property",
                     help="feature property holding the grade (default 'grade')")

    sub = subs.add_parser("synth", help="generate synthetic crime CSV fixtures")
    _add_common(sub)
    sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--drift-multiple", dest="drift_multiple", type=float, default=3.0,
                     help="city mode: drift per year in multiples of sigma")
    sub.add_argument("--mode", choices=(synth.STATIONARY, synth.DRIFTING),
                     help="single-scenario mode (default: the 21-district demo city)")
    sub.add_argument("--district", type=int, default=1)
    sub.add_argument("--centers", help="semicolon-separated lat,lon pairs")
    sub.add_argument("--sigma", type=float, default=0.002)
    sub.add_argument("--points-per-cluster", dest="points_per_cluster", type=int, default=40)
    sub.add_argument("--drift", help="per-year displacement dlat,dlon")
    sub.add_argument("--background-fraction", dest="background_fraction",
                     type=float, default=0.0)
    sub.add_argument("--bounds", help="latmin,latmax,lonmin,lonmax")

    return parser


_COMMANDS = {
    "clean": cmd_clean,
    "heatmap": cmd_heatmap,
    "cluster": cmd_cluster,
    "hopkins": cmd_hopkins,
    "nsi": cmd_nsi,
    "redline": cmd_redline,
    "synth": cmd_synth,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": message, "kind": kind}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        return _fail("usage", str(exc), 1)
    except (SchemaError, DataError) as exc:
        return _fail("data", str(exc), 2)
    except OSError as exc:
        return _fail("data", str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
