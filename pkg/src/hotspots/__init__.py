"""Crime hotspot stability analysis.

Density-based clustering of incident coordinates per police district per
year, Hopkins clustering-tendency testing, a hotspot drift index over
yearly cluster representatives with systemic/non-systemic classification,
and chi-square association tests between cluster membership and
historical HOLC redlining grades.
"""

from .clustering import (
    DbscanLabeling,
    DbscanParams,
    clusters,
    dbscan,
    k_distance_curve,
    knee_index,
    select_epsilon,
)
from .errors import DataError, SchemaError
from .geo import GRADES, UNGRADED, Bounds, GeoPoint, as_points
from .ingest import (
    CleanReport,
    CrimeRecord,
    Polygon,
    PolygonLayer,
    assign_grade,
    clean,
    load_polygon_layer,
    parse_crime_csv,
    point_in_polygon,
)
# The drift-index function itself lives at hotspots.nsi.nsi; re-exporting it
# here would shadow the submodule of the same name.
from .nsi import (
    DistanceMatrix,
    NsiResult,
    RepresentativeSet,
    classify,
    distance_matrix,
    rank_districts,
    representative,
    set_distance,
)
from .spatial_index import IndexedPoints, build
from .stats import (
    ChiSquareResult,
    ContingencyTable,
    chi_square,
    chi_square_sf,
    contingency,
    group_clusters,
    percent_breakdown,
)
from .synth import ScenarioSpec, demo_city, gen_scenario, gen_uniform
from .tendency import HopkinsConfig, HopkinsSummary, hopkins, hopkins_mean

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "ChiSquareResult",
    "CleanReport",
    "ContingencyTable",
    "CrimeRecord",
    "DataError",
    "DbscanLabeling",
    "DbscanParams",
    "DistanceMatrix",
    "GeoPoint",
    "GRADES",
    "HopkinsConfig",
    "HopkinsSummary",
    "IndexedPoints",
    "NsiResult",
    "Polygon",
    "PolygonLayer",
    "RepresentativeSet",
    "ScenarioSpec",
    "SchemaError",
    "UNGRADED",
    "as_points",
    "assign_grade",
    "build",
    "chi_square",
    "chi_square_sf",
    "classify",
    "clean",
    "clusters",
    "contingency",
    "dbscan",
    "demo_city",
    "distance_matrix",
    "gen_scenario",
    "gen_uniform",
    "group_clusters",
    "hopkins",
    "hopkins_mean",
    "k_distance_curve",
    "knee_index",
    "load_polygon_layer",
    "parse_crime_csv",
    "percent_breakdown",
    "point_in_polygon",
    "rank_districts",
    "representative",
    "select_epsilon",
    "set_distance",
]
