"""Clustering-tendency testing via the Hopkins statistic.

One trial samples n real points Q (without replacement) from the data P
and draws n uniform points Q-bar inside a rectangle covering P, then
compares squared nearest-neighbor distances:

    W = sum over q in Q     of min_{p in P, p != q} d(p, q)^2
    U = sum over q in Q-bar of min_{p in P}         d(p, q)^2

    H = U / (U + W)

H sits in [0, 1]: about 0.5 for spatially uniform data and close to 1
when the data is strongly clustered (real points then have far smaller
nearest-neighbor distances than uniform probes).  The degenerate case
U + W = 0 (all real points identical and every probe coincides with
them) is defined as 0.5.

Trials are independent; each derives its own random stream from
(seed, trial index), so a summary is deterministic for a fixed config
and independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geo import Bounds, as_points
from .spatial_index import build

DEFAULT_TRIALS = 100
MAX_SAMPLE = 500
MIN_SAMPLE = 10


@dataclass(frozen=True)
class HopkinsConfig:
    """Sampling configuration.

    ``sample_size`` defaults to min(5% of N, 500) clamped to at least 10
    and never above N // 2.  ``bounds`` defaults to the bounding box of
    the data.  Seeds are nonnegative 64-bit integers.
    """

    sample_size: int | None = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    bounds: Bounds | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise DataError("trials must be >= 1")
        if self.sample_size is not None and self.sample_size < 1:
            raise DataError("sample_size must be >= 1")


@dataclass(frozen=True)
class HopkinsSummary:
    mean: float
    std: float
    trials: int


def resolved_sample_size(cfg: HopkinsConfig, n_points: int) -> int:
    if cfg.sample_size is not None:
        size = cfg.sample_size
        if size > n_points // 2:
            raise DataError(
                f"sample_size {size} exceeds half the data size ({n_points} points)"
            )
        return size
    size = max(MIN_SAMPLE, min(n_points // 20, MAX_SAMPLE))
    return min(size, n_points // 2)


def hopkins(points, cfg: HopkinsConfig, trial_seed, index=None) -> float:
    """One Hopkins trial; ``trial_seed`` feeds numpy's default_rng.

    The random stream is consumed in a fixed order (real-point sample
    first, then the uniform probes), so a trial is fully determined by
    (points, cfg, trial_seed).  ``index`` may reuse a prebuilt spatial
    index over the same points.
    """
    pts = as_points(points)
    n_points = len(pts)
    if n_points < 4:
        raise DataError(f"hopkins requires at least 4 points, got {n_points}")
    bounds = cfg.bounds if cfg.bounds is not None else Bounds.of_points(pts)
    if not bounds.contains(pts):
        raise DataError("bounds do not contain all points")
    n = resolved_sample_size(cfg, n_points)

    rng = np.random.default_rng(trial_seed)
    sample = rng.choice(n_points, size=n, replace=False)
    u01 = rng.random((n, 2))
    probes = np.column_stack(
        (
            bounds.lat_min + u01[:, 0] * bounds.height,
            bounds.lon_min + u01[:, 1] * bounds.width,
        )
    )

    if index is None:
        index = build(pts)
    w = 0.0
    for i in sample:
        d = index.kth_nn_distance(int(i), 1)
        w += d * d
    u = 0.0
    for q in probes:
        d = index.nearest_distance(q)
        u += d * d

    total = u + w
    if total == 0.0:
        return 0.5
    return u / total


def hopkins_mean(points, cfg: HopkinsConfig) -> HopkinsSummary:
    """Trial-averaged Hopkins statistic with sample standard deviation."""
    pts = as_points(points)
    index = build(pts) if len(pts) else None
    values = np.array(
        [hopkins(pts, cfg, [cfg.seed, t], index=index) for t in range(cfg.trials)]
    )
    std = float(values.std(ddof=1)) if cfg.trials > 1 else 0.0
    return HopkinsSummary(mean=float(values.mean()), std=std, trials=cfg.trials)
