"""Path simulation of the killed walk, for independent validation of solver
outputs: exit locations, exit times, and occupation counts.

Sampling uses per-cell cumulative tables built once per stop region; the
stepping loop lives in ``_mc_step`` (numba kernel with a numpy fallback).
Identical seed and config give identical path sets on either backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._mc_step import walk_paths
from .errors import (
    InconclusiveSimulationError,
    InvalidSourceError,
    InvalidTargetError,
)
from .geometry import PointIndex, as_point, as_point_array, boundary, lex_sort, unique_points
from .kernels import TransitionKernel


@dataclass(frozen=True)
class SimulationConfig:
    """One batch of killed-walk paths: kernel, start, finite stop region,
    step cap, seed, and path count."""

    kernel: TransitionKernel
    start: tuple
    stop_region: np.ndarray
    n_paths: int
    seed: int
    path_cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "start", as_point(self.start))
        object.__setattr__(
            self, "stop_region", lex_sort(unique_points(as_point_array(self.stop_region)))
        )
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.path_cap is not None and self.path_cap < 1:
            raise ValueError("path_cap must be >= 1")
        idx = PointIndex(self.stop_region)
        if idx.index_of(self.start) < 0:
            raise InvalidSourceError(f"start {self.start} not in the stop region")

    @property
    def effective_cap(self) -> int:
        """Default cap: 100 * (region diameter)^2, the diffusive time scale
        of a centered walk across the region (bounding-box diagonal bound)."""
        if self.path_cap is not None:
            return self.path_cap
        span = self.stop_region.max(axis=0) - self.stop_region.min(axis=0) + 1
        diam_sq = int((span * span).sum())
        return max(100 * diam_sq, 100)


@dataclass(frozen=True)
class EstimatorResult:
    """Point estimate with a 95% normal half-width and truncation accounting.

    For probability estimators the half-width is the binomial
    1.96 * sqrt(p(1-p)/n); for occupation estimators it is 1.96 * s / sqrt(n).
    """

    point_estimate: float
    half_width_95: float
    n_effective: int
    truncated_paths: int


@dataclass
class SimulationResult:
    exit_points: np.ndarray
    exit_times: np.ndarray
    truncated: np.ndarray
    visits: np.ndarray | None = None

    @property
    def n_truncated(self) -> int:
        return int(self.truncated.sum())

    @property
    def completed(self) -> np.ndarray:
        return ~self.truncated


def _grid_tables(cfg: SimulationConfig):
    pts = cfg.stop_region
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    shape = hi - lo + 1
    ncells = int(np.prod(shape.astype(np.float64)))
    if ncells > 2**28:
        raise ValueError("stop region bounding box too large for grid tables")
    strides = np.ones(len(lo), dtype=np.int64)
    for k in range(len(lo) - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    cell_row = np.full(ncells, -1, dtype=np.int64)
    cells = (pts - lo) @ strides
    cell_row[cells] = np.arange(len(pts), dtype=np.int64)
    W = cfg.kernel.weight_array(pts)
    cumw = np.cumsum(W, axis=1)
    cumw[:, -1] = np.maximum(cumw[:, -1], 1.0)
    return lo, shape, strides, cell_row, cumw


def simulate_exit(cfg: SimulationConfig, count_visits_to=None) -> SimulationResult:
    """Run all paths to their first exit from the stop region (or the cap).

    Truncated paths are flagged, never merged into the exit statistics.
    Deterministic for a fixed seed, identical across backends.
    """
    lo, shape, strides, cell_row, cumw = _grid_tables(cfg)
    target_cell = -1
    if count_visits_to is not None:
        tgt = as_point(count_visits_to)
        off = np.asarray(tgt, dtype=np.int64) - lo
        if np.any(off < 0) or np.any(off >= shape):
            raise InvalidSourceError(f"visit target {tgt} not in the stop region")
        cell = int(off @ strides)
        if cell_row[cell] < 0:
            raise InvalidSourceError(f"visit target {tgt} not in the stop region")
        target_cell = cell
    exits, times, trunc, visits = walk_paths(
        np.asarray(cfg.start, dtype=np.int64),
        cfg.kernel.steps_array(),
        lo, shape, cell_row, cumw,
        cfg.n_paths, cfg.effective_cap, cfg.seed, target_cell,
    )
    if trunc.all():
        raise InconclusiveSimulationError(
            f"all {cfg.n_paths} paths hit the {cfg.effective_cap}-step cap")
    return SimulationResult(exit_points=exits, exit_times=times, truncated=trunc,
                            visits=visits if count_visits_to is not None else None)


def estimate_exit_probability(cfg: SimulationConfig, target_pts) -> EstimatorResult:
    """Binomial estimate of the probability of exiting through the target
    boundary subset, over completed paths only."""
    tgt = unique_points(as_point_array(target_pts))
    bpts = boundary(cfg.stop_region, cfg.kernel.steps_array())
    bindex = PointIndex(bpts)
    if np.any(bindex.lookup(tgt) < 0):
        missing = tgt[bindex.lookup(tgt) < 0][0]
        raise InvalidTargetError(
            f"target point {tuple(missing)} is not on the stop-region boundary")
    res = simulate_exit(cfg)
    done = res.completed
    n = int(done.sum())
    tindex = PointIndex(tgt)
    hits = int((tindex.lookup(res.exit_points[done]) >= 0).sum())
    p = hits / n
    hw = 1.96 * math.sqrt(p * (1.0 - p) / n)
    return EstimatorResult(point_estimate=p, half_width_95=hw,
                           n_effective=n, truncated_paths=res.n_truncated)


def estimate_green(cfg: SimulationConfig, source) -> EstimatorResult:
    """Mean number of visits to the source before exit, over completed paths:
    a Monte Carlo estimate of the Green function at (start, source)."""
    res = simulate_exit(cfg, count_visits_to=source)
    done = res.completed
    n = int(done.sum())
    v = res.visits[done].astype(np.float64)
    mean = float(v.mean())
    sd = float(v.std(ddof=1)) if n > 1 else 0.0
    hw = 1.96 * sd / math.sqrt(n)
    return EstimatorResult(point_estimate=mean, half_width_95=hw,
                           n_effective=n, truncated_paths=res.n_truncated)
