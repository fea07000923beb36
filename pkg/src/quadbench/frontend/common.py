"""Shared front-end types: paths, budgets, planning maps and the path validator."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import ConfigError, ContractError, InputError
from ..world import VoxelGrid
from . import _kernels


@dataclass(frozen=True)
class PlannerBudget:
    timeout: float = 0.2
    goal_threshold: float = 1.0

    def __post_init__(self):
        if not (self.timeout > 0 and self.goal_threshold > 0):
            raise ConfigError("budget timeout and goal threshold must be positive")


@dataclass(frozen=True)
class LatticeState:
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class Path:
    waypoints: np.ndarray
    cost: float
    planner: str
    compute_time: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.waypoints, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != 3 or len(w) < 2:
            raise ContractError("a path needs at least two 3-D waypoints")
        if np.any(np.all(np.diff(w, axis=0) == 0, axis=1)):
            raise ContractError("consecutive path waypoints must be distinct")
        w.setflags(write=False)
        object.__setattr__(self, "waypoints", w)

    @property
    def length(self) -> float:
        return path_length(self.waypoints)

    def to_dict(self) -> dict:
        return {
            "waypoints": self.waypoints.tolist(),
            "cost": self.cost,
            "planner": self.planner,
            "time_ms": self.compute_time * 1e3,
        }


def path_length(waypoints) -> float:
    return float(np.linalg.norm(np.diff(np.asarray(waypoints), axis=0), axis=1).sum())


class PlanningMap:
    """Inflated planning grid plus the derived arrays the kernels need."""

    def __init__(self, grid: VoxelGrid):
        self.grid = grid
        self.occ = np.ascontiguousarray(grid.occupancy, dtype=np.uint8)

    @cached_property
    def neighborhood(self) -> np.ndarray:
        return _kernels.neighborhood_masks(self.occ)

    @cached_property
    def forced(self) -> np.ndarray:
        return _kernels.forced_masks(self.neighborhood, _kernels.search_tables(self.occ.shape))

    def prepare(self) -> "PlanningMap":
        """Build the per-grid search tables up front (part of grid construction)."""
        self.forced
        return self

    @property
    def resolution(self) -> float:
        return self.grid.resolution

    def to_u(self, pts) -> np.ndarray:
        return (np.asarray(pts, dtype=np.float64) - self.grid.lo) / self.grid.resolution

    def to_world(self, u) -> np.ndarray:
        return self.grid.lo + np.asarray(u) * self.grid.resolution

    def cell_of(self, point) -> tuple[int, int, int]:
        idx, inside = self.grid.index_of(point)
        if not inside[0]:
            raise InputError(f"point {tuple(point)} outside planning bounds")
        return tuple(int(v) for v in idx[0])

    def require_free(self, point, what: str):
        if not self.grid.is_free(np.asarray(point)[None])[0]:
            raise ContractError(f"{what} {tuple(np.round(point, 3))} is not in free space")

    def segment_free(self, a, b) -> bool:
        return bool(_kernels.segment_free(self.occ, self.to_u(a), self.to_u(b)))

    def path_free(self, waypoints) -> bool:
        return bool(_kernels.path_free(self.occ, self.to_u(waypoints)))


def as_map(grid) -> PlanningMap:
    return grid if isinstance(grid, PlanningMap) else PlanningMap(grid)


def validate_path(grid: VoxelGrid, waypoints, step: float | None = None) -> bool:
    """Independent collision validator: sample every segment at ``step``
    (default half the grid resolution) and look each sample up in the grid."""
    if isinstance(grid, PlanningMap):
        grid = grid.grid
    w = np.asarray(waypoints, dtype=np.float64)
    step = grid.resolution / 2 if step is None else step
    samples = [w[-1:]]
    for a, b in zip(w[:-1], w[1:]):
        n = max(1, math.ceil(np.linalg.norm(b - a) / step))
        t = np.arange(n)[:, None] / n
        samples.append(a + t * (b - a))
    return bool(np.all(grid.is_free(np.vstack(samples))))


class Stopwatch:
    """Wall clock for reporting plus a CPU-time deadline for budgeting."""

    def __init__(self, timeout: float | None):
        self.t0 = time.perf_counter()
        self.deadline = math.inf if timeout is None else time.process_time() + timeout

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0
