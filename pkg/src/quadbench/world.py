"""
Spatial primitives: point clouds, bounds, voxel grids and distance fields.

All lengths are in meters. Grid indices are ``(i, j, k)`` along ``(x, y, z)``.
Cell ``i`` along an axis covers the half-open interval ``(lo + i*res, lo + (i+1)*res]``
so that a point lying on a shared face is binned to the lower-index cell; a point
exactly on the lower boundary of the bounds goes to cell 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError, InputError, NoObstaclesError

log = logging.getLogger(__name__)

# Tolerance for "is this coordinate exactly on a cell face" decisions.
FACE_EPS = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """Raw obstacle points, shape ``(n, 3)``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = np.zeros((0, 3))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InputError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _readonly(np.array(pts, copy=True)))

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)))

    @classmethod
    def concat(cls, clouds) -> "PointCloud":
        arrs = [c.points for c in clouds if len(c)]
        if not arrs:
            return cls.empty()
        return cls(np.vstack(arrs))


@dataclass(frozen=True)
class Bounds:
    lo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hi: tuple[float, float, float] = (20.0, 10.0, 5.0)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ConfigError("bounds corners must be 3-D")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ConfigError("bounds must be finite")
        if not all(h > l for l, h in zip(lo, hi)):
            raise ConfigError(f"bounds max must exceed min componentwise: {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def extent(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2

    def contains(self, pts: np.ndarray, half_open: bool = False) -> np.ndarray:
        """Membership mask; closed box by default, ``[lo, hi)`` if ``half_open``."""
        pts = np.atleast_2d(pts)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        upper = pts < hi if half_open else pts <= hi
        return np.all((pts >= lo) & upper, axis=1)

    def to_dict(self) -> dict:
        return {"min": list(self.lo), "max": list(self.hi)}

    @classmethod
    def from_dict(cls, d: dict) -> "Bounds":
        return cls(tuple(d["min"]), tuple(d["max"]))


@dataclass(frozen=True)
class QuadrotorSpec:
    radius: float = 0.2
    v_max: float = 3.0
    a_max: float = 2.0
    mass: float = 1.5
    max_thrust: float = 31.0

    def __post_init__(self):
        for name in ("radius", "v_max", "a_max", "mass", "max_thrust"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"QuadrotorSpec.{name} must be positive, got {v!r}")

    @property
    def planning_resolution(self) -> float:
        return self.radius / 2


def grid_dims(bounds: Bounds, resolution: float) -> tuple[int, int, int]:
    # Guard against 20/0.2 = 100.00000000000001 style round-up.
    q = bounds.extent / resolution
    return tuple(int(max(1, math.ceil(v - FACE_EPS))) for v in q)


def point_to_index(points: np.ndarray, lo, resolution: float, dims) -> tuple[np.ndarray, np.ndarray]:
    """Map points to cell indices. Returns ``(idx, inside)``; ``idx`` is only
    meaningful where ``inside`` is true."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    u = (pts - np.asarray(lo)) / resolution
    # Faces within FACE_EPS snap to the lower cell.
    idx = np.ceil(u - FACE_EPS).astype(np.int64) - 1
    idx[idx < 0] = 0
    inside = np.all((u >= -FACE_EPS) & (u <= np.asarray(dims) + FACE_EPS), axis=1)
    idx = np.minimum(idx, np.asarray(dims) - 1)
    return idx, inside


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Dense boolean occupancy over ``bounds`` at a uniform ``resolution``."""

    bounds: Bounds
    resolution: float
    occupancy: np.ndarray

    def __post_init__(self):
        if not self.resolution > 0:
            raise ConfigError("resolution must be positive")
        occ = np.ascontiguousarray(self.occupancy, dtype=bool)
        if occ.shape != grid_dims(self.bounds, self.resolution):
            raise ConfigError(
                f"occupancy shape {occ.shape} does not match dims "
                f"{grid_dims(self.bounds, self.resolution)}"
            )
        if occ.flags.writeable:
            occ = occ.copy()
        object.__setattr__(self, "occupancy", _readonly(occ))

    @classmethod
    def empty(cls, bounds: Bounds, resolution: float) -> "VoxelGrid":
        return cls(bounds, resolution, np.zeros(grid_dims(bounds, resolution), dtype=bool))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    @property
    def n_occupied(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.bounds.lo)

    def center(self, idx) -> np.ndarray:
        return self.lo + (np.asarray(idx, dtype=np.float64) + 0.5) * self.resolution

    def occupied_centers(self) -> np.ndarray:
        return self.center(np.argwhere(self.occupancy))

    def free_centers(self) -> np.ndarray:
        return self.center(np.argwhere(~self.occupancy))

    def index_of(self, points) -> tuple[np.ndarray, np.ndarray]:
        return point_to_index(points, self.bounds.lo, self.resolution, self.dims)

    def is_free(self, points) -> np.ndarray:
        """Free-space test for world points; out-of-bounds counts as blocked."""
        idx, inside = self.index_of(points)
        out = np.zeros(len(idx), dtype=bool)
        ii = idx[inside]
        out[inside] = ~self.occupancy[ii[:, 0], ii[:, 1], ii[:, 2]]
        return out

    def snap(self, point) -> np.ndarray:
        """Center of the cell containing ``point``."""
        idx, inside = self.index_of(point)
        if not inside[0]:
            raise InputError(f"point {point} lies outside the grid bounds")
        return self.center(idx[0])

    def with_occupancy(self, occ: np.ndarray) -> "VoxelGrid":
        return VoxelGrid(self.bounds, self.resolution, occ)

    def __eq__(self, other):
        return (
            isinstance(other, VoxelGrid)
            and self.bounds == other.bounds
            and self.resolution == other.resolution
            and np.array_equal(self.occupancy, other.occupancy)
        )


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Per-cell Euclidean distance (m) from each cell center to the nearest
    occupied cell center."""

    bounds: Bounds
    resolution: float
    values: np.ndarray = field(repr=False)


def discretize(cloud: PointCloud, bounds: Bounds, resolution: float) -> VoxelGrid:
    """Bin points into a boolean occupancy grid; out-of-bounds points are dropped."""
    if not resolution > 0:
        raise ConfigError("resolution must be positive")
    dims = grid_dims(bounds, resolution)
    occ = np.zeros(dims, dtype=bool)
    if len(cloud):
        pts = cloud.points
        keep = bounds.contains(pts)
        dropped = len(pts) - int(keep.sum())
        if dropped:
            log.warning("discretize: dropped %d of %d points outside bounds", dropped, len(pts))
        idx, inside = point_to_index(pts[keep], bounds.lo, resolution, dims)
        idx = idx[inside]
        occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return VoxelGrid(bounds, resolution, occ)


def _edt_cells(occ: np.ndarray) -> np.ndarray:
    # Exact EDT in index units from every cell to the nearest occupied cell.
    return ndimage.distance_transform_edt(~occ)


def inflate(grid: VoxelGrid, margin: float) -> VoxelGrid:
    """Mark every cell whose center is within ``margin`` of an occupied center."""
    if margin < 0:
        raise ConfigError("inflation margin must be non-negative")
    if margin == 0 or grid.n_occupied == 0:
        return grid
    dist = _edt_cells(grid.occupancy)
    return grid.with_occupancy(dist <= margin / grid.resolution + FACE_EPS)


def distance_transform(grid: VoxelGrid) -> DistanceField:
    if grid.n_occupied == 0:
        raise NoObstaclesError("distance transform of a grid with no obstacles")
    vals = _edt_cells(grid.occupancy) * grid.resolution
    return DistanceField(grid.bounds, grid.resolution, _readonly(vals))
