"""Environmental complexity signature: density, clutter and structure indices."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, ContractError, UndefinedMetricError
from .world import Bounds, PointCloud, QuadrotorSpec, VoxelGrid, discretize

_RES_TOL = 1e-12


@dataclass(frozen=True)
class EcsSignature:
    density: float
    clutter: float
    structure: float
    # Raw clutter above 1 means the quadrotor cannot fit anywhere.
    clutter_infeasible: bool = False
    n_occupied: int = 0
    resolution: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.density, self.clutter, self.structure)

    def to_dict(self) -> dict:
        return asdict(self)


def ecs_grid(cloud: PointCloud, bounds: Bounds, quad: QuadrotorSpec = QuadrotorSpec()) -> VoxelGrid:
    """Raw (un-inflated) occupancy at a resolution equal to the quadrotor radius."""
    return discretize(cloud, bounds, quad.radius)


def _check_resolution(grid: VoxelGrid, quad: QuadrotorSpec):
    if abs(grid.resolution - quad.radius) > _RES_TOL * max(1.0, quad.radius):
        raise ContractError(
            f"grid resolution {grid.resolution} differs from quadrotor radius {quad.radius}"
        )


def density_index(grid: VoxelGrid, quad: QuadrotorSpec = QuadrotorSpec()) -> float:
    """``r^3 N / (s_x s_y s_z)`` over the exact bounds extents."""
    _check_resolution(grid, quad)
    # Same as r^3 N / V, ordered so exact multiples of r give exact ratios.
    return grid.n_occupied / float(np.prod(grid.bounds.extent / grid.resolution))


def dispersion(grid: VoxelGrid) -> float:
    """Largest distance (m) from a free cell center to its nearest occupied center."""
    occ = grid.occupancy
    if not occ.any():
        raise UndefinedMetricError("dispersion needs at least one occupied cell")
    if occ.all():
        raise UndefinedMetricError("dispersion needs at least one free cell")
    dist = ndimage.distance_transform_edt(~occ)
    return float(dist[~occ].max()) * grid.resolution


def clutter_raw(grid: VoxelGrid, quad: QuadrotorSpec = QuadrotorSpec()) -> float:
    """``r / D`` without clamping; values above 1 mean no free ball of radius ``r``."""
    _check_resolution(grid, quad)
    return quad.radius / dispersion(grid)


def clutter_index(grid: VoxelGrid, quad: QuadrotorSpec = QuadrotorSpec()) -> float:
    """Clutter clamped to (0, 1]; use :func:`clutter_raw` for the unclamped value."""
    return min(1.0, clutter_raw(grid, quad))


def structure_index(grid: VoxelGrid, connectivity: int = 6) -> float:
    """Fraction of occupied cells with at least one in-bounds free neighbor.

    ``connectivity`` is 6 (faces) or 26 (faces, edges and corners).
    Out-of-bounds neighbors count as not free.
    """
    if connectivity not in (6, 26):
        raise ConfigError("connectivity must be 6 or 26")
    occ = grid.occupancy
    n = int(np.count_nonzero(occ))
    if n == 0:
        raise UndefinedMetricError("structure index needs at least one occupied cell")
    free = ~occ
    rank = 1 if connectivity == 6 else 3
    footprint = ndimage.generate_binary_structure(3, rank)
    touches = ndimage.binary_dilation(free, structure=footprint, border_value=0)
    return float(np.count_nonzero(touches & occ)) / n


def ecs(cloud: PointCloud, bounds: Bounds, quad: QuadrotorSpec = QuadrotorSpec(),
        connectivity: int = 6) -> EcsSignature:
    """All three indices on the radius-resolution grid of the raw cloud.

    Raises :class:`UndefinedMetricError` for an empty (or fully occupied) grid.
    """
    grid = ecs_grid(cloud, bounds, quad)
    d = density_index(grid, quad)
    c = clutter_raw(grid, quad)
    s = structure_index(grid, connectivity)
    return EcsSignature(d, min(1.0, c), s, c > 1.0, grid.n_occupied, grid.resolution)


def _or_nan(fn, *args) -> float:
    try:
        return fn(*args)
    except UndefinedMetricError:
        return math.nan


def ecs_row(map_id: str, cloud: PointCloud, bounds: Bounds, quad: QuadrotorSpec = QuadrotorSpec()) -> dict:
    """CSV-ready row; undefined indices (e.g. an empty map) are NaN and ``d`` is still reported."""
    grid = ecs_grid(cloud, bounds, quad)
    return {
        "map_id": map_id,
        "d": density_index(grid, quad),
        "c": _or_nan(clutter_index, grid, quad),
        "s": _or_nan(structure_index, grid),
        "N": grid.n_occupied,
        "resolution": quad.radius,
    }
