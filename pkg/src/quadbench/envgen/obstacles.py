"""Random obstacle maps: cylinders, ellipsoids, yawed boxes and vertical ring gates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from ..world import Bounds, PointCloud
from . import surfaces

SHAPES = ("cylinder", "ellipsoid", "box", "gate")
_MAX_SIZE_DRAWS = 100


def _range(v) -> tuple[float, float]:
    lo, hi = (float(x) for x in v)
    return lo, hi


@dataclass(frozen=True)
class ObstacleSpec:
    """Counts and uniform size ranges per shape. Ranges are ``(min, max)``."""

    n_cylinders: int = 6
    n_ellipsoids: int = 4
    n_boxes: int = 4
    n_gates: int = 2
    cylinder_radius: tuple[float, float] = (0.2, 0.8)
    cylinder_height: tuple[float, float] = (2.0, 5.0)
    ellipsoid_axes: tuple[float, float] = (0.3, 1.2)
    box_edge: tuple[float, float] = (0.4, 2.0)
    box_yaw: tuple[float, float] = (0.0, math.pi)
    gate_inner_radius: tuple[float, float] = (0.6, 1.2)
    gate_tube_radius: tuple[float, float] = (0.1, 0.2)
    gate_yaw: tuple[float, float] = (0.0, math.pi)
    spacing: float = 0.05
    # Keeps every shape this far inside the bounds.
    margin: float = 0.0
    fill: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("n_cylinders", "n_ellipsoids", "n_boxes", "n_gates"):
            if int(getattr(self, name)) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("cylinder_radius", "cylinder_height", "ellipsoid_axes", "box_edge",
                     "gate_inner_radius", "gate_tube_radius"):
            lo, hi = _range(getattr(self, name))
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} must satisfy 0 < min <= max, got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))
        for name in ("box_yaw", "gate_yaw"):
            lo, hi = _range(getattr(self, name))
            if lo > hi:
                raise ConfigError(f"{name} must satisfy min <= max")
            object.__setattr__(self, name, (lo, hi))
        if self.spacing <= 0 or self.margin < 0:
            raise ConfigError("spacing must be positive and margin non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ObstacleSpec":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class Obstacle:
    """One placed shape. ``center`` is the base center for cylinders."""

    shape: str
    center: tuple[float, float, float]
    params: dict = field(default_factory=dict)

    def half_extent(self) -> np.ndarray:
        return _half_extent(self.shape, self.params)

    def surface(self, spacing: float, bounds: Bounds) -> np.ndarray:
        p, c = self.params, np.asarray(self.center)
        if self.shape == "cylinder":
            cap = c[2] + p["height"] < bounds.hi[2] - 1e-9
            local = surfaces.cylinder_surface(p["radius"], p["height"], spacing, cap)
        elif self.shape == "ellipsoid":
            local = surfaces.ellipsoid_surface(p["axes"], spacing)
        elif self.shape == "box":
            e = np.asarray(p["edges"]) / 2
            local = surfaces.box_surface(-e, e, spacing) @ surfaces.rot_z(p["yaw"]).T
        else:
            local = surfaces.torus_surface(p["major"], p["minor"], spacing) @ surfaces.rot_z(p["yaw"]).T
        return local + c

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Solid membership test (used for interior fill)."""
        p = self.params
        d = np.atleast_2d(pts) - np.asarray(self.center)
        if self.shape == "cylinder":
            return (d[:, 0] ** 2 + d[:, 1] ** 2 <= p["radius"] ** 2) & (d[:, 2] >= 0) & (d[:, 2] <= p["height"])
        if self.shape == "ellipsoid":
            return ((d / np.asarray(p["axes"])) ** 2).sum(axis=1) <= 1.0
        local = d @ surfaces.rot_z(p["yaw"])
        if self.shape == "box":
            return np.all(np.abs(local) <= np.asarray(p["edges"]) / 2, axis=1)
        ring = np.hypot(local[:, 0], local[:, 2]) - p["major"]
        return ring**2 + local[:, 1] ** 2 <= p["minor"] ** 2

    def to_dict(self) -> dict:
        return {"shape": self.shape, "center": list(self.center), **self.params}


def _half_extent(shape: str, p: dict) -> np.ndarray:
    """Half extent of the axis-aligned bounding box (z measured up from the base
    for cylinders)."""
    if shape == "cylinder":
        return np.array([p["radius"], p["radius"], p["height"]])
    if shape == "ellipsoid":
        return np.asarray(p["axes"], float)
    if shape == "box":
        return np.abs(surfaces.rot_z(p["yaw"])) @ (np.asarray(p["edges"]) / 2)
    c, s = abs(math.cos(p["yaw"])), abs(math.sin(p["yaw"]))
    outer, r = p["major"] + p["minor"], p["minor"]
    return np.array([outer * c + r * s, outer * s + r * c, outer])


def _draw_params(shape: str, spec: ObstacleSpec, rng) -> dict:
    u = lambda rg: float(rng.uniform(*rg))  # noqa: E731
    if shape == "cylinder":
        return {"radius": u(spec.cylinder_radius), "height": u(spec.cylinder_height)}
    if shape == "ellipsoid":
        return {"axes": [u(spec.ellipsoid_axes) for _ in range(3)]}
    if shape == "box":
        return {"edges": [u(spec.box_edge) for _ in range(3)], "yaw": u(spec.box_yaw)}
    inner, tube = u(spec.gate_inner_radius), u(spec.gate_tube_radius)
    return {"major": inner + tube, "minor": tube, "yaw": u(spec.gate_yaw)}


def place_obstacles(spec: ObstacleSpec, bounds: Bounds = Bounds()) -> list[Obstacle]:
    """Draw sizes and uniform positions for every requested shape, in shape order.

    A position is uniform over all placements whose bounding box stays inside
    the bounds shrunk by ``spec.margin``; sizes that admit no placement are
    redrawn, and a shape that never fits raises ``ConfigError``.
    """
    rng = np.random.default_rng(spec.seed)
    lo = np.asarray(bounds.lo) + spec.margin
    hi = np.asarray(bounds.hi) - spec.margin
    counts = (spec.n_cylinders, spec.n_ellipsoids, spec.n_boxes, spec.n_gates)
    out = []
    for shape, count in zip(SHAPES, counts):
        for _ in range(count):
            for _ in range(_MAX_SIZE_DRAWS):
                params = _draw_params(shape, spec, rng)
                h = _half_extent(shape, params)
                if shape == "cylinder":
                    clo = np.array([lo[0] + h[0], lo[1] + h[1], bounds.lo[2]])
                    chi = np.array([hi[0] - h[0], hi[1] - h[1], hi[2] - h[2]])
                    # Cylinders stand on the floor.
                    chi[2] = bounds.lo[2] if chi[2] >= bounds.lo[2] else -np.inf
                else:
                    clo, chi = lo + h, hi - h
                if np.all(chi >= clo):
                    break
            else:
                raise ConfigError(f"{shape} size range cannot fit inside the bounds")
            center = rng.uniform(clo, chi)
            if shape == "cylinder":
                center[2] = bounds.lo[2]
            out.append(Obstacle(shape, tuple(float(v) for v in center), params))
    return out


def generate_obstacle_map(spec: ObstacleSpec, bounds: Bounds = Bounds()) -> PointCloud:
    obstacles = place_obstacles(spec, bounds)
    if not obstacles:
        return PointCloud.empty()
    pts = [o.surface(spec.spacing, bounds) for o in obstacles]
    if spec.fill:
        for o in obstacles:
            h = o.half_extent()
            base = np.asarray(o.center)
            lo = base - h * np.array([1, 1, 0 if o.shape == "cylinder" else 1])
            cand = surfaces.box_solid(lo, base + h, spec.spacing)
            pts.append(cand[o.contains(cand)])
    pts = np.vstack(pts)
    return PointCloud(pts[bounds.contains(pts)])
