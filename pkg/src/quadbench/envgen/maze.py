"""Parameterized maze maps: randomized Kruskal followed by random wall deletion."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from ..world import Bounds, PointCloud
from .surfaces import box_surface

# A wall separates two horizontally adjacent cells: ("v", x, y) lies between
# (x, y) and (x + 1, y); ("h", x, y) lies between (x, y) and (x, y + 1).
Wall = tuple[str, int, int]


@dataclass(frozen=True)
class MazeSpec:
    p: float = 0.1
    cells_x: int = 10
    cells_y: int = 5
    cell_size: float = 2.0
    wall_thickness: float = 0.2
    # None -> full z-extent of the bounds.
    wall_height: float | None = None
    spacing: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"maze p must lie in [0, 1], got {self.p}")
        if self.cells_x < 2 or self.cells_y < 2:
            raise ConfigError("maze needs at least 2 cells per axis")
        if not 0 < self.wall_thickness < self.cell_size:
            raise ConfigError("wall thickness must be positive and below the cell size")
        if self.spacing <= 0:
            raise ConfigError("point spacing must be positive")
        if self.wall_height is not None and self.wall_height <= 0:
            raise ConfigError("wall height must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MazeSpec":
        return cls(**d)


@dataclass
class MazeLayout:
    """Wall bookkeeping for one generated maze."""

    spec: MazeSpec
    carved: list[Wall] = field(default_factory=list)  # removed by Kruskal
    deleted: list[Wall] = field(default_factory=list)  # removed by the p-deletion pass
    walls: list[Wall] = field(default_factory=list)  # surviving interior walls

    @property
    def n_cells(self) -> int:
        return self.spec.cells_x * self.spec.cells_y

    def open_edges(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Cell adjacencies with no wall between them."""
        return [_wall_cells(w) for w in self.carved + self.deleted]


class DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _wall_cells(w: Wall) -> tuple[tuple[int, int], tuple[int, int]]:
    kind, x, y = w
    return ((x, y), (x + 1, y)) if kind == "v" else ((x, y), (x, y + 1))


def interior_walls(cells_x: int, cells_y: int) -> list[Wall]:
    walls = [("v", x, y) for x in range(cells_x - 1) for y in range(cells_y)]
    walls += [("h", x, y) for x in range(cells_x) for y in range(cells_y - 1)]
    return walls


def maze_layout(spec: MazeSpec) -> MazeLayout:
    """Carve a perfect maze with randomized Kruskal, then delete each remaining
    interior wall independently with probability ``spec.p``."""
    rng = np.random.default_rng(spec.seed)
    walls = interior_walls(spec.cells_x, spec.cells_y)
    order = rng.permutation(len(walls))
    sets = DisjointSet(spec.cells_x * spec.cells_y)
    layout = MazeLayout(spec)
    remaining = []
    for i in order:
        (ax, ay), (bx, by) = _wall_cells(walls[i])
        if sets.union(ax * spec.cells_y + ay, bx * spec.cells_y + by):
            layout.carved.append(walls[i])
        else:
            remaining.append(walls[i])
    remaining.sort()
    for w in remaining:
        (layout.deleted if rng.random() < spec.p else layout.walls).append(w)
    return layout


def _wall_box(w: Wall, spec: MazeSpec, lo, height: float):
    kind, x, y = w
    cs, h = spec.cell_size, spec.wall_thickness / 2
    if kind == "v":
        cx = lo[0] + (x + 1) * cs
        return (cx - h, lo[1] + y * cs - h, lo[2]), (cx + h, lo[1] + (y + 1) * cs + h, lo[2] + height)
    cy = lo[1] + (y + 1) * cs
    return (lo[0] + x * cs - h, cy - h, lo[2]), (lo[0] + (x + 1) * cs + h, cy + h, lo[2] + height)


def maze_boxes(layout: MazeLayout, bounds: Bounds) -> list[tuple[tuple, tuple]]:
    """Axis-aligned wall boxes: surviving interior walls plus the outer boundary."""
    spec = layout.spec
    lo = bounds.lo
    height = spec.wall_height if spec.wall_height is not None else float(bounds.extent[2])
    boxes = [_wall_box(w, spec, lo, height) for w in layout.walls]
    w, d = spec.cells_x * spec.cell_size, spec.cells_y * spec.cell_size
    h = spec.wall_thickness / 2
    z0, z1 = lo[2], lo[2] + height
    boxes += [
        ((lo[0] - h, lo[1] - h, z0), (lo[0] + w + h, lo[1] + h, z1)),
        ((lo[0] - h, lo[1] + d - h, z0), (lo[0] + w + h, lo[1] + d + h, z1)),
        ((lo[0] - h, lo[1] - h, z0), (lo[0] + h, lo[1] + d + h, z1)),
        ((lo[0] + w - h, lo[1] - h, z0), (lo[0] + w + h, lo[1] + d + h, z1)),
    ]
    return boxes


def check_footprint(spec: MazeSpec, bounds: Bounds):
    ext = bounds.extent
    need = (spec.cells_x * spec.cell_size, spec.cells_y * spec.cell_size)
    if need[0] > ext[0] + 1e-9 or need[1] > ext[1] + 1e-9:
        raise ConfigError(f"maze footprint {need} exceeds bounds extent {tuple(ext[:2])}")
    if spec.wall_height is not None and spec.wall_height > ext[2] + 1e-9:
        raise ConfigError("maze wall height exceeds bounds")


def generate_maze(spec: MazeSpec, bounds: Bounds = Bounds()) -> PointCloud:
    check_footprint(spec, bounds)
    layout = maze_layout(spec)
    pts = np.vstack([box_surface(lo, hi, spec.spacing) for lo, hi in maze_boxes(layout, bounds)])
    return PointCloud(pts[bounds.contains(pts)])


def maze_endpoints(spec: MazeSpec, bounds: Bounds = Bounds()) -> tuple[np.ndarray, np.ndarray]:
    """Fixed start/goal: centers of opposite corner cells at mid wall height."""
    lo = np.asarray(bounds.lo)
    height = spec.wall_height if spec.wall_height is not None else float(bounds.extent[2])
    z = lo[2] + height / 2
    half = spec.cell_size / 2
    start = np.array([lo[0] + half, lo[1] + half, z])
    goal = np.array([lo[0] + spec.cells_x * spec.cell_size - half,
                     lo[1] + spec.cells_y * spec.cell_size - half, z])
    return start, goal
