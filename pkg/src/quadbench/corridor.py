"""Safe flight corridors: overlapping axis-aligned free boxes around a path.

The path is first traced through the grid as the ordered sequence of every cell
it touches. Runs of that sequence are grouped greedily while their bounding box
stays free, each box is then grown face by face, and consecutive boxes share at
least one whole cell so their intersection always has an interior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import ContractError
from .frontend.common import Path, PlanningMap, as_map, path_length
from .world import Bounds, VoxelGrid

EPS = 1e-9
# Round-robin face order: (axis, side) with side 0 = lower face.
FACE_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex set ``{x : normals @ x <= offsets}``; ``segment`` is the index of
    the path segment where its generating run of cells starts."""

    normals: np.ndarray
    offsets: np.ndarray
    segment: int = 0

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        b = np.asarray(self.offsets, dtype=np.float64).ravel()
        if len(n) != len(b):
            raise ContractError("one offset per halfspace normal required")
        norm = np.linalg.norm(n, axis=1)
        if np.any(norm <= 0):
            raise ContractError("halfspace normals must be non-zero")
        object.__setattr__(self, "normals", n / norm[:, None])
        object.__setattr__(self, "offsets", b / norm)

    @classmethod
    def from_box(cls, lo, hi, segment: int = 0) -> "Polytope":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        eye = np.eye(3)
        return cls(np.vstack([-eye, eye]), np.concatenate([-lo, hi]), segment)

    def box(self) -> tuple[np.ndarray, np.ndarray] | None:
        """``(lo, hi)`` if this is an axis-aligned box in canonical form."""
        if len(self.normals) != 6 or not np.allclose(self.normals, np.vstack([-np.eye(3), np.eye(3)])):
            return None
        return -self.offsets[:3], self.offsets[3:]

    def margins(self, pts) -> np.ndarray:
        """Signed slack ``offsets - normals @ x`` per point and halfspace."""
        return self.offsets - np.atleast_2d(pts) @ self.normals.T

    def contains(self, pts, tol: float = EPS) -> np.ndarray:
        return np.all(self.margins(pts) >= -tol, axis=1)

    def to_dict(self) -> dict:
        return {"normals": self.normals.tolist(), "offsets": self.offsets.tolist(), "segment": self.segment}

    @classmethod
    def from_dict(cls, d: dict) -> "Polytope":
        return cls(d["normals"], d["offsets"], d.get("segment", 0))


@dataclass(frozen=True, eq=False)
class Corridor:
    polytopes: list[Polytope]
    # witnesses[i] lies strictly inside polytopes[i] and polytopes[i + 1].
    witnesses: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        if not self.polytopes:
            raise ContractError("a corridor needs at least one polytope")
        w = np.asarray(self.witnesses, dtype=np.float64).reshape(-1, 3)
        if len(w) != len(self.polytopes) - 1:
            raise ContractError("need one witness per consecutive polytope pair")
        object.__setattr__(self, "witnesses", w)

    def __len__(self) -> int:
        return len(self.polytopes)

    def contains(self, pts, tol: float = EPS) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros(len(pts), dtype=bool)
        for p in self.polytopes:
            out |= p.contains(pts, tol)
        return out

    def to_dict(self) -> dict:
        return {"polytopes": [p.to_dict() for p in self.polytopes], "witnesses": self.witnesses.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Corridor":
        return cls([Polytope.from_dict(p) for p in d["polytopes"]], d["witnesses"])


# ---------------------------------------------------------------------------
# Path tracing
# ---------------------------------------------------------------------------


def _cells_at(u: np.ndarray, dims) -> list[tuple[int, int, int]]:
    """All cells whose closed box contains the point ``u`` (index units)."""
    options = []
    for a in range(3):
        r = math.floor(u[a] + 0.5)
        if abs(u[a] - r) < EPS:
            c = [v for v in (r - 1, r) if 0 <= v < dims[a]]
        else:
            c = [min(max(math.floor(u[a]), 0), dims[a] - 1)]
        options.append(c)
    return [(i, j, k) for i in options[0] for j in options[1] for k in options[2]]


def trace_cells(u_points: np.ndarray, dims) -> tuple[np.ndarray, np.ndarray]:
    """Ordered supercover of a polyline in index units.

    Returns ``(cells, seg)``: every cell touched by the polyline, in order of
    first contact along it (consecutive cells always share a point), and the
    index of the segment on which each was reached.
    """
    cells: list[tuple[int, int, int]] = []
    seg: list[int] = []
    for s, (a, b) in enumerate(zip(u_points[:-1], u_points[1:])):
        d = b - a
        ts = [0.0, 1.0]
        for ax in range(3):
            if abs(d[ax]) < 1e-15:
                continue
            lo, hi = sorted((a[ax], b[ax]))
            g = math.floor(lo) + 1
            while g < hi:
                ts.append((g - a[ax]) / d[ax])
                g += 1
        ts = sorted(set(t for t in ts if 0.0 <= t <= 1.0))
        samples = []
        for t0, t1 in zip(ts[:-1], ts[1:]):
            samples += [t0, 0.5 * (t0 + t1)]
        samples.append(1.0)
        for t in samples:
            for c in _cells_at(a + t * d, dims):
                if not cells or cells[-1] != c:
                    cells.append(c)
                    seg.append(s)
    return np.array(cells, dtype=np.int64).reshape(-1, 3), np.array(seg, dtype=np.int64)


# ---------------------------------------------------------------------------
# Box growth
# ---------------------------------------------------------------------------


class _OccupancySum:
    """O(1) occupied-cell counts over index boxes via a 3-D prefix sum."""

    def __init__(self, occ: np.ndarray):
        s = np.zeros(tuple(n + 1 for n in occ.shape), dtype=np.int64)
        s[1:, 1:, 1:] = occ.astype(np.int64).cumsum(0).cumsum(1).cumsum(2)
        self.s = s
        self.dims = occ.shape

    def count(self, lo, hi) -> int:
        """Occupied cells in the inclusive index box ``[lo, hi]``."""
        s = self.s
        x0, y0, z0 = lo
        x1, y1, z1 = hi[0] + 1, hi[1] + 1, hi[2] + 1
        return int(
            s[x1, y1, z1] - s[x0, y1, z1] - s[x1, y0, z1] - s[x1, y1, z0]
            + s[x0, y0, z1] + s[x0, y1, z0] + s[x1, y0, z0] - s[x0, y0, z0]
        )

    def free(self, lo, hi) -> bool:
        return self.count(lo, hi) == 0


def grow_box(occsum: _OccupancySum, lo, hi) -> tuple[list[int], list[int]]:
    """Expand the free index box ``[lo, hi]`` one cell per face, round-robin over
    (-x, +x, -y, +y, -z, +z); a face freezes once its next slab is blocked or
    would leave the grid."""
    lo, hi = list(lo), list(hi)
    active = [True] * 6
    while any(active):
        for f, (ax, side) in enumerate(FACE_ORDER):
            if not active[f]:
                continue
            slo, shi = list(lo), list(hi)
            if side == 0:
                if lo[ax] == 0:
                    active[f] = False
                    continue
                slo[ax] = shi[ax] = lo[ax] - 1
            else:
                if hi[ax] == occsum.dims[ax] - 1:
                    active[f] = False
                    continue
                slo[ax] = shi[ax] = hi[ax] + 1
            if occsum.free(slo, shi):
                if side == 0:
                    lo[ax] -= 1
                else:
                    hi[ax] += 1
            else:
                active[f] = False
    return lo, hi


def _box_world(grid: VoxelGrid, lo, hi, bounds: Bounds):
    res = grid.resolution
    wlo = grid.lo + np.asarray(lo) * res
    whi = grid.lo + (np.asarray(hi) + 1) * res
    return np.maximum(wlo, bounds.lo), np.minimum(whi, bounds.hi)


def build_corridor(path: Path | np.ndarray, grid, bounds: Bounds | None = None) -> Corridor:
    """Cover ``path`` with ordered, overlapping free boxes on the inflated grid."""
    pmap = as_map(grid)
    vg = pmap.grid
    bounds = bounds or vg.bounds
    wps = np.asarray(path.waypoints if isinstance(path, Path) else path, dtype=np.float64)
    if not pmap.path_free(wps):
        raise ContractError("corridor input path collides with the inflated grid")
    cells, seg = trace_cells(pmap.to_u(wps), vg.dims)
    occsum = _OccupancySum(pmap.occ)
    n = len(cells)
    boxes, segs = [], []
    i = 0
    while True:
        lo, hi = cells[i].copy(), cells[i].copy()
        j = i
        while j + 1 < n:
            nlo, nhi = np.minimum(lo, cells[j + 1]), np.maximum(hi, cells[j + 1])
            if not occsum.free(nlo, nhi):
                break
            lo, hi, j = nlo, nhi, j + 1
        glo, ghi = grow_box(occsum, lo, hi)
        glo, ghi = np.asarray(glo), np.asarray(ghi)
        while j + 1 < n and np.all(cells[j + 1] >= glo) and np.all(cells[j + 1] <= ghi):
            j += 1
        boxes.append((glo, ghi))
        segs.append(int(seg[i]))
        if j == n - 1:
            break
        # The next box starts from the last covered cell, so the two share it.
        i = j
    polys, witnesses = [], []
    world = [_box_world(vg, lo, hi, bounds) for lo, hi in boxes]
    for (wlo, whi), s in zip(world, segs):
        polys.append(Polytope.from_box(wlo, whi, s))
    for (alo, ahi), (blo, bhi) in zip(world[:-1], world[1:]):
        witnesses.append((np.maximum(alo, blo) + np.minimum(ahi, bhi)) / 2)
    return Corridor(polys, np.array(witnesses).reshape(-1, 3))


# ---------------------------------------------------------------------------
# Validation and simplification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorridorReport:
    obstacle_free: bool
    path_covered: bool
    overlaps_nonempty: bool
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.obstacle_free and self.path_covered and self.overlaps_nonempty


def _chebyshev_radius(p: Polytope, q: Polytope) -> float:
    """Radius of the largest ball inside ``p`` and ``q`` (linear program)."""
    a = np.vstack([p.normals, q.normals])
    b = np.concatenate([p.offsets, q.offsets])
    a_ub = np.hstack([a, np.ones((len(a), 1))])
    res = linprog(c=[0, 0, 0, -1], A_ub=a_ub, b_ub=b, bounds=[(None, None)] * 3 + [(0, None)],
                  method="highs")
    return float(res.x[3]) if res.status == 0 else 0.0


def _holds_occupied_center(p: Polytope, grid: VoxelGrid) -> bool:
    box = p.box()
    if box is None:
        centers = grid.occupied_centers()
        return bool(len(centers)) and bool(np.any(p.contains(centers)))
    # Restrict the scan to cells whose centers can fall inside the box.
    res, lo = grid.resolution, grid.lo
    i0 = np.maximum(np.ceil((box[0] - EPS - lo) / res - 0.5).astype(int), 0)
    i1 = np.minimum(np.floor((box[1] + EPS - lo) / res - 0.5).astype(int), np.asarray(grid.dims) - 1)
    if np.any(i1 < i0):
        return False
    sub = grid.occupancy[i0[0]:i1[0] + 1, i0[1]:i1[1] + 1, i0[2]:i1[2] + 1]
    idx = np.argwhere(sub) + i0
    return bool(len(idx)) and bool(np.any(p.contains(grid.center(idx))))


def verify_corridor(corridor: Corridor, grid, path, step: float | None = None) -> CorridorReport:
    """Independent checks: (a) no occupied cell center inside any polytope,
    (b) path samples at half resolution inside the union, (c) consecutive
    polytopes intersect with a non-empty interior."""
    vg = grid.grid if isinstance(grid, PlanningMap) else grid
    bad = [i for i, p in enumerate(corridor.polytopes) if _holds_occupied_center(p, vg)]
    wps = np.asarray(path.waypoints if isinstance(path, Path) else path, dtype=np.float64)
    step = vg.resolution / 2 if step is None else step
    samples = [wps[-1:]]
    for a, b in zip(wps[:-1], wps[1:]):
        m = max(1, math.ceil(np.linalg.norm(b - a) / step))
        samples.append(a + (np.arange(m)[:, None] / m) * (b - a))
    samples = np.vstack(samples)
    covered = corridor.contains(samples)
    radii = [_chebyshev_radius(p, q) for p, q in zip(corridor.polytopes[:-1], corridor.polytopes[1:])]
    return CorridorReport(
        obstacle_free=not bad,
        path_covered=bool(covered.all()),
        overlaps_nonempty=all(r > EPS for r in radii),
        detail={"polytopes_hitting_obstacles": bad, "uncovered_samples": int((~covered).sum()),
                "overlap_radii": radii},
    )


def simplify_path(path: Path, grid) -> Path:
    """Greedy shortcutting: from each kept waypoint jump to the farthest later
    waypoint reachable by a free straight segment."""
    pmap = as_map(grid)
    w = np.asarray(path.waypoints)
    keep = [0]
    i = 0
    while i < len(w) - 1:
        j = len(w) - 1
        while j > i + 1 and not pmap.segment_free(w[i], w[j]):
            j -= 1
        keep.append(j)
        i = j
    out = w[keep]
    return Path(out, path_length(out), path.planner, path.compute_time, dict(path.info, simplified=True))
