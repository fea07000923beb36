"""Scenario cases: a map plus start/goal, with provenance and a JSON sidecar."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError, PlanningError, SamplingError
from ..world import Bounds, PointCloud, QuadrotorSpec, VoxelGrid, discretize, inflate
from .io import load_point_cloud, save_point_cloud
from .maze import MazeSpec, generate_maze, maze_endpoints
from .obstacles import ObstacleSpec, generate_obstacle_map

DEFAULT_INFLATION = 0.3
DEFAULT_MIN_SEPARATION = 10.0


def spec_hash(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class ScenarioCase:
    case_id: str
    cloud: PointCloud
    bounds: Bounds
    start: np.ndarray
    goal: np.ndarray
    # {family, seed, spec, spec_hash}
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=np.float64))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=np.float64))

    @property
    def family(self) -> str:
        return self.provenance.get("family", "unknown")

    def sidecar(self) -> dict:
        p = self.provenance
        return {
            "case_id": self.case_id,
            "family": p.get("family"),
            "seed": p.get("seed"),
            "spec": p.get("spec"),
            "spec_hash": p.get("spec_hash"),
            "bounds": self.bounds.to_dict(),
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
        }

    def save(self, out_dir) -> Path:
        """Write ``<case_id>.ply`` and ``<case_id>.json``; returns the JSON path."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_point_cloud(self.cloud, out / f"{self.case_id}.ply")
        meta = self.sidecar() | {"cloud": f"{self.case_id}.ply"}
        path = out / f"{self.case_id}.json"
        path.write_text(json.dumps(meta, indent=2))
        return path

    @classmethod
    def load(cls, json_path) -> "ScenarioCase":
        json_path = Path(json_path)
        meta = json.loads(json_path.read_text())
        cloud = load_point_cloud(json_path.parent / meta.get("cloud", json_path.stem + ".ply"))
        prov = {k: meta.get(k) for k in ("family", "seed", "spec", "spec_hash")}
        return cls(meta["case_id"], cloud, Bounds.from_dict(meta["bounds"]),
                   meta["start"], meta["goal"], prov)


def planning_grid(cloud: PointCloud, bounds: Bounds, quad: QuadrotorSpec = QuadrotorSpec(),
                  margin: float = DEFAULT_INFLATION) -> VoxelGrid:
    """Inflated occupancy at the planning resolution (half the quadrotor radius)."""
    return inflate(discretize(cloud, bounds, quad.planning_resolution), margin)


def sample_start_goal(grid: VoxelGrid, min_separation: float = DEFAULT_MIN_SEPARATION,
                      seed: int = 0, max_attempts: int = 10000) -> tuple[np.ndarray, np.ndarray]:
    """Rejection-sample two free cell centers at least ``min_separation`` apart."""
    free = np.flatnonzero(~grid.occupancy.ravel())
    if len(free) < 2:
        raise SamplingError("fewer than two free cells")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        a, b = rng.choice(len(free), size=2, replace=False)
        pa, pb = grid.center(np.stack(np.unravel_index(free[[a, b]], grid.dims), axis=1))
        if np.linalg.norm(pa - pb) >= min_separation:
            return pa, pb
    raise SamplingError(f"no start/goal pair {min_separation} m apart in {max_attempts} attempts")


def filter_feasible(case: ScenarioCase, quad: QuadrotorSpec = QuadrotorSpec(),
                    margin: float = DEFAULT_INFLATION, grid=None) -> bool:
    """True iff unbudgeted JPS connects start to goal on the inflated planning grid.

    ``grid`` may be a prebuilt grid or planning map to avoid rebuilding it.
    """
    from ..frontend.jps import plan_jps

    if grid is None:
        grid = planning_grid(case.cloud, case.bounds, quad, margin)
    try:
        plan_jps(grid, case.start, case.goal, budget=None)
    except PlanningError:
        return False
    except ContractError:
        # Blocked endpoints are infeasible; a shared cell is trivially reachable.
        g = getattr(grid, "grid", grid)
        return bool(g.is_free(np.stack([case.start, case.goal])).all())
    return True


def maze_case(spec: MazeSpec, bounds: Bounds = Bounds(), case_id: str | None = None) -> ScenarioCase:
    cloud = generate_maze(spec, bounds)
    start, goal = maze_endpoints(spec, bounds)
    d = spec.to_dict()
    prov = {"family": "maze", "seed": spec.seed, "spec": d, "spec_hash": spec_hash(d)}
    return ScenarioCase(case_id or f"maze-{spec.seed}", cloud, bounds, start, goal, prov)


def obstacle_case(spec: ObstacleSpec, bounds: Bounds = Bounds(), quad: QuadrotorSpec = QuadrotorSpec(),
                  margin: float = DEFAULT_INFLATION, min_separation: float = DEFAULT_MIN_SEPARATION,
                  case_id: str | None = None) -> tuple[ScenarioCase, VoxelGrid]:
    """Obstacle map with randomized endpoints. Also returns the planning grid
    so callers can reuse it."""
    cloud = generate_obstacle_map(spec, bounds)
    grid = planning_grid(cloud, bounds, quad, margin)
    start, goal = sample_start_goal(grid, min_separation, seed=spec.seed)
    d = spec.to_dict()
    prov = {"family": "obstacle", "seed": spec.seed, "spec": d, "spec_hash": spec_hash(d)}
    return ScenarioCase(case_id or f"obstacle-{spec.seed}", cloud, bounds, start, goal, prov), grid
