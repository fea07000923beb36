"""Case generation, the front-end/back-end pipeline per case, and the suite runner."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..backend.optimizer import check_dynamic_feasibility, optimize_trajectory
from ..backend.trajectory import Trajectory
from ..corridor import build_corridor, simplify_path
from ..ecs import ecs_row
from ..envgen.maze import MazeSpec
from ..envgen.scenario import ScenarioCase, filter_feasible, maze_case, obstacle_case, planning_grid
from ..errors import ContractError, InputError, OptimizationFailure, PlanningError, SamplingError
from ..frontend import warmup
from ..frontend.common import LatticeState, Path, PlanningMap, validate_path
from ..frontend.jps import plan_jps
from ..frontend.mpl import plan_mpl
from ..frontend.rrt_star import plan_rrt_star
from ..world import VoxelGrid
from .config import FamilyConfig, SuiteConfig

log = logging.getLogger(__name__)

STATUSES = ("success", "infeasible", "timeout", "opt-failure", "collision")
# Columns that hold wall-clock measurements (excluded from determinism checks).
TIMING_FIELDS = ("fe_time", "be_time", "total_time")


@dataclass
class CaseResult:
    case_id: str
    family: str
    seed: int
    frontend: str
    backend: str
    density: float
    clutter: float
    structure: float
    status: str
    fe_status: str
    fe_time: float
    fe_cost: float = math.nan
    n_polytopes: int = 0
    be_status: str = ""
    be_time: float = 0.0
    duration: float = math.nan
    mean_sq_jerk: float = math.nan
    max_velocity: float = math.nan
    max_acceleration: float = math.nan
    min_corridor_margin: float = math.nan
    knot_jump: float = math.nan
    collision: bool = False
    total_time: float = 0.0

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ContractError(f"unknown status {self.status!r}")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PreparedCase:
    """A scenario with its planning map built and its ECS computed (untimed)."""

    case: ScenarioCase
    grid: VoxelGrid
    pmap: PlanningMap
    ecs: dict

    @classmethod
    def build(cls, case: ScenarioCase, config: SuiteConfig, grid: VoxelGrid | None = None) -> "PreparedCase":
        if grid is None:
            grid = planning_grid(case.cloud, case.bounds, config.quad, config.inflation)
        return cls(case, grid, PlanningMap(grid).prepare(),
                   ecs_row(case.case_id, case.cloud, case.bounds, config.quad))


def _run_frontend(fe: str, prep: PreparedCase, config: SuiteConfig) -> Path:
    c = prep.case
    if fe == "jps":
        return plan_jps(prep.pmap, c.start, c.goal, config.budget)
    if fe == "rrt_star":
        return plan_rrt_star(prep.pmap, c.start, c.goal, config.budget, seed=int(c.provenance.get("seed", 0)))
    if fe == "mpl":
        return plan_mpl(prep.pmap, LatticeState(tuple(c.start)), c.goal, config.quad, config.budget)[0]
    raise ContractError(f"unknown front-end {fe!r}")


def _pin_endpoints(waypoints: np.ndarray, start: np.ndarray, goal: np.ndarray) -> np.ndarray:
    """Replace the first/last waypoint (a cell center for grid planners) by the
    exact start/goal, which lie in the same cell."""
    w = np.array(waypoints, dtype=np.float64)
    w[0], w[-1] = start, goal
    keep = np.concatenate([[True], np.any(np.diff(w, axis=0) != 0, axis=1)])
    return w[keep]


def run_case(prep: PreparedCase, fe: str, be: str, config: SuiteConfig,
             keep_trajectory: bool = False) -> tuple[CaseResult, Trajectory | None]:
    """Front-end, simplification, corridor, back-end and independent validation.

    Stage failures short-circuit into the matching status; nothing is raised.
    """
    c = prep.case
    base = {"case_id": c.case_id, "family": c.family, "seed": int(c.provenance.get("seed", 0)),
            "frontend": fe, "backend": be,
            "density": prep.ecs["d"], "clutter": prep.ecs["c"], "structure": prep.ecs["s"]}
    t0 = time.perf_counter()
    try:
        path = _run_frontend(fe, prep, config)
        fe_time = time.perf_counter() - t0
    except PlanningError as e:
        return CaseResult(**base, status=e.status, fe_status=e.status, fe_time=time.perf_counter() - t0), None
    except (ContractError, InputError):
        return CaseResult(**base, status="infeasible", fe_status="infeasible",
                          fe_time=time.perf_counter() - t0), None
    res = CaseResult(**base, status="success", fe_status="success", fe_time=fe_time, fe_cost=path.cost)
    waypoints = _pin_endpoints(path.waypoints, c.start, c.goal)
    if not validate_path(prep.grid, waypoints):
        res.status = res.fe_status = "collision"
        res.collision = True
        res.total_time = fe_time
        return res, None
    if be == "none":
        res.total_time = fe_time
        return res, None

    t1 = time.perf_counter()
    traj = None
    try:
        p = Path(waypoints, path.cost, path.planner)
        if config.simplify:
            p = simplify_path(p, prep.pmap)
        corridor = build_corridor(p, prep.pmap, c.bounds)
        res.n_polytopes = len(corridor)
        traj = optimize_trajectory(corridor, c.start, c.goal, config.quad, config.optimizer, prep.grid)
    except (OptimizationFailure, ContractError) as e:
        log.debug("%s %s/%s back-end failed: %s", c.case_id, fe, be, e)
    res.be_time = time.perf_counter() - t1
    res.total_time = fe_time + res.be_time
    if traj is None:
        res.status = res.be_status = "opt-failure"
        return res, None

    res.be_status = "success"
    rep = check_dynamic_feasibility(traj, config.quad, 0.01, prep.grid, corridor, config.optimizer.norm)
    res.duration = traj.duration
    res.mean_sq_jerk = rep.mean_squared_jerk
    res.max_velocity = rep.max_velocity
    res.max_acceleration = rep.max_acceleration
    res.min_corridor_margin = rep.min_corridor_margin
    res.knot_jump = float(traj.knot_jumps(2).max())
    res.collision = rep.collision
    if rep.collision:
        res.status = "collision"
    elif not rep.ok:
        res.status = "opt-failure"
    return res, (traj if keep_trajectory else None)


def make_case(fam: FamilyConfig, family_index: int, seed: int, config: SuiteConfig):
    """Generate one case; returns a :class:`PreparedCase` or ``None`` when the seed is rejected."""
    spec = fam.make_spec(seed)
    case_id = f"{family_index:02d}-{fam.family}-{seed:05d}"
    if isinstance(spec, MazeSpec):
        case = maze_case(spec, config.bounds, case_id)
        grid = planning_grid(case.cloud, case.bounds, config.quad, config.inflation)
    else:
        try:
            case, grid = obstacle_case(spec, config.bounds, config.quad, config.inflation,
                                       config.min_separation, case_id)
        except SamplingError:
            return None
    pmap = PlanningMap(grid).prepare()
    if not filter_feasible(case, config.quad, config.inflation, pmap):
        return None
    return PreparedCase(case, grid, pmap, ecs_row(case.case_id, case.cloud, case.bounds, config.quad))


@dataclass
class SeedOutcome:
    family_index: int
    seed: int
    accepted: bool
    ecs: dict | None = None
    rows: list = field(default_factory=list)
    trajectories: dict = field(default_factory=dict)


def _run_seed(args) -> SeedOutcome:
    family_index, seed, config = args
    fam = config.families[family_index]
    prep = make_case(fam, family_index, seed, config)
    if prep is None:
        return SeedOutcome(family_index, seed, False)
    out = SeedOutcome(family_index, seed, True, prep.ecs)
    for fe, be in config.planners:
        row, traj = run_case(prep, fe, be, config, keep_trajectory=True)
        out.rows.append(row)
        if traj is not None and row.status == "success":
            out.trajectories[(row.case_id, fe, be)] = traj
    return out


@dataclass
class SuiteResult:
    config: SuiteConfig
    results: list[CaseResult]
    maps: list[dict]
    rejected: dict
    trajectories: dict = field(default_factory=dict)


def _init_worker():
    warmup()


def run_suite(config: SuiteConfig, on_rows=None) -> SuiteResult:
    """Generate and filter cases, then run the planner matrix on each.

    Each family takes the first ``count`` accepted seeds from ``seed_base``
    upward, so the outcome does not depend on ``parallelism``. ``on_rows`` is
    called with each accepted seed's rows as they are collected.
    """
    warmup()
    outcomes: list[SeedOutcome] = []
    rejected = {}
    pool = ProcessPoolExecutor(config.parallelism, initializer=_init_worker) if config.parallelism > 1 else None
    try:
        for i, fam in enumerate(config.families):
            accepted, next_seed, n_rej = 0, config.seed_base, 0
            limit = config.seed_base + fam.count * config.max_attempts_factor
            while accepted < fam.count and next_seed < limit:
                batch = range(next_seed, min(limit, next_seed + fam.count - accepted))
                next_seed = batch.stop
                jobs = [(i, s, config) for s in batch]
                results = pool.map(_run_seed, jobs) if pool else map(_run_seed, jobs)
                for out in results:
                    if not out.accepted:
                        n_rej += 1
                    elif accepted < fam.count:
                        accepted += 1
                        outcomes.append(out)
                        if on_rows is not None:
                            on_rows(out.rows)
            rejected[f"{i:02d}-{fam.family}"] = n_rej
            if accepted < fam.count:
                log.warning("family %d (%s): only %d of %d cases accepted", i, fam.family, accepted, fam.count)
    finally:
        if pool:
            pool.shutdown()
    rows = sorted((r for o in outcomes for r in o.rows),
                  key=lambda r: (r.case_id, r.frontend, r.backend))
    maps = sorted((o.ecs for o in outcomes), key=lambda m: m["map_id"])
    trajs = {k: v for o in outcomes for k, v in o.trajectories.items()}
    return SuiteResult(config, rows, maps, rejected, trajs)
