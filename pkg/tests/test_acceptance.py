"""Acceptance suite: one test per criterion, each recording a pass/fail line.

Heavy corpora are module-scoped fixtures shared between criteria.
"""

import json
import math
import time
from dataclasses import asdict

import numpy as np
import pytest

from conftest import record
import oracles

from quadbench.backend.trajectory import min_jerk_fit
from quadbench.bench.config import FamilyConfig, SuiteConfig
from quadbench.bench.report import RESULTS_CSV, correlate_ecs, write_report
from quadbench.bench.runner import TIMING_FIELDS, make_case, run_case, run_suite
from quadbench.corridor import build_corridor, simplify_path, verify_corridor
from quadbench.ecs import clutter_raw, density_index, structure_index
from quadbench.envgen.maze import MazeSpec, maze_layout
from quadbench.envgen.scenario import DEFAULT_INFLATION
from quadbench.errors import InfeasibleError
from quadbench.frontend.common import Path, PlannerBudget, PlanningMap
from quadbench.frontend.jps import MOVE_COSTS, plan_jps
from quadbench.world import Bounds, QuadrotorSpec, VoxelGrid

QUAD = QuadrotorSpec()
N_CORPUS = 100
SWEEP_LEVELS = (0.5, 1.0, 2.0, 3.0, 4.0)
SWEEP_PER_LEVEL = 60
DETERMINISM_CASES = 50
RUNTIME_LIMIT = 15 * 60

_T0 = {}


@pytest.fixture(scope="module", autouse=True)
def _module_clock():
    _T0.setdefault("start", time.perf_counter())


# ---------------------------------------------------------------------------
# Shared corpora
# ---------------------------------------------------------------------------


def _corridor_check(prep, rng):
    """JPS path, simplified, covered by a corridor; returns (report, maximal_ok, n_checked)."""
    c = prep.case
    path = plan_jps(prep.pmap, c.start, c.goal, budget=None)
    w = path.waypoints.copy()
    w[0], w[-1] = c.start, c.goal
    path = simplify_path(Path(w, path.cost, "jps"), prep.pmap)
    cor = build_corridor(path, prep.pmap, c.bounds)
    rep = verify_corridor(cor, prep.pmap, path)
    occ, res = prep.grid.occupancy, prep.grid.resolution
    picks = rng.choice(len(cor), size=min(20, len(cor)), replace=False)
    maximal = True
    for i in picks:
        lo, hi = cor.polytopes[i].box()
        lo_idx = np.rint((lo - prep.grid.lo) / res).astype(int)
        hi_idx = np.rint((hi - prep.grid.lo) / res).astype(int) - 1
        maximal &= oracles.box_face_maximal(occ, lo_idx, hi_idx)
    return rep, maximal, len(picks)


def _corpus(family: str, spec: dict, planners):
    cfg = SuiteConfig.from_dict({"families": [{"family": family, "count": N_CORPUS, "spec": spec}],
                                 "planners": [list(p) for p in planners]})
    fam = cfg.families[0]
    rng = np.random.default_rng(7)
    rows, checks = [], []
    seed = 0
    while len(checks) < N_CORPUS:
        prep = make_case(fam, 0, seed, cfg)
        seed += 1
        if prep is None:
            continue
        checks.append(_corridor_check(prep, rng))
        for fe, be in cfg.planners:
            rows.append(run_case(prep, fe, be, cfg)[0])
    return {"rows": rows, "corridor": checks, "seeds_tried": seed}


@pytest.fixture(scope="module")
def obstacle_corpus():
    return _corpus("obstacle", {}, [("jps", "flatness"), ("rrt_star", "flatness")])


@pytest.fixture(scope="module")
def maze_corpus():
    return _corpus("maze", {"p": 0.1}, [("rrt_star", "flatness"), ("mpl", "flatness")])


def sweep_config() -> SuiteConfig:
    fams = [{"family": "obstacle", "count": SWEEP_PER_LEVEL,
             "spec": {"n_cylinders": round(6 * m), "n_ellipsoids": round(4 * m),
                      "n_boxes": round(4 * m), "n_gates": round(2 * m)}}
            for m in SWEEP_LEVELS]
    return SuiteConfig.from_dict({"families": fams,
                                  "planners": [["jps", "flatness"], ["rrt_star", "flatness"],
                                               ["mpl", "flatness"]]})


@pytest.fixture(scope="module")
def sweep():
    return run_suite(sweep_config())


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def test_criterion_01_jps_matches_dijkstra():
    bounds = Bounds((0, 0, 0), (1.6, 1.6, 0.8))
    fills = (0.1, 0.3, 0.5)
    mismatches, reachable, jps_time = [], 0, 0.0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        occ = rng.random((16, 16, 8)) < fills[seed % 3]
        free = np.argwhere(~occ)
        a, b = rng.choice(len(free), size=2, replace=False)
        s, g = tuple(free[a]), tuple(free[b])
        grid = VoxelGrid(bounds, 0.1, occ)
        want = oracles.dijkstra_moves(occ, s, g)
        t = time.perf_counter()
        try:
            path = plan_jps(grid, grid.center(s), grid.center(g), budget=None)
            got = path.info["move_counts"]
        except InfeasibleError:
            path, got = None, None
        jps_time += time.perf_counter() - t
        if want is not None:
            reachable += 1
        exact_cost = None if want is None else float(np.dot(want, MOVE_COSTS)) * 0.1
        if got != want or (path is not None and path.cost != exact_cost):
            mismatches.append(seed)
    ok = not mismatches and jps_time < 5.0
    record(1, ok, f"200 grids ({reachable} reachable), mismatches={mismatches}, JPS total {jps_time:.2f}s")
    assert not mismatches
    assert jps_time < 5.0


def test_criterion_02_ecs_matches_brute_force():
    worst = 0.0
    r = QUAD.radius
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        dims = tuple(int(v) for v in rng.integers(1, 13, size=3))
        if np.prod(dims) < 2:
            dims = (2, 1, 1)
        occ = rng.random(dims) < rng.uniform(0.05, 0.6)
        flat = occ.reshape(-1)
        flat[rng.integers(flat.size)] = True
        flat[rng.integers(flat.size)] = False
        if not occ.any():
            flat[0] = True
        bounds = Bounds((0, 0, 0), tuple(np.multiply(dims, r)))
        grid = VoxelGrid(bounds, r, occ)
        errs = [
            abs(density_index(grid, QUAD) - oracles.density_brute(occ, r, bounds.extent)),
            abs(clutter_raw(grid, QUAD) - r / oracles.dispersion_brute(occ, r)),
            abs(structure_index(grid) - oracles.structure_brute(occ, 6)),
            abs(structure_index(grid, 26) - oracles.structure_brute(occ, 26)),
        ]
        worst = max(worst, max(errs))
    # Hand-computed anchors.
    full = VoxelGrid(Bounds((0, 0, 0), (2, 2, 2)), r, np.ones((10, 10, 10), bool))
    d_full = density_index(full, QUAD)
    tight = np.ones((10, 10, 10), bool)
    tight[5, 5, 5] = False
    c_tight = clutter_raw(VoxelGrid(Bounds((0, 0, 0), (2, 2, 2)), r, tight), QUAD)
    block = np.zeros((20, 20, 20), bool)
    block[5:15, 5:15, 5:15] = True
    s_block = structure_index(VoxelGrid(Bounds((0, 0, 0), (4, 4, 4)), r, block))
    anchors = (d_full == 1.0, c_tight == 1.0, s_block == 0.488)
    ok = worst <= 1e-9 and all(anchors)
    record(2, ok, f"max |error| {worst:.2e} over 100 grids; anchors d={d_full} c={c_tight} s={s_block}")
    assert worst <= 1e-9
    assert all(anchors)


def test_criterion_03_maze_structure():
    tree_ok = True
    for seed in range(100):
        lay = maze_layout(MazeSpec(p=0.0, seed=seed))
        tree_ok &= len(lay.carved) == lay.n_cells - 1 and not lay.deleted
        tree_ok &= oracles.cells_connected(lay.spec.cells_x, lay.spec.cells_y, lay.open_edges())
    full_ok = all(not maze_layout(MazeSpec(p=1.0, seed=s)).walls for s in range(100))
    deleted = post = 0
    for seed in range(1000):
        lay = maze_layout(MazeSpec(p=0.3, seed=seed))
        deleted += len(lay.deleted)
        post += len(lay.deleted) + len(lay.walls)
    frac = deleted / post
    ok = tree_ok and full_ok and abs(frac - 0.3) <= 0.03
    record(3, ok, f"p=0 tree={tree_ok}, p=1 no walls={full_ok}, p=0.3 deleted fraction {frac:.4f}")
    assert tree_ok and full_ok
    assert abs(frac - 0.3) <= 0.03


def test_criterion_04_corridor_soundness(obstacle_corpus, maze_corpus):
    checks = obstacle_corpus["corridor"] + maze_corpus["corridor"]
    failed = [i for i, (rep, _, _) in enumerate(checks) if not rep.ok]
    not_max = [i for i, (_, m, _) in enumerate(checks) if not m]
    n_poly = sum(n for _, _, n in checks)
    ok = len(checks) == 200 and not failed and not not_max
    record(4, ok, f"{len(checks)} cases, verify failures={failed}, "
                  f"face-maximality failures={not_max} ({n_poly} polytopes checked)")
    assert len(checks) == 200
    assert not failed and not not_max


def test_criterion_05_backend_feasibility(obstacle_corpus):
    rows = [r for r in obstacle_corpus["rows"] if r.be_status == "success"]
    bad = [
        (r.case_id, r.frontend) for r in rows
        if r.collision or r.max_velocity > QUAD.v_max or r.max_acceleration > QUAD.a_max
        or r.min_corridor_margin < -1e-6 or r.knot_jump > 1e-6
    ]
    maps = {r.case_id for r in rows}
    L, T = 7.5, 4.0
    traj = min_jerk_fit(np.array([[0.0, 0, 0], [L, 0, 0]]), [T])
    tau = np.linspace(0, 1, 1001)
    err = float(np.abs(traj.eval(tau * T)[:, 0] - oracles.quintic_rest_to_rest(L, tau)).max())
    ok = not bad and len(maps) >= N_CORPUS and err <= 1e-9
    record(5, ok, f"{len(rows)} trajectories on {len(maps)} maps, violations={bad[:5]}, "
                  f"closed-form error {err:.1e}")
    assert len(maps) >= N_CORPUS
    assert not bad
    assert err <= 1e-9


def test_criterion_06_maze_trend(maze_corpus):
    rows = maze_corpus["rows"]
    rate = {fe: np.mean([r.status == "success" for r in rows if r.frontend == fe]) for fe in ("rrt_star", "mpl")}
    gap = rate["rrt_star"] - rate["mpl"]
    ok = rate["rrt_star"] >= 0.8 and gap >= 0.2
    record(6, ok, f"maze success RRT* {rate['rrt_star']:.2f} vs MPL {rate['mpl']:.2f} (gap {gap:+.2f})")
    assert rate["rrt_star"] >= 0.8
    assert gap >= 0.2


def test_criterion_07_clutter_predicts_failures(sweep):
    corr = correlate_ecs(sweep.results)
    rho = corr["spearman"]
    c, d = rho["clutter"], rho["density"]
    ok = c is not None and d is not None and c > 0 and c >= d
    record(7, ok, f"{corr['n_maps']} maps: spearman clutter={c}, density={d}, structure={rho['structure']}")
    assert corr["n_maps"] == len(SWEEP_LEVELS) * SWEEP_PER_LEVEL
    assert c is not None and c > 0
    assert d is None or c >= d


def test_criterion_08_protocol_defaults(obstacle_corpus, maze_corpus, sweep):
    cfg = SuiteConfig(families=(FamilyConfig("maze", 1),), planners=(("jps", "flatness"),))
    defaults = {
        "bounds": cfg.bounds == Bounds((0, 0, 0), (20, 10, 5)),
        "radius": cfg.quad.radius == 0.2,
        "planning_resolution": cfg.quad.planning_resolution == 0.1,
        "inflation": cfg.inflation == 0.3 == DEFAULT_INFLATION,
        "goal_threshold": cfg.budget.goal_threshold == 1.0 == PlannerBudget().goal_threshold,
        "timeout": cfg.budget.timeout == 0.2,
        "v_max": cfg.quad.v_max == 3.0,
        "a_max": cfg.quad.a_max == 2.0,
    }
    again = SuiteConfig.from_dict(json.loads(cfg.to_json()))
    roundtrip = again == cfg and again.to_dict() == cfg.to_dict()
    rows = obstacle_corpus["rows"] + maze_corpus["rows"] + sweep.results
    worst = max(r.fe_time for r in rows)
    ok = all(defaults.values()) and roundtrip and worst <= 0.22
    failing = [k for k, v in defaults.items() if not v]
    record(8, ok, f"defaults ok={not failing} {failing}, round-trip={roundtrip}, "
                  f"max front-end wall clock {worst * 1e3:.1f} ms over {len(rows)} runs")
    assert not failing
    assert roundtrip
    assert worst <= 0.22


def _strip_timing(text: str) -> list[list[str]]:
    lines = [ln.split(",") for ln in text.strip().split("\n")]
    drop = {lines[0].index(f) for f in TIMING_FIELDS}
    return [[v for i, v in enumerate(ln) if i not in drop] for ln in lines]


def test_criterion_09_determinism(tmp_path):
    base = {"families": [{"family": "obstacle", "count": DETERMINISM_CASES // 2},
                         {"family": "maze", "count": DETERMINISM_CASES // 2, "spec": {"p": 0.1}}],
            "planners": [["jps", "flatness"], ["rrt_star", "flatness"], ["mpl", "none"]],
            "seed_base": 42}
    outs = []
    for par in (1, 8):
        cfg = SuiteConfig.from_dict(base | {"parallelism": par})
        d = tmp_path / f"p{par}"
        write_report(run_suite(cfg), d)
        outs.append(d)
    a, b = (_strip_timing((d / RESULTS_CSV).read_text()) for d in outs)
    trajs = [sorted(p.name for p in (d / "trajectories").iterdir()) for d in outs]
    same_traj = trajs[0] == trajs[1] and all(
        (outs[0] / "trajectories" / n).read_bytes() == (outs[1] / "trajectories" / n).read_bytes()
        for n in trajs[0])
    n_cases = len({row[0] for row in a[1:]})
    ok = a == b and same_traj and n_cases == DETERMINISM_CASES
    record(9, ok, f"{n_cases} cases x 3 pairs, results.csv identical={a == b}, "
                  f"trajectory files identical={same_traj} (parallelism 1 vs 8)")
    assert n_cases == DETERMINISM_CASES
    assert a == b
    assert same_traj


def test_criterion_10_runtime():
    elapsed = time.perf_counter() - _T0["start"]
    ok = elapsed < RUNTIME_LIMIT
    record(10, ok, f"acceptance suite took {elapsed:.0f}s (limit {RUNTIME_LIMIT}s)")
    assert ok
