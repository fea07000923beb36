import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from quadbench.corridor import Corridor, Polytope, build_corridor, simplify_path, verify_corridor
from quadbench.errors import ContractError, InfeasibleError
from quadbench.frontend.common import Path, PlanningMap, path_length
from quadbench.frontend.jps import plan_jps
from quadbench.world import Bounds, VoxelGrid


def _grid(occ, res=0.1):
    return VoxelGrid(Bounds((0, 0, 0), tuple(np.array(occ.shape) * res)), res, occ)


def test_empty_grid_gives_bounds_box():
    b = Bounds((0, 0, 0), (3, 2, 1))
    grid = VoxelGrid.empty(b, 0.1)
    c = build_corridor(np.array([[0.25, 0.25, 0.25], [2.75, 1.75, 0.75]]), grid)
    assert len(c) == 1
    lo, hi = c.polytopes[0].box()
    assert np.allclose(lo, b.lo) and np.allclose(hi, b.hi)


def test_tunnel_gives_tunnel_cross_section():
    occ = np.ones((30, 10, 10), bool)
    occ[:, 4, 4] = False
    grid = _grid(occ)
    path = np.array([[0.05, 0.45, 0.45], [2.95, 0.45, 0.45]])
    c = build_corridor(path, grid)
    assert len(c) == 1
    lo, hi = c.polytopes[0].box()
    assert np.allclose(lo, [0, 0.4, 0.4]) and np.allclose(hi, [3.0, 0.5, 0.5])
    assert verify_corridor(c, grid, path).ok


def test_l_shaped_tunnel_needs_two_overlapping_boxes():
    occ = np.ones((20, 20, 3), bool)
    occ[:, 2, 1] = False
    occ[17, :, 1] = False
    grid = _grid(occ)
    path = np.array([[0.05, 0.25, 0.15], [1.75, 0.25, 0.15], [1.75, 1.95, 0.15]])
    c = build_corridor(path, grid)
    assert len(c) == 2
    rep = verify_corridor(c, grid, path)
    assert rep.ok
    assert all(r > 0 for r in rep.detail["overlap_radii"])


def test_colliding_path_is_rejected():
    occ = np.zeros((10, 10, 10), bool)
    occ[5] = True
    with pytest.raises(ContractError):
        build_corridor(np.array([[0.05, 0.5, 0.5], [0.95, 0.5, 0.5]]), _grid(occ))


def test_corridor_json_roundtrip():
    c = Corridor([Polytope.from_box([0, 0, 0], [1, 1, 1]), Polytope.from_box([0.5, 0, 0], [2, 1, 1], 1)],
                 [[0.75, 0.5, 0.5]])
    back = Corridor.from_dict(json.loads(json.dumps(c.to_dict())))
    for p, q in zip(c.polytopes, back.polytopes):
        assert np.array_equal(p.normals, q.normals) and np.array_equal(p.offsets, q.offsets)
        assert p.segment == q.segment
    assert np.array_equal(back.witnesses, c.witnesses)


def test_polytope_normalizes_halfspaces():
    p = Polytope([[2.0, 0, 0]], [4.0])
    assert np.allclose(p.normals, [[1, 0, 0]]) and np.allclose(p.offsets, [2.0])
    assert p.box() is None
    with pytest.raises(ContractError):
        Polytope([[0.0, 0, 0]], [1.0])


def _random_case(seed):
    rng = np.random.default_rng(seed)
    occ = rng.random((16, 16, 6)) < 0.2
    free = np.argwhere(~occ)
    s, g = (tuple(free[i]) for i in rng.choice(len(free), 2, replace=False))
    return occ, s, g


@settings(max_examples=60)
@given(st.integers(0, 2**31 - 1))
def test_random_corridors_verify_and_are_face_maximal(seed):
    occ, s, g = _random_case(seed)
    grid = _grid(occ)
    pmap = PlanningMap(grid)
    try:
        path = plan_jps(pmap, grid.center(s), grid.center(g), None)
    except (InfeasibleError, ContractError):
        return
    c = build_corridor(path, pmap)
    assert verify_corridor(c, grid, path).ok
    for p in c.polytopes:
        lo, hi = p.box()
        lo_idx = np.rint(lo / 0.1).astype(int)
        hi_idx = np.rint(hi / 0.1).astype(int) - 1
        assert oracles.box_face_maximal(occ, lo_idx, hi_idx)


@settings(max_examples=500)
@given(st.integers(0, 2**31 - 1))
def test_simplify_never_lengthens(seed):
    occ, s, g = _random_case(seed)
    grid = _grid(occ)
    pmap = PlanningMap(grid)
    try:
        path = plan_jps(pmap, grid.center(s), grid.center(g), None)
    except (InfeasibleError, ContractError):
        return
    out = simplify_path(path, pmap)
    assert out.length <= path.length + 1e-9
    assert pmap.path_free(out.waypoints)
    assert np.array_equal(out.waypoints[0], path.waypoints[0])
    assert np.array_equal(out.waypoints[-1], path.waypoints[-1])


def test_simplify_straightens_staircase():
    grid = VoxelGrid.empty(Bounds((0, 0, 0), (1, 1, 1)), 0.1)
    w = np.array([[0.05, 0.05, 0.05], [0.45, 0.05, 0.05], [0.45, 0.45, 0.05], [0.85, 0.45, 0.05]])
    out = simplify_path(Path(w, path_length(w), "x"), grid)
    assert len(out.waypoints) == 2
