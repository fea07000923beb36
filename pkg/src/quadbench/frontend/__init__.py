"""Front-end path planners: JPS (and plain A*), RRT* and a motion-primitive lattice."""

from __future__ import annotations

_WARM = False


def warmup() -> None:
    """Compile every numba kernel on a tiny grid so no timed run pays for it."""
    global _WARM
    if _WARM:
        return
    import numpy as np

    from ..errors import PlanningError
    from ..world import Bounds, VoxelGrid
    from .common import LatticeState, PlannerBudget, PlanningMap
    from .jps import plan_jps
    from .mpl import plan_mpl
    from .rrt_star import plan_rrt_star

    bounds = Bounds((0.0, 0.0, 0.0), (2.0, 2.0, 1.0))
    occ = np.zeros((20, 20, 10), dtype=bool)
    occ[10, 2:18, :] = True
    pmap = PlanningMap(VoxelGrid(bounds, 0.1, occ)).prepare()
    start, goal = np.array([0.25, 1.0, 0.5]), np.array([1.75, 1.0, 0.5])
    budget = PlannerBudget(timeout=60.0, goal_threshold=0.3)
    plan_jps(pmap, start, goal, budget=None)
    plan_jps(pmap, start, goal, budget=None, use_jumps=False)
    for fn in (lambda: plan_rrt_star(pmap, start, goal, budget),
               lambda: plan_mpl(pmap, LatticeState(tuple(start)), goal, budget=budget)):
        try:
            fn()
        except PlanningError:
            pass
    pmap.segment_free(start, goal)
    pmap.path_free(np.stack([start, goal]))
    _WARM = True
