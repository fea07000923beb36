"""Jump point search on the inflated planning grid (26-connected, Euclidean weights)."""

from __future__ import annotations

import math

import numpy as np

from ..errors import BudgetExceededError, ContractError, InfeasibleError
from . import _kernels
from .common import Path, PlannerBudget, Stopwatch, as_map

MOVE_COSTS = np.array([1.0, math.sqrt(2.0), math.sqrt(3.0)])


def plan_jps(grid, start, goal, budget: PlannerBudget | None = PlannerBudget(),
             use_jumps: bool = True) -> Path:
    """Grid-optimal path between the cells containing ``start`` and ``goal``.

    Waypoints are the centers of the jump points. ``budget=None`` disables the
    timeout (used by the feasibility filter). ``use_jumps=False`` runs plain A*
    on the same graph.
    """
    pmap = as_map(grid)
    watch = Stopwatch(None if budget is None else budget.timeout)
    start, goal = np.asarray(start, float), np.asarray(goal, float)
    pmap.require_free(start, "start")
    pmap.require_free(goal, "goal")
    s, g = pmap.cell_of(start), pmap.cell_of(goal)
    if s == g:
        raise ContractError("start and goal share a cell")
    status, chain, counts, expanded = _kernels.run_grid_search(
        pmap.occ, s, g, watch.deadline, use_jumps, pmap.neighborhood, pmap.forced
    )
    elapsed = watch.elapsed()
    name = "jps" if use_jumps else "astar"
    if status == _kernels.TIMEOUT:
        raise BudgetExceededError(f"{name} exceeded {budget.timeout:.3f}s after {expanded} expansions")
    if status == _kernels.INFEASIBLE:
        raise InfeasibleError(f"{name}: goal unreachable ({expanded} expansions)")
    idx = np.stack(np.unravel_index(chain, pmap.occ.shape), axis=1)
    cost = float(counts @ MOVE_COSTS) * pmap.resolution
    return Path(
        pmap.grid.center(idx), cost, name, elapsed,
        {"expanded": int(expanded), "move_counts": counts.tolist()},
    )
