"""Anytime RRT* in 3-D with goal bias and a shrinking rewire radius."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import BudgetExceededError
from . import _kernels
from .common import Path, PlannerBudget, Stopwatch, as_map, path_length


@dataclass(frozen=True)
class RRTStarConfig:
    goal_bias: float = 0.1
    # Steering range as a fraction of the bounds diagonal (0.2 mirrors OMPL).
    range_fraction: float = 0.2
    rewire_factor: float = 1.1
    # Deterministic work cap; normally binds well before the timeout.
    max_iterations: int = 3500


@njit(cache=True)
def _reattach(parent, first_child, next_sib, j, new_parent):
    old = parent[j]
    if old >= 0:
        c = first_child[old]
        if c == j:
            first_child[old] = next_sib[j]
        else:
            while next_sib[c] != j:
                c = next_sib[c]
            next_sib[c] = next_sib[j]
    parent[j] = new_parent
    next_sib[j] = first_child[new_parent]
    first_child[new_parent] = j


@njit(cache=True)
def _propagate(cost, first_child, next_sib, root, delta, stack):
    top = 0
    c = first_child[root]
    while c >= 0:
        stack[top] = c
        top += 1
        c = next_sib[c]
    while top > 0:
        top -= 1
        k = stack[top]
        cost[k] += delta
        c = first_child[k]
        while c >= 0:
            stack[top] = c
            top += 1
            c = next_sib[c]


@njit(cache=True)
def _rrt_star(occ, start, goal, thresh, step, gamma, goal_bias, max_iter, seed, deadline):
    """All quantities in grid index units. Returns node positions, parents,
    costs, the goal-connected node, and the best-cost history per iteration."""
    np.random.seed(seed)
    nx, ny, nz = occ.shape
    cap = max_iter + 1
    pos = np.empty((cap, 3))
    parent = np.full(cap, -1, np.int64)
    cost = np.zeros(cap)
    first_child = np.full(cap, -1, np.int64)
    next_sib = np.full(cap, -1, np.int64)
    stack = np.empty(cap, np.int64)
    near = np.empty(cap, np.int64)
    goal_nodes = np.empty(cap, np.int64)
    to_goal = np.zeros(cap)
    n_goal = 0
    pos[0] = start
    n = 1
    history = np.full(max_iter, np.inf)
    best = np.inf
    best_node = -1
    dist0 = math.sqrt(((goal - start) ** 2).sum())
    if dist0 <= thresh and _kernels.segment_free(occ, start, goal):
        goal_nodes[0] = 0
        to_goal[0] = dist0
        n_goal = 1
        best = dist0
        best_node = 0
    it = 0
    sample = np.empty(3)
    new = np.empty(3)
    while it < max_iter:
        if (it & 63) == 0 and _kernels.clock() > deadline:
            break
        if np.random.random() < goal_bias:
            sample[:] = goal
        else:
            sample[0] = np.random.random() * nx
            sample[1] = np.random.random() * ny
            sample[2] = np.random.random() * nz
        # nearest
        nearest = 0
        bd = np.inf
        for i in range(n):
            d = (pos[i, 0] - sample[0]) ** 2 + (pos[i, 1] - sample[1]) ** 2 + (pos[i, 2] - sample[2]) ** 2
            if d < bd:
                bd = d
                nearest = i
        bd = math.sqrt(bd)
        if bd < 1e-9:
            history[it] = best
            it += 1
            continue
        if bd > step:
            new[:] = pos[nearest] + (sample - pos[nearest]) * (step / bd)
        else:
            new[:] = sample
        if not _kernels.segment_free(occ, pos[nearest], new):
            history[it] = best
            it += 1
            continue
        radius = min(gamma * (math.log(n + 1) / (n + 1)) ** (1.0 / 3.0), step)
        r2 = radius * radius
        m = 0
        for i in range(n):
            d = (pos[i, 0] - new[0]) ** 2 + (pos[i, 1] - new[1]) ** 2 + (pos[i, 2] - new[2]) ** 2
            if d <= r2:
                near[m] = i
                m += 1
        # choose parent
        best_parent = nearest
        best_cost = cost[nearest] + math.sqrt(((pos[nearest] - new) ** 2).sum())
        for t in range(m):
            i = near[t]
            if i == nearest:
                continue
            c = cost[i] + math.sqrt(((pos[i] - new) ** 2).sum())
            if c < best_cost - 1e-12 and _kernels.segment_free(occ, pos[i], new):
                best_cost = c
                best_parent = i
        k = n
        n += 1
        pos[k] = new
        cost[k] = best_cost
        parent[k] = -1
        _reattach(parent, first_child, next_sib, k, best_parent)
        # rewire
        for t in range(m):
            i = near[t]
            if i == best_parent:
                continue
            c = best_cost + math.sqrt(((pos[i] - new) ** 2).sum())
            if c < cost[i] - 1e-12 and _kernels.segment_free(occ, new, pos[i]):
                delta = c - cost[i]
                cost[i] = c
                _reattach(parent, first_child, next_sib, i, k)
                _propagate(cost, first_child, next_sib, i, delta, stack)
        dg = math.sqrt(((goal - new) ** 2).sum())
        if dg <= thresh and _kernels.segment_free(occ, new, goal):
            goal_nodes[n_goal] = k
            to_goal[n_goal] = dg
            n_goal += 1
        for t in range(n_goal):
            c = cost[goal_nodes[t]] + to_goal[t]
            if c < best:
                best = c
                best_node = goal_nodes[t]
        history[it] = best
        it += 1
    return pos[:n].copy(), parent[:n].copy(), best_node, best, history[:it].copy()


def _gamma(occ: np.ndarray, factor: float) -> float:
    free = float(occ.size - np.count_nonzero(occ))
    unit_ball = 4.0 / 3.0 * math.pi
    return factor * 2.0 * (1.0 + 1.0 / 3.0) ** (1.0 / 3.0) * (free / unit_ball) ** (1.0 / 3.0)


def plan_rrt_star(grid, start, goal, budget: PlannerBudget = PlannerBudget(), seed: int = 0,
                  config: RRTStarConfig = RRTStarConfig()) -> Path:
    """Best path found within the budget. The final waypoint is ``goal`` itself,
    reached from a tree node within the goal threshold."""
    pmap = as_map(grid)
    watch = Stopwatch(budget.timeout)
    start, goal = np.asarray(start, float), np.asarray(goal, float)
    pmap.require_free(start, "start")
    pmap.require_free(goal, "goal")
    res = pmap.resolution
    dims = np.asarray(pmap.occ.shape, float)
    step = config.range_fraction * float(np.linalg.norm(dims))
    pos, parent, node, best, history = _rrt_star(
        pmap.occ, pmap.to_u(start), pmap.to_u(goal), budget.goal_threshold / res, step,
        _gamma(pmap.occ, config.rewire_factor), config.goal_bias, config.max_iterations,
        int(seed) % (2**32), watch.deadline,
    )
    elapsed = watch.elapsed()
    if node < 0:
        raise BudgetExceededError(f"rrt*: no solution after {len(history)} iterations")
    chain = []
    while node >= 0:
        chain.append(node)
        node = parent[node]
    u = pos[chain[::-1]]
    waypoints = pmap.to_world(u)
    if np.linalg.norm(waypoints[-1] - goal) > 0:
        waypoints = np.vstack([waypoints, goal])
    return Path(
        waypoints, path_length(waypoints), "rrt_star", elapsed,
        {"iterations": len(history), "nodes": len(pos), "best_cost_history": history * res},
    )
