"""Motion-primitive lattice search for a double integrator.

Each primitive applies one constant acceleration from a uniform grid over
``[-a_max, a_max]^3`` for a fixed ``dt``. A* minimizes flight time plus a small
control-effort tie-breaker, with heuristic ``distance / v_max``.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit, types
from numba.typed import Dict

from ..errors import BudgetExceededError, ConfigError, ContractError, InfeasibleError
from ..world import QuadrotorSpec
from . import _kernels
from .common import LatticeState, Path, PlannerBudget, Stopwatch, as_map, path_length

FOUND, INFEASIBLE, TIMEOUT = _kernels.FOUND, _kernels.INFEASIBLE, _kernels.TIMEOUT


@dataclass(frozen=True)
class PrimitiveConfig:
    accel_levels: int = 3
    dt: float = 0.5
    effort_weight: float = 1e-3
    # Deterministic work cap; normally binds before the timeout.
    max_expansions: int = 2500

    def __post_init__(self):
        if self.accel_levels < 2 or self.dt <= 0:
            raise ConfigError("need >= 2 acceleration levels and dt > 0")


@dataclass(frozen=True, eq=False)
class PrimitiveTrajectory:
    """Piecewise-constant acceleration seed: ``positions[i], velocities[i]`` are the
    state at ``i * dt``; ``accelerations[i]`` is applied on ``[i*dt, (i+1)*dt)``."""

    positions: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray
    dt: float

    @property
    def duration(self) -> float:
        return self.dt * len(self.accelerations)

    def state_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = min(int(t // self.dt), len(self.accelerations) - 1)
        tau = t - i * self.dt
        a = self.accelerations[i]
        p0, v0 = self.positions[i], self.velocities[i]
        return p0 + v0 * tau + 0.5 * a * tau * tau, v0 + a * tau


def primitive_inputs(a_max: float, levels: int) -> np.ndarray:
    vals = np.linspace(-a_max, a_max, levels)
    return np.array(list(itertools.product(vals, repeat=3)), dtype=np.float64)


def propagate(p, v, a, t):
    """Closed-form double-integrator state after applying ``a`` for ``t``."""
    p, v, a = (np.asarray(x, float) for x in (p, v, a))
    return p + v * t + 0.5 * a * t * t, v + a * t


@njit(cache=True)
def _primitive_free(occ, p, v, a, dt, n_samples):
    nx, ny, nz = occ.shape
    for s in range(1, n_samples + 1):
        t = dt * s / n_samples
        x = p[0] + v[0] * t + 0.5 * a[0] * t * t
        y = p[1] + v[1] * t + 0.5 * a[1] * t * t
        z = p[2] + v[2] * t + 0.5 * a[2] * t * t
        i = int(math.ceil(x - 1e-9)) - 1
        j = int(math.ceil(y - 1e-9)) - 1
        k = int(math.ceil(z - 1e-9)) - 1
        if i < 0:
            i = 0
        if j < 0:
            j = 0
        if k < 0:
            k = 0
        if x < 0 or y < 0 or z < 0 or i >= nx or j >= ny or k >= nz or occ[i, j, k]:
            return False
    return True


@njit(cache=True)
def _key(p, v, vbin):
    # Positions are in cell units; velocities in cells/s binned by vbin.
    kx = int(math.floor(p[0])) & 0x3FF
    ky = int(math.floor(p[1])) & 0x3FF
    kz = int(math.floor(p[2])) & 0x3FF
    vx = int(math.floor(v[0] / vbin + 0.5)) & 0xFF
    vy = int(math.floor(v[1] / vbin + 0.5)) & 0xFF
    vz = int(math.floor(v[2] / vbin + 0.5)) & 0xFF
    return (((((kx << 10) | ky) << 10 | kz) << 8 | vx) << 8 | vy) << 8 | vz


@njit(cache=True)
def _mpl_search(occ, p0, v0, goal, thresh, inputs, dt, vmax, effort_w, n_samples,
                max_exp, deadline, vbin):
    """Lattice A* in grid units. Returns (status, node positions, velocities,
    parent, input index, goal node, expansions)."""
    cap = max_exp * inputs.shape[0] + 1
    cap = min(cap, 4_000_000)
    pos = np.empty((cap, 3))
    vel = np.empty((cap, 3))
    parent = np.full(cap, -1, np.int64)
    uidx = np.full(cap, -1, np.int64)
    g = np.empty(cap)
    closed = np.zeros(cap, np.bool_)
    seen = Dict.empty(key_type=types.int64, value_type=types.int64)
    pos[0] = p0
    vel[0] = v0
    g[0] = 0.0
    n = 1
    seen[_key(p0, v0, vbin)] = 0
    heap = [(math.sqrt(((goal - p0) ** 2).sum()) / vmax, 0, 0)]
    counter = 1
    expanded = 0
    while len(heap) > 0:
        f, _, cur = heapq.heappop(heap)
        if closed[cur]:
            continue
        closed[cur] = True
        dg = math.sqrt(((goal - pos[cur]) ** 2).sum())
        if dg <= thresh and _kernels.segment_free(occ, pos[cur], goal):
            return FOUND, pos[:n].copy(), vel[:n].copy(), parent[:n].copy(), uidx[:n].copy(), cur, expanded
        if expanded >= max_exp:
            return TIMEOUT, pos[:1].copy(), vel[:1].copy(), parent[:1].copy(), uidx[:1].copy(), -1, expanded
        if (expanded & 31) == 0 and _kernels.clock() > deadline:
            return TIMEOUT, pos[:1].copy(), vel[:1].copy(), parent[:1].copy(), uidx[:1].copy(), -1, expanded
        expanded += 1
        for ui in range(inputs.shape[0]):
            a = inputs[ui]
            nv = vel[cur] + a * dt
            if np.abs(nv).max() > vmax + 1e-9:
                continue
            np_ = pos[cur] + vel[cur] * dt + 0.5 * a * dt * dt
            key = _key(np_, nv, vbin)
            ng = g[cur] + dt + effort_w * (a * a).sum() * dt
            if key in seen:
                j = seen[key]
                if closed[j] or ng >= g[j] - 1e-12:
                    continue
            else:
                j = -1
            if not _primitive_free(occ, pos[cur], vel[cur], a, dt, n_samples):
                continue
            if not _kernels.segment_free(occ, pos[cur], np_):
                continue
            if j < 0:
                if n >= cap:
                    continue
                j = n
                n += 1
                seen[key] = j
            pos[j] = np_
            vel[j] = nv
            g[j] = ng
            parent[j] = cur
            uidx[j] = ui
            h = math.sqrt(((goal - np_) ** 2).sum()) / vmax
            heapq.heappush(heap, (ng + h, counter, j))
            counter += 1
    return INFEASIBLE, pos[:1].copy(), vel[:1].copy(), parent[:1].copy(), uidx[:1].copy(), -1, expanded


def plan_mpl(grid, start_state: LatticeState, goal, quad: QuadrotorSpec = QuadrotorSpec(),
             budget: PlannerBudget = PlannerBudget(),
             config: PrimitiveConfig = PrimitiveConfig()) -> tuple[Path, PrimitiveTrajectory]:
    """Search the primitive lattice from ``start_state`` until a state within the
    goal threshold can see ``goal`` in a straight free line."""
    pmap = as_map(grid)
    watch = Stopwatch(budget.timeout)
    p0 = np.asarray(start_state.position, float)
    v0 = np.asarray(start_state.velocity, float)
    goal = np.asarray(goal, float)
    if np.abs(v0).max() > quad.v_max + 1e-12:
        raise ContractError("start velocity exceeds v_max")
    pmap.require_free(p0, "start")
    pmap.require_free(goal, "goal")
    res = pmap.resolution
    inputs = primitive_inputs(quad.a_max, config.accel_levels)
    # Samples at <= res/2 spacing along the fastest possible primitive.
    reach = (quad.v_max * math.sqrt(3)) * config.dt
    n_samples = max(2, math.ceil(reach / (res / 2)))
    status, pos, vel, parent, uidx, node, expanded = _mpl_search(
        pmap.occ, pmap.to_u(p0), v0 / res, pmap.to_u(goal), budget.goal_threshold / res,
        inputs / res, config.dt, quad.v_max / res, config.effort_weight * res * res,
        n_samples, config.max_expansions, watch.deadline, quad.v_max / 8 / res,
    )
    elapsed = watch.elapsed()
    if status == TIMEOUT:
        raise BudgetExceededError(f"mpl: budget exhausted after {expanded} expansions")
    if status == INFEASIBLE:
        raise InfeasibleError(f"mpl: open list exhausted after {expanded} expansions")
    chain = []
    while node >= 0:
        chain.append(node)
        node = parent[node]
    chain = chain[::-1]
    positions = pmap.to_world(pos[chain])
    velocities = vel[chain] * res
    accels = inputs[uidx[chain[1:]]]
    seed = PrimitiveTrajectory(positions, velocities, accels, config.dt)
    waypoints = positions
    if np.linalg.norm(waypoints[-1] - goal) > 0:
        waypoints = np.vstack([waypoints, goal])
    path = Path(
        waypoints, path_length(waypoints), "mpl", elapsed,
        {"expanded": int(expanded), "duration": seed.duration},
    )
    return path, seed
