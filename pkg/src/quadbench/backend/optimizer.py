"""Penalty-based trajectory optimization through a corridor, and feasibility checks.

Upper level: interior waypoints (one per polytope overlap) and log-durations.
Lower level: the closed-form minimum-jerk fit. Corridor, velocity and
acceleration constraints enter as squared-hinge penalties sampled at ``K``
points per segment, plus a linear time regularizer.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..corridor import Corridor
from ..errors import ConfigError, ContractError, OptimizationFailure
from ..world import QuadrotorSpec, VoxelGrid
from .trajectory import (MinJerkSystem, Trajectory, _boundary, basis_stack, jerk_hessian, jerk_hessian_dT,
                         min_jerk_fit)

NORMS = ("inf", "2")
# Padding offset for polytopes with fewer halfspaces than the widest one.
_FAR = 1e30


@dataclass(frozen=True)
class OptimizerConfig:
    corridor_weight: float = 1e4
    velocity_weight: float = 1e3
    acceleration_weight: float = 1e3
    time_weight: float = 20.0
    samples_per_segment: int = 16
    # Per penalty round; the time-scaling pass restores feasibility if L-BFGS stops early.
    max_iterations: int = 60
    tolerance: float = 1e-5
    time_scale: float = 1.2
    max_scalings: int = 20
    # Outer penalty continuation rounds (corridor weight x10 each round).
    max_rounds: int = 4
    # Halfspaces are penalized this far inside the polytope.
    corridor_margin: float = 0.01
    norm: str = "inf"
    gradient: str = "analytic"
    check_dt: float = 0.01

    def __post_init__(self):
        for name in ("corridor_weight", "velocity_weight", "acceleration_weight", "time_weight",
                     "corridor_margin"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.samples_per_segment < 4:
            raise ConfigError("samples_per_segment must be >= 4")
        if self.time_scale <= 1.0:
            raise ConfigError("time_scale must exceed 1")
        if self.norm not in NORMS:
            raise ConfigError(f"norm must be one of {NORMS}")
        if self.gradient not in ("analytic", "fd"):
            raise ConfigError("gradient must be 'analytic' or 'fd'")

    def to_dict(self) -> dict:
        return asdict(self)


def _trapezoid_time(L: np.ndarray, v: float, a: float) -> np.ndarray:
    L = np.maximum(L, 1e-3)
    return np.where(L >= v * v / a, L / v + v / a, 2 * np.sqrt(L / a))


def _limit_penalty(x: np.ndarray, limit: float, norm: str) -> tuple[float, np.ndarray]:
    """Sum of squared excess over ``limit`` and its gradient; ``x`` is (..., 3)."""
    if norm == "inf":
        ex = np.maximum(np.abs(x) - limit, 0.0)
        return float((ex**2).sum()), 2 * ex * np.sign(x)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    ex = np.maximum(n - limit, 0.0)
    return float((ex**2).sum()), 2 * ex * x / np.maximum(n, 1e-12)


@dataclass
class _Problem:
    """Objective with analytic gradient over ``x = [interior waypoints, log T]``."""

    normals: np.ndarray  # (M, H, 3)
    offsets: np.ndarray  # (M, H)
    start: np.ndarray  # (3, 3) position/velocity/acceleration
    end: np.ndarray
    quad: QuadrotorSpec
    cfg: OptimizerConfig
    w_corridor: float
    history: list = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.normals)

    def unpack(self, x):
        M = self.M
        q = x[: 3 * (M - 1)].reshape(M - 1, 3)
        T = np.exp(x[3 * (M - 1):])
        w = np.vstack([self.start[0], q, self.end[0]])
        return w, T

    def value_and_grad(self, x):
        cfg, quad, M = self.cfg, self.quad, self.M
        w, T = self.unpack(x)
        sys = MinJerkSystem(T)
        c = sys.solve(sys.rhs(w, self.start, self.end))  # (M, 6, 3)
        gc = np.zeros_like(c)
        gT = np.zeros(M)
        # Jerk energy.
        h = c[:, 3:]
        Q, dQ = jerk_hessian(T), jerk_hessian_dT(T)
        Qh = Q @ h
        f = energy = float((h * Qh).sum())
        gc[:, 3:] += 2 * Qh
        gT += (h * (dQ @ h)).sum(axis=(1, 2))
        # Sampled penalties.
        K = cfg.samples_per_segment
        s = np.arange(K + 1) / K
        B = basis_stack(T[:, None] * s[None, :], 4)  # (4, M, K+1, 6)
        P, V, A, J = B @ c
        viol = P @ self.normals.transpose(0, 2, 1) - self.offsets[:, None, :] + cfg.corridor_margin
        ex = np.maximum(viol, 0.0)
        pen_c = self.w_corridor * float((ex**2).sum())
        gP = 2 * self.w_corridor * (ex @ self.normals)
        pv, gV = _limit_penalty(V, quad.v_max, cfg.norm)
        pa, gA = _limit_penalty(A, quad.a_max, cfg.norm)
        gV *= cfg.velocity_weight
        gA *= cfg.acceleration_weight
        f += pen_c + cfg.velocity_weight * pv + cfg.acceleration_weight * pa
        gc += (B[:3].transpose(0, 1, 3, 2) @ np.stack([gP, gV, gA])).sum(axis=0)
        gT += ((gP * V).sum(-1) + (gV * A).sum(-1) + (gA * J).sum(-1)) @ s
        # Time regularization.
        f += cfg.time_weight * float(T.sum())
        gT += cfg.time_weight
        # Back through the linear system: dJ/db = lam and dJ/dA = -lam c^T, where
        # only rows evaluated at a segment's end time depend on its duration.
        lam = sys.solve_adjoint(gc)
        gq = lam[3:6 * M - 3].reshape(-1, 6, 3)[:, 0:2].sum(axis=1)
        ends = basis_stack(T, 6)[1:, :, None, :] @ c[None]  # derivative d+1 at T
        ends = ends[:, :, 0]
        rows, segs, orders = _end_rows(M)
        np.subtract.at(gT, segs, (lam[rows] * ends[orders, segs]).sum(-1))
        grad = np.concatenate([gq.ravel(), gT * T])
        self.history.append({"f": f, "energy": energy, "corridor": pen_c, "time": float(T.sum())})
        return f, grad

    def value(self, x):
        return self.value_and_grad(x)[0]

    def fd_value_and_grad(self, x, h: float = 1e-6):
        f = self.value(x)
        g = np.zeros_like(x)
        for k in range(len(x)):
            e = np.zeros_like(x)
            e[k] = h * max(1.0, abs(x[k]))
            g[k] = (self.value(x + e) - self.value(x - e)) / (2 * e[k])
        return f, g


def _end_rows(M: int):
    """Rows of the min-jerk system evaluated at a segment's end, with the segment
    index and derivative order of each."""
    rows, segs, orders = [], [], []
    for i in range(M - 1):
        r = 3 + 6 * i
        rows += [r, r + 2, r + 3, r + 4, r + 5]
        segs += [i] * 5
        orders += [0, 1, 2, 3, 4]
    rows += [6 * M - 3, 6 * M - 2, 6 * M - 1]
    segs += [M - 1] * 3
    orders += [0, 1, 2]
    return np.array(rows), np.array(segs), np.array(orders)


def _pad_halfspaces(corridor: Corridor) -> tuple[np.ndarray, np.ndarray]:
    H = max(len(p.offsets) for p in corridor.polytopes)
    M = len(corridor)
    N = np.zeros((M, H, 3))
    b = np.full((M, H), _FAR)
    for i, p in enumerate(corridor.polytopes):
        N[i, : len(p.offsets)] = p.normals
        b[i, : len(p.offsets)] = p.offsets
    return N, b


def corridor_margins(traj: Trajectory, corridor: Corridor, dt: float = 0.01) -> np.ndarray:
    """Minimum halfspace slack of each sample against its segment's polytope."""
    s = traj.sample(dt)
    seg, _ = traj.locate(s["t"])
    out = np.empty(len(seg))
    for i, p in enumerate(corridor.polytopes):
        m = seg == i
        if np.any(m):
            out[m] = p.margins(s["pos"][m]).min(axis=1)
    return out


@dataclass(frozen=True)
class FeasibilityReport:
    duration: float
    max_velocity: float
    max_acceleration: float
    mean_squared_jerk: float
    velocity_ok: bool
    acceleration_ok: bool
    collision: bool
    min_corridor_margin: float | None = None
    n_samples: int = 0

    @property
    def ok(self) -> bool:
        corridor_ok = self.min_corridor_margin is None or self.min_corridor_margin >= -1e-6
        return self.velocity_ok and self.acceleration_ok and not self.collision and corridor_ok


def _norm(x: np.ndarray, norm: str) -> np.ndarray:
    return np.abs(x).max(axis=1) if norm == "inf" else np.linalg.norm(x, axis=1)


def check_dynamic_feasibility(traj: Trajectory, quad: QuadrotorSpec = QuadrotorSpec(), dt: float = 0.01,
                              grid: VoxelGrid | None = None, corridor: Corridor | None = None,
                              norm: str = "inf", tol: float = 1e-9) -> FeasibilityReport:
    """Sampled limit and collision checks at ``dt``; mean squared jerk is closed form."""
    if not dt > 0:
        raise ContractError("dt must be positive")
    s = traj.sample(dt)
    vmax = float(_norm(s["vel"], norm).max())
    amax = float(_norm(s["acc"], norm).max())
    collision = False
    if grid is not None:
        g = grid.grid if hasattr(grid, "grid") else grid
        collision = not bool(np.all(g.is_free(s["pos"])))
    margin = None
    if corridor is not None:
        margin = float(corridor_margins(traj, corridor, dt).min())
    return FeasibilityReport(
        duration=traj.duration, max_velocity=vmax, max_acceleration=amax,
        mean_squared_jerk=traj.mean_squared_jerk(),
        velocity_ok=vmax <= quad.v_max + tol, acceleration_ok=amax <= quad.a_max + tol,
        collision=collision, min_corridor_margin=margin, n_samples=len(s["t"]),
    )


def optimize_trajectory(corridor: Corridor, start, goal, quad: QuadrotorSpec = QuadrotorSpec(),
                        config: OptimizerConfig = OptimizerConfig(),
                        grid: VoxelGrid | None = None) -> Trajectory:
    """Minimum-jerk trajectory through ``corridor`` with sampled constraints.

    ``start`` and ``goal`` are positions or :class:`BoundaryState` (rest by
    default). Raises :class:`OptimizationFailure` when corridor violations
    survive every penalty round or limits survive every time scaling.
    """
    s0 = _boundary(start, None)
    s1 = _boundary(goal, None)
    first, last = corridor.polytopes[0], corridor.polytopes[-1]
    if not (first.contains(s0[0], 1e-6)[0] and last.contains(s1[0], 1e-6)[0]):
        raise ContractError("start must lie in the first polytope and goal in the last")
    M = len(corridor)
    N, b = _pad_halfspaces(corridor)
    w0 = np.vstack([s0[0], corridor.witnesses, s1[0]])
    T0 = _trapezoid_time(np.linalg.norm(np.diff(w0, axis=0), axis=1), quad.v_max, quad.a_max)
    x = np.concatenate([corridor.witnesses.ravel(), np.log(T0)])
    prob = _Problem(N, b, s0, s1, quad, config, config.corridor_weight)
    fun = prob.value_and_grad if config.gradient == "analytic" else prob.fd_value_and_grad
    merit = []
    rounds = 0
    traj = None
    # Durations stay within [1 ms, 1e4 s] so the basis powers cannot overflow.
    bounds = [(None, None)] * (3 * (M - 1)) + [(math.log(1e-3), math.log(1e4))] * M
    for rounds in range(1, config.max_rounds + 1):
        res = minimize(fun, x, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": config.max_iterations, "gtol": config.tolerance,
                                "ftol": config.tolerance})
        if np.all(np.isfinite(res.x)):
            x = res.x
        merit.append(float(res.fun) if not merit else min(merit[-1], float(res.fun)))
        w, T = prob.unpack(x)
        traj = min_jerk_fit(w, T, s0, s1)
        if corridor_margins(traj, corridor, config.check_dt).min() >= -1e-6:
            break
        prob.w_corridor *= 10
    else:
        raise OptimizationFailure(f"corridor violated after {config.max_rounds} penalty rounds")
    # Feasibility pass: uniform slow-down until the sampled limits hold.
    w, T = prob.unpack(x)
    scalings = 0
    while True:
        rep = check_dynamic_feasibility(traj, quad, config.check_dt, grid, corridor, config.norm)
        if rep.ok:
            break
        if rep.collision or (rep.min_corridor_margin is not None and rep.min_corridor_margin < -1e-6):
            raise OptimizationFailure("sampled trajectory leaves the corridor or collides")
        if scalings >= config.max_scalings:
            raise OptimizationFailure(f"limits still violated after {scalings} time scalings")
        T = T * config.time_scale
        traj = min_jerk_fit(w, T, s0, s1)
        scalings += 1
    info = {"rounds": rounds, "scalings": scalings, "evaluations": len(prob.history),
            "merit": merit, "corridor_weight": prob.w_corridor}
    return Trajectory(traj.durations, traj.coeffs, info)
