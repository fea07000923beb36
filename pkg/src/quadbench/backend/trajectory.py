"""Piecewise quintic trajectories and the minimum-jerk fit through fixed waypoints."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..errors import ContractError

DEGREE = 5
NCOEF = DEGREE + 1


def _falling(k: int, d: int) -> float:
    """k! / (k - d)!, zero when d > k."""
    if d > k:
        return 0.0
    return float(math.perm(k, d))


# FALLING[d, k] = k! / (k - d)!; SHIFT[d, k] = max(k - d, 0).
FALLING = np.array([[_falling(k, d) for k in range(NCOEF)] for d in range(NCOEF)])
SHIFT = np.maximum(np.arange(NCOEF)[None, :] - np.arange(NCOEF)[:, None], 0)


def basis(t, d: int = 0) -> np.ndarray:
    """Row(s) of the ``d``-th derivative of ``[1, t, ..., t^5]``; shape ``(..., 6)``."""
    t = np.asarray(t, dtype=np.float64)
    return FALLING[d] * t[..., None] ** SHIFT[d]


def basis_stack(t, orders: int) -> np.ndarray:
    """Derivative bases of orders ``0..orders-1`` stacked on a leading axis."""
    t = np.asarray(t, dtype=np.float64)
    powers = t[..., None] ** np.arange(NCOEF)
    scale = FALLING[:orders].reshape((orders,) + (1,) * t.ndim + (NCOEF,))
    return np.moveaxis(powers[..., SHIFT[:orders]], -2, 0) * scale


@dataclass(frozen=True)
class BoundaryState:
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    acceleration: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def array(self) -> np.ndarray:
        return np.array([self.position, self.velocity, self.acceleration], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Segment ``i`` is ``p(t) = sum_k coeffs[i, k] t^k`` on local time ``[0, durations[i]]``."""

    durations: np.ndarray
    coeffs: np.ndarray  # (M, 6, 3)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=np.float64).ravel()
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != (len(d), NCOEF, 3):
            raise ContractError(f"coefficients must have shape ({len(d)}, 6, 3), got {c.shape}")
        if len(d) == 0 or np.any(~(d > 0)):
            raise ContractError("segment durations must be positive")
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_segments(self) -> int:
        return len(self.durations)

    @property
    def duration(self) -> float:
        return float(self.durations.sum())

    @property
    def knots(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    def locate(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Segment index and local time for global times ``t`` (clamped to [0, T])."""
        t = np.clip(np.atleast_1d(np.asarray(t, dtype=np.float64)), 0.0, self.duration)
        seg = np.searchsorted(self.knots, t, side="right") - 1
        seg = np.clip(seg, 0, self.n_segments - 1)
        return seg, t - self.knots[seg]

    def eval(self, t, d: int = 0) -> np.ndarray:
        """``d``-th derivative (0 = position ... 3 = jerk) at times ``t``; shape ``(n, 3)``."""
        seg, tau = self.locate(t)
        return np.einsum("nk,nka->na", basis(tau, d), self.coeffs[seg])

    def sample(self, dt: float) -> dict:
        n = max(1, math.ceil(self.duration / dt - 1e-9))
        t = np.minimum(np.arange(n + 1) * dt, self.duration)
        return {"t": t, **{name: self.eval(t, d) for d, name in enumerate(("pos", "vel", "acc", "jerk"))}}

    def segment_jerk_energy(self) -> np.ndarray:
        """Closed-form integral of squared jerk per segment (summed over axes)."""
        return np.array([jerk_energy(c, T) for c, T in zip(self.coeffs, self.durations)])

    def jerk_energy(self) -> float:
        return float(self.segment_jerk_energy().sum())

    def mean_squared_jerk(self) -> float:
        return self.jerk_energy() / self.duration

    def knot_jumps(self, max_order: int = 2) -> np.ndarray:
        """Largest absolute jump per derivative order ``0..max_order`` over interior knots."""
        out = np.zeros(max_order + 1)
        for i in range(self.n_segments - 1):
            for d in range(max_order + 1):
                end = basis(self.durations[i], d) @ self.coeffs[i]
                start = basis(0.0, d) @ self.coeffs[i + 1]
                out[d] = max(out[d], float(np.abs(end - start).max()))
        return out

    def time_scaled(self, factor: float) -> "Trajectory":
        """Same spatial curve traversed ``factor`` times slower."""
        k = np.arange(NCOEF)
        return Trajectory(self.durations * factor, self.coeffs / factor ** k[None, :, None], dict(self.info))

    def to_dict(self) -> dict:
        segs = [
            {"duration": float(T), **{f"coeffs_{a}": c[:, i].tolist() for i, a in enumerate("xyz")}}
            for T, c in zip(self.durations, self.coeffs)
        ]
        return {"segments": segs, "T": self.duration}

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        durs = [s["duration"] for s in d["segments"]]
        coeffs = [np.stack([s[f"coeffs_{a}"] for a in "xyz"], axis=1) for s in d["segments"]]
        return cls(np.array(durs), np.array(coeffs))

    def write_csv(self, path, dt: float = 0.01):
        s = self.sample(dt)
        cols = ["t"] + [f"{q}_{a}" for q in ("pos", "vel", "acc", "jerk") for a in "xyz"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            data = np.column_stack([s["t"], s["pos"], s["vel"], s["acc"], s["jerk"]])
            for row in data:
                w.writerow([f"{v:.9g}" for v in row])


def jerk_energy(c: np.ndarray, T: float) -> float:
    """Integral over [0, T] of squared jerk for quintic coefficients ``c`` (6,) or (6, n_axes)."""
    c = np.asarray(c, dtype=np.float64).reshape(NCOEF, -1)
    c3, c4, c5 = c[3], c[4], c[5]
    return float(np.sum(
        36 * c3**2 * T + 144 * c3 * c4 * T**2 + (192 * c4**2 + 240 * c3 * c5) * T**3
        + 720 * c4 * c5 * T**4 + 720 * c5**2 * T**5
    ))


def jerk_hessian(T) -> np.ndarray:
    """``Q`` with jerk energy ``c[3:] @ Q @ c[3:]`` for one axis; batched over ``T``."""
    T = np.asarray(T, dtype=np.float64)
    return np.moveaxis(np.array([
        [36 * T, 72 * T**2, 120 * T**3],
        [72 * T**2, 192 * T**3, 360 * T**4],
        [120 * T**3, 360 * T**4, 720 * T**5],
    ]), (0, 1), (-2, -1))


def jerk_hessian_dT(T) -> np.ndarray:
    T = np.asarray(T, dtype=np.float64)
    return np.moveaxis(np.array([
        [36.0 + 0 * T, 144 * T, 360 * T**2],
        [144 * T, 576 * T**2, 1440 * T**3],
        [360 * T**2, 1440 * T**3, 3600 * T**4],
    ]), (0, 1), (-2, -1))


# ---------------------------------------------------------------------------
# Minimum-jerk fit
# ---------------------------------------------------------------------------


def allocate_times(waypoints, v_max: float, a_max: float) -> np.ndarray:
    """Trapezoidal-profile duration per segment: ``L/v + v/a`` when the segment is
    long enough to reach ``v``, else the triangular ``2 sqrt(L/a)``."""
    w = np.asarray(waypoints, dtype=np.float64)
    if len(w) < 2:
        raise ContractError("need at least two waypoints")
    if not (v_max > 0 and a_max > 0):
        raise ContractError("limits must be positive")
    L = np.linalg.norm(np.diff(w, axis=0), axis=1)
    if np.any(L <= 0):
        raise ContractError("zero-length segment in time allocation")
    return np.where(L >= v_max**2 / a_max, L / v_max + v_max / a_max, 2 * np.sqrt(L / a_max))


class MinJerkSystem:
    """The linear system whose solution is the minimum-jerk piecewise quintic.

    Unknowns are the 6M coefficients per axis. Rows: start position, velocity
    and acceleration; at each interior knot the end position, the start
    position of the next segment, and continuity of derivatives 1..4 (the
    optimality conditions make the solution C4); end position, velocity and
    acceleration.
    """

    def __init__(self, durations):
        T = np.asarray(durations, dtype=np.float64)
        if np.any(~(T > 0)):
            raise ContractError("segment durations must be positive")
        self.T = T
        M = self.M = len(T)
        A = np.zeros((6 * M, 6 * M))
        at_end = basis_stack(T, 5)  # (5, M, 6)
        at_zero = basis_stack(0.0, 5)  # (5, 6)
        A[0:3, 0:6] = at_zero[:3]
        if M > 1:
            i = np.arange(M - 1)
            r, c = 3 + 6 * i, 6 * i
            cols = c[:, None] + np.arange(6)
            A[r[:, None], cols] = at_end[0, :-1]
            A[r[:, None] + 1, cols + 6] = at_zero[0]
            for d in range(1, 5):
                A[r[:, None] + 1 + d, cols] = at_end[d, :-1]
                A[r[:, None] + 1 + d, cols + 6] = -at_zero[d]
        A[6 * M - 3:, 6 * (M - 1):] = at_end[:3, -1]
        self.A = A
        try:
            self.lu = lu_factor(A, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as e:
            raise ContractError(f"singular minimum-jerk system: {e}") from None
        if not np.all(np.isfinite(self.lu[0])) or np.min(np.abs(np.diag(self.lu[0]))) < 1e-300:
            raise ContractError("singular minimum-jerk system")

    def rhs(self, waypoints, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        w = np.asarray(waypoints, dtype=np.float64)
        M = self.M
        b = np.zeros((6 * M, 3))
        b[0:3] = start
        for i in range(M - 1):
            b[3 + 6 * i] = w[i + 1]
            b[4 + 6 * i] = w[i + 1]
        b[6 * M - 3:] = end
        return b

    def solve(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, b).reshape(self.M, NCOEF, 3)

    def solve_adjoint(self, g: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, g.reshape(6 * self.M, 3), trans=1)


def _boundary(state, fallback_pos) -> np.ndarray:
    if state is None:
        s = np.zeros((3, 3))
        s[0] = fallback_pos
        return s
    if isinstance(state, BoundaryState):
        return state.array()
    s = np.asarray(state, dtype=np.float64)
    if s.shape == (3,):
        out = np.zeros((3, 3))
        out[0] = s
        return out
    return s.reshape(3, 3)


def min_jerk_fit(waypoints, durations, start=None, end=None) -> Trajectory:
    """Unique piecewise quintic through ``waypoints`` minimizing integrated squared
    jerk, with full position/velocity/acceleration boundary states (rest by default)."""
    w = np.asarray(waypoints, dtype=np.float64)
    T = np.asarray(durations, dtype=np.float64).ravel()
    if len(w) != len(T) + 1:
        raise ContractError("need exactly one more waypoint than durations")
    sys = MinJerkSystem(T)
    b = sys.rhs(w, _boundary(start, w[0]), _boundary(end, w[-1]))
    coeffs = sys.solve(b)
    if not np.all(np.isfinite(coeffs)):
        raise ContractError("minimum-jerk system produced non-finite coefficients")
    return Trajectory(T, coeffs)
