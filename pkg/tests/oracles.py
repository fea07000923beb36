"""Independent brute-force oracles used by the tests.

Nothing here imports the package's algorithms; only plain numpy/scipy and
python loops, written for clarity rather than speed.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist

MOVES = [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]


def grid_graph(occ: np.ndarray):
    """26-connected graph where a move is allowed iff every cell of the box it
    spans is free; edge weight is the step length in cells."""
    dims = occ.shape
    ids = np.arange(occ.size).reshape(dims)
    # Pad with occupied cells so out-of-grid moves are never allowed.
    pad = np.pad(occ, 1, constant_values=True)
    rows, cols, w = [], [], []
    for d in MOVES:
        ok = ~occ.copy()
        for off in itertools.product(*[sorted({0, v}) for v in d]):
            sl = tuple(slice(1 + o, 1 + o + n) for o, n in zip(off, dims))
            ok &= ~pad[sl]
        src = ids[ok]
        rows.append(src)
        # The padded check covers the target cell, so the flat offset stays in the grid.
        cols.append(src + (d[0] * dims[1] + d[1]) * dims[2] + d[2])
        w.append(np.full(len(src), math.sqrt(sum(abs(v) for v in d))))
    n = occ.size
    return coo_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()


def dijkstra_moves(occ: np.ndarray, start, goal, graph=None):
    """Optimal move counts ``[n_straight, n_diag2, n_diag3]`` or ``None`` if unreachable."""
    dims = occ.shape
    g = grid_graph(occ) if graph is None else graph
    flat = lambda c: (c[0] * dims[1] + c[1]) * dims[2] + c[2]  # noqa: E731
    s, t = flat(start), flat(goal)
    dist, pred = dijkstra(g, indices=s, return_predecessors=True)
    if not np.isfinite(dist[t]):
        return None
    counts = [0, 0, 0]
    v = t
    while v != s:
        u = pred[v]
        a = np.unravel_index(u, dims)
        b = np.unravel_index(v, dims)
        counts[int(np.abs(np.subtract(a, b)).sum()) - 1] += 1
        v = u
    return counts


def density_brute(occ: np.ndarray, r: float, extent) -> float:
    return r**3 * int(occ.sum()) / float(np.prod(extent))


def dispersion_brute(occ: np.ndarray, r: float) -> float:
    """max over free centers of min distance to occupied centers (meters)."""
    occ_c = np.argwhere(occ).astype(float)
    free_c = np.argwhere(~occ).astype(float)
    return float(cdist(free_c, occ_c).min(axis=1).max()) * r


def structure_brute(occ: np.ndarray, connectivity: int = 6) -> float:
    dims = occ.shape
    if connectivity == 6:
        nbrs = [d for d in MOVES if sum(map(abs, d)) == 1]
    else:
        nbrs = MOVES
    n = exposed = 0
    for c in zip(*np.nonzero(occ)):
        n += 1
        for d in nbrs:
            t = tuple(int(a) + b for a, b in zip(c, d))
            if all(0 <= t[k] < dims[k] for k in range(3)) and not occ[t]:
                exposed += 1
                break
    return exposed / n


def cells_connected(n_x: int, n_y: int, edges) -> bool:
    adj = {(x, y): [] for x in range(n_x) for y in range(n_y)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {(0, 0)}
    q = deque([(0, 0)])
    while q:
        c = q.popleft()
        for d in adj[c]:
            if d not in seen:
                seen.add(d)
                q.append(d)
    return len(seen) == n_x * n_y


def box_face_maximal(occ: np.ndarray, lo_idx, hi_idx) -> bool:
    """Every face of the inclusive index box is blocked: the slab just beyond it
    leaves the grid or holds an occupied cell."""
    dims = occ.shape
    for ax in range(3):
        for side in (0, 1):
            lo, hi = list(lo_idx), list(hi_idx)
            if side == 0:
                if lo[ax] == 0:
                    continue
                lo[ax] = hi[ax] = lo[ax] - 1
            else:
                if hi[ax] == dims[ax] - 1:
                    continue
                lo[ax] = hi[ax] = hi[ax] + 1
            slab = occ[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
            if not slab.any():
                return False
    return True


def quintic_rest_to_rest(L: float, tau):
    """Closed-form minimum-jerk rest-to-rest profile over normalized time ``tau``."""
    tau = np.asarray(tau, float)
    return L * (10 * tau**3 - 15 * tau**4 + 6 * tau**5)
