"""Numba kernels for grid search and segment collision checks.

Grids are passed as C-contiguous ``uint8`` arrays (1 = occupied). Positions
inside kernels are in continuous index units ``u = (x - lo) / res`` so that
cell ``i`` spans ``[i, i + 1]``.
"""

import heapq
import math
import time
from collections import namedtuple

import numba
import numpy as np
from numba import njit, types
from numba.typed import Dict

from ._tables import DIR_LEN, DIRS, build_tables

_MOVE_MASK, _NATURAL, _ALT_START, _ALT_MASKS = build_tables()
ORDER = (np.abs(DIRS) > 0).sum(axis=1).astype(np.int64)
SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
EPS = 1e-9
# Bit of the cube centre in a neighbourhood mask.
CENTER_BIT = 1 << 13

FOUND, INFEASIBLE, TIMEOUT = 0, 1, 2


@njit(cache=True)
def clock():
    with numba.objmode(t="float64"):
        t = time.process_time()
    return t


@njit(cache=True)
def _axis_cells(u, n):
    """Index range of cells whose closed extent contains coordinate ``u``;
    empty (hi < lo) when ``u`` is outside the grid."""
    if u < -EPS or u > n + EPS:
        return 0, -1
    r = math.floor(u + 0.5)
    if abs(u - r) < EPS:
        return max(r - 1, 0), min(r, n - 1)
    f = int(math.floor(u))
    return f, f


@njit(cache=True)
def _point_blocked(occ, u0, u1, u2):
    """True if any cell whose closed box contains the point is occupied or the
    point is outside the grid."""
    nx, ny, nz = occ.shape
    i0, i1 = _axis_cells(u0, nx)
    j0, j1 = _axis_cells(u1, ny)
    k0, k1 = _axis_cells(u2, nz)
    if i1 < i0 or j1 < j0 or k1 < k0:
        return True
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            for k in range(k0, k1 + 1):
                if occ[i, j, k]:
                    return True
    return False


@njit(cache=True)
def _first_crossing(a, d):
    """Parameter of the first integer crossing after ``t = 0`` and the spacing
    between crossings along one axis."""
    if abs(d) < 1e-15:
        return np.inf, np.inf
    if d > 0:
        return (math.floor(a) + 1 - a) / d, 1.0 / d
    return (math.ceil(a) - 1 - a) / d, -1.0 / d


@njit(cache=True)
def segment_free(occ, a, b):
    """Exact supercover test: every cell touched by segment ``a -> b`` is free.

    Walks the merged sequence of grid-plane crossings, testing each crossing
    point (all cells sharing it) and the midpoint of each crossing interval.
    """
    a0, a1, a2 = a[0], a[1], a[2]
    d0, d1, d2 = b[0] - a0, b[1] - a1, b[2] - a2
    t0, s0 = _first_crossing(a0, d0)
    t1, s1 = _first_crossing(a1, d1)
    t2, s2 = _first_crossing(a2, d2)
    if _point_blocked(occ, a0, a1, a2):
        return False
    prev = 0.0
    while True:
        t = min(t0, t1, t2, 1.0)
        if t - prev > 1e-12:
            tm = 0.5 * (t + prev)
            if _point_blocked(occ, a0 + tm * d0, a1 + tm * d1, a2 + tm * d2):
                return False
        if _point_blocked(occ, a0 + t * d0, a1 + t * d1, a2 + t * d2):
            return False
        if t >= 1.0:
            return True
        if t0 <= t:
            t0 += s0
        if t1 <= t:
            t1 += s1
        if t2 <= t:
            t2 += s2
        prev = t


@njit(cache=True)
def path_free(occ, pts):
    for i in range(pts.shape[0] - 1):
        if not segment_free(occ, pts[i], pts[i + 1]):
            return False
    return True


# ---------------------------------------------------------------------------
# Jump point search
# ---------------------------------------------------------------------------


@njit(cache=True)
def neighborhood_masks(occ):
    """Per-cell 27-bit mask of blocked cells in the surrounding 3x3x3 cube
    (out-of-grid cells count as blocked), flattened in C order."""
    nx, ny, nz = occ.shape
    out = np.zeros(nx * ny * nz, np.int32)
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                m = 0
                for dx in range(-1, 2):
                    i = x + dx
                    for dy in range(-1, 2):
                        j = y + dy
                        for dz in range(-1, 2):
                            k = z + dz
                            if i < 0 or j < 0 or k < 0 or i >= nx or j >= ny or k >= nz or occ[i, j, k]:
                                m |= 1 << ((dx + 1) * 9 + (dy + 1) * 3 + (dz + 1))
                out[(x * ny + y) * nz + z] = m
    return out


@njit(cache=True)
def _unpruned(cube, din, e, move_mask, alt_start, alt_masks):
    """Whether neighbour direction ``e`` survives pruning at a node entered along
    ``din`` (``din < 0`` for the start node)."""
    if cube & move_mask[e]:
        return False
    if din < 0:
        return True
    k = din * 26 + e
    for t in range(alt_start[k], alt_start[k + 1]):
        if (alt_masks[t] & cube) == 0:
            return False
    return True


@njit(cache=True)
def _has_forced(cube, d, tb):
    # Fast path: none of the cells that can force a neighbour are blocked.
    if (cube & tb.relevant[d]) == 0:
        return False
    for e in range(26):
        if tb.natural[d, e]:
            continue
        if _unpruned(cube, d, e, tb.move_mask, tb.alt_start, tb.alt_masks):
            return True
    return False


@njit(cache=True)
def forced_masks(nbr, tb):
    """Per-cell 26-bit mask: bit ``d`` set iff a node entered along ``d`` has a
    forced neighbour. Distinct neighbourhoods are few, so results are memoised."""
    n = nbr.shape[0]
    out = np.zeros(n, np.int32)
    any_rel = 0
    for d in range(26):
        any_rel |= tb.relevant[d]
    memo = Dict.empty(key_type=types.int64, value_type=types.int64)
    for x in range(n):
        cube = nbr[x]
        # Occupied cells are never entered; empty neighbourhoods force nothing.
        if (cube & CENTER_BIT) or (cube & any_rel) == 0:
            continue
        key = np.int64(cube)
        if key in memo:
            out[x] = memo[key]
            continue
        m = 0
        for d in range(26):
            if _has_forced(cube, d, tb):
                m |= 1 << d
        memo[key] = m
        out[x] = m
    return out


@njit(cache=True)
def _jump_straight(nbr, forced, x, d, goal, tb):
    off = tb.offset[d]
    mm = tb.move_mask[d]
    while True:
        if nbr[x] & mm:
            return -1
        x += off
        tb.scanned[0] += 1
        if x == goal or (forced[x] >> d) & 1:
            return x


@njit(cache=True)
def _jump_diag2(nbr, forced, x, d, goal, tb):
    off = tb.offset[d]
    mm = tb.move_mask[d]
    while True:
        if nbr[x] & mm:
            return -1
        x += off
        tb.scanned[0] += 1
        if x == goal or (forced[x] >> d) & 1:
            return x
        for k in range(tb.sub_count[d]):
            if _jump_straight(nbr, forced, x, tb.sub[d, k], goal, tb) >= 0:
                return x


@njit(cache=True)
def _jump_diag3(nbr, forced, x, d, goal, tb):
    off = tb.offset[d]
    mm = tb.move_mask[d]
    while True:
        if nbr[x] & mm:
            return -1
        x += off
        tb.scanned[0] += 1
        if x == goal or (forced[x] >> d) & 1:
            return x
        for k in range(tb.sub_count[d]):
            e = tb.sub[d, k]
            if tb.order[e] == 1:
                jp = _jump_straight(nbr, forced, x, e, goal, tb)
            else:
                jp = _jump_diag2(nbr, forced, x, e, goal, tb)
            if jp >= 0:
                return x


@njit(cache=True)
def _jump(nbr, forced, x, d, goal, tb):
    o = tb.order[d]
    if o == 1:
        return _jump_straight(nbr, forced, x, d, goal, tb)
    if o == 2:
        return _jump_diag2(nbr, forced, x, d, goal, tb)
    return _jump_diag3(nbr, forced, x, d, goal, tb)


@njit(cache=True)
def _octile(dx, dy, dz):
    a, b, c = abs(dx), abs(dy), abs(dz)
    if a < b:
        a, b = b, a
    if b < c:
        b, c = c, b
    if a < b:
        a, b = b, a
    return SQRT3 * c + SQRT2 * (b - c) + (a - b)


@njit(cache=True)
def grid_search(nbr, forced, shape, start, goal, tb, deadline, use_jumps):
    """A* over jump points (``use_jumps``) or plain 26-connected A*.

    Returns ``(status, chain, counts, expanded)``: ``chain`` lists flat indices
    from start to goal, ``counts`` the number of unit moves of order 1, 2, 3.
    """
    nx, ny, nz = shape[0], shape[1], shape[2]
    n = nx * ny * nz
    g = np.full(n, np.inf)
    parent = np.full(n, -1, np.int64)
    indir = np.full(n, -1, np.int8)
    closed = np.zeros(n, np.bool_)
    cnt = np.zeros((n, 3), np.int32)
    gx, gy, gz = goal[0], goal[1], goal[2]
    s = (start[0] * ny + start[1]) * nz + start[2]
    gl = (gx * ny + gy) * nz + gz
    g[s] = 0.0
    heap = [(_octile(start[0] - gx, start[1] - gy, start[2] - gz), 0.0, 0, s)]
    counter = 1
    expanded = 0
    last_check = 0
    status = INFEASIBLE
    while len(heap) > 0:
        _, _, _, cur = heapq.heappop(heap)
        if closed[cur]:
            continue
        closed[cur] = True
        expanded += 1
        if cur == gl:
            status = FOUND
            break
        work = tb.scanned[0] + expanded
        if work - last_check > 8192:
            last_check = work
            if clock() > deadline:
                status = TIMEOUT
                break
        cx = cur // (ny * nz)
        cy = (cur // nz) % ny
        cz = cur % nz
        cube = nbr[cur]
        din = indir[cur]
        for e in range(26):
            if use_jumps:
                if not _unpruned(cube, din, e, tb.move_mask, tb.alt_start, tb.alt_masks):
                    continue
                jp = _jump(nbr, forced, cur, e, gl, tb)
                if jp < 0:
                    continue
            else:
                if cube & tb.move_mask[e]:
                    continue
                jp = cur + tb.offset[e]
            if closed[jp]:
                continue
            jx = jp // (ny * nz)
            jy = (jp // nz) % ny
            jz = jp % nz
            steps = max(abs(jx - cx), max(abs(jy - cy), abs(jz - cz)))
            ng = g[cur] + steps * tb.length[e]
            if ng < g[jp] - 1e-12:
                g[jp] = ng
                parent[jp] = cur
                indir[jp] = e
                for t in range(3):
                    cnt[jp, t] = cnt[cur, t]
                cnt[jp, tb.order[e] - 1] += steps
                heapq.heappush(heap, (ng + _octile(jx - gx, jy - gy, jz - gz), -ng, counter, jp))
                counter += 1
    if status != FOUND:
        return status, np.zeros(0, np.int64), np.zeros(3, np.int64), expanded
    length = 0
    v = gl
    while v >= 0:
        length += 1
        v = parent[v]
    chain = np.empty(length, np.int64)
    v = gl
    for t in range(length - 1, -1, -1):
        chain[t] = v
        v = parent[v]
    return FOUND, chain, cnt[gl].astype(np.int64), expanded


SearchTables = namedtuple(
    "SearchTables",
    "move_mask natural alt_start alt_masks relevant sub sub_count order offset length scanned",
)


def search_tables(shape) -> SearchTables:
    """Direction tables specialised to a grid shape (flat-index offsets)."""
    nx, ny, nz = shape
    relevant = np.zeros(26, np.int64)
    sub = np.full((26, 7), -1, np.int64)
    sub_count = np.zeros(26, np.int64)
    for d in range(26):
        for e in range(26):
            if _NATURAL[d, e]:
                if e != d:
                    sub[d, sub_count[d]] = e
                    sub_count[d] += 1
            else:
                k = d * 26 + e
                for m in _ALT_MASKS[_ALT_START[k]:_ALT_START[k + 1]]:
                    relevant[d] |= m
    offset = (DIRS[:, 0] * ny + DIRS[:, 1]) * nz + DIRS[:, 2]
    return SearchTables(
        _MOVE_MASK, _NATURAL, _ALT_START, _ALT_MASKS, relevant, sub, sub_count,
        ORDER, offset.astype(np.int64), DIR_LEN.astype(np.float64), np.zeros(1, np.int64),
    )


def run_grid_search(occ: np.ndarray, start, goal, deadline: float, use_jumps: bool = True,
                    nbr: np.ndarray | None = None, forced: np.ndarray | None = None):
    occ = np.ascontiguousarray(occ, dtype=np.uint8)
    if nbr is None:
        nbr = neighborhood_masks(occ)
    tb = search_tables(occ.shape)
    if forced is None:
        forced = forced_masks(nbr, tb)
    return grid_search(
        nbr, forced, np.asarray(occ.shape, np.int64), np.asarray(start, np.int64),
        np.asarray(goal, np.int64), tb, float(deadline), use_jumps,
    )
