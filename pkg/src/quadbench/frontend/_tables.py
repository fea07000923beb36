"""
Neighbour tables for 26-connected search on a voxel grid.

A move by ``e`` (components in {-1, 0, 1}) is valid only if every cell of the
axis-aligned box spanned by the move is free, so a straight segment between the
two cell centers never grazes an occupied cell.

Jump-point pruning is derived mechanically: for a node ``x`` entered along ``d``
(parent ``p = x - d``), neighbour ``x + e`` is pruned when some path from ``p`` to
``x + e`` inside the 3x3x3 cube around ``x`` that avoids ``x`` is shorter than
``p -> x -> x + e``, or equally long and canonical (higher-order diagonal moves
taken first; ties between equal move orders prune only for straight ``d``). Each such
alternative path is stored as the bitmask of cells it needs free; a neighbour is
pruned at runtime if any of its masks is fully free.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

DIRS = np.array(
    [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)], dtype=np.int64
)
DIR_LEN = np.sqrt((DIRS**2).sum(axis=1))
CENTER_BIT = 13


def cube_bit(v) -> int:
    return (v[0] + 1) * 9 + (v[1] + 1) * 3 + (v[2] + 1)


def dir_index(d) -> int:
    return int(np.flatnonzero((DIRS == np.asarray(d)).all(axis=1))[0])


def _box_cells(a, b):
    ranges = [range(min(x, y), max(x, y) + 1) for x, y in zip(a, b)]
    return [c for c in itertools.product(*ranges)]


def _move_mask(origin, step) -> int:
    """Cells (cube-relative) needed free to move from ``origin`` by ``step``."""
    target = tuple(o + s for o, s in zip(origin, step))
    m = 0
    for c in _box_cells(origin, target):
        if c != tuple(origin):
            m |= 1 << cube_bit(c)
    return m


def _in_cube(c) -> bool:
    return all(-1 <= v <= 1 for v in c)


@lru_cache(maxsize=None)
def build_tables():
    """Return ``(move_mask, natural, alt_start, alt_masks)``.

    ``alt_masks[alt_start[d, e]:alt_start[d, e + 1]]`` (flattened over ``e``) are the
    alternative-path masks for entering along ``DIRS[d]`` and leaving along ``DIRS[e]``.
    """
    dirs = [tuple(int(v) for v in d) for d in DIRS]
    lengths = {d: math.sqrt(sum(v * v for v in d)) for d in dirs}
    move_mask = np.array([_move_mask((0, 0, 0), e) for e in dirs], dtype=np.int64)

    order = {d: sum(v != 0 for v in d) for d in dirs}

    # All simple walks of total length <= 2*sqrt(3) from each cube cell, avoiding the center.
    max_len = 2 * math.sqrt(3) + 1e-9
    walks: dict[tuple, list[tuple[float, tuple, int]]] = {}
    for start in dirs:
        stack = [(start, 0.0, (), 0, (start,))]
        while stack:
            cell, length, orders, mask, visited = stack.pop()
            if len(visited) > 1:
                walks.setdefault((start, cell), []).append((length, orders, mask))
            for s in dirs:
                nxt = tuple(c + v for c, v in zip(cell, s))
                if not _in_cube(nxt) or nxt == (0, 0, 0) or nxt in visited:
                    continue
                nl = length + lengths[s]
                if nl > max_len:
                    continue
                stack.append(
                    (nxt, nl, orders + (order[s],), mask | _move_mask(cell, s), visited + (nxt,))
                )

    n = len(dirs)
    natural = np.zeros((n, n), dtype=np.bool_)
    alt_start = np.zeros(n * n + 1, dtype=np.int64)
    flat: list[int] = []
    for di, d in enumerate(dirs):
        parent = tuple(-v for v in d)
        diagonal = order[d] > 1
        for ei, e in enumerate(dirs):
            via = lengths[d] + lengths[e]
            via_orders = (order[d], order[e])
            # Turning straight back to the parent is always pruned.
            masks = {0} if e == parent else set()
            for length, orders, mask in walks.get((parent, e), []):
                if length < via - 1e-9:
                    masks.add(mask)
                elif length <= via + 1e-9:
                    # Equal cost: the canonical path takes higher-order moves first.
                    if orders > via_orders or (orders == via_orders and not diagonal):
                        masks.add(mask)
            # Keep only minimal masks: a superset is free only if its subset is.
            minimal = [m for m in masks if not any(o != m and (o & m) == o for o in masks)]
            minimal.sort()
            natural[di, ei] = not minimal
            alt_start[di * n + ei] = len(flat)
            flat.extend(minimal)
    alt_start[n * n] = len(flat)
    return move_mask, natural, alt_start, np.array(flat, dtype=np.int64)
