"""Surface point samplers for the primitive obstacle shapes."""

from __future__ import annotations

import math

import numpy as np


def _lin(a: float, b: float, spacing: float) -> np.ndarray:
    n = max(1, math.ceil((b - a) / spacing))
    return np.linspace(a, b, n + 1)


def box_surface(lo, hi, spacing: float) -> np.ndarray:
    """Grid samples on the six faces of an axis-aligned box."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    axes = [_lin(lo[k], hi[k], spacing) for k in range(3)]
    faces = []
    for k in range(3):
        u, v = [axes[j] for j in range(3) if j != k]
        uu, vv = np.meshgrid(u, v, indexing="ij")
        for side in (lo[k], hi[k]):
            f = np.empty((uu.size, 3))
            f[:, k] = side
            f[:, [j for j in range(3) if j != k]] = np.stack([uu.ravel(), vv.ravel()], axis=1)
            faces.append(f)
    # Edge points repeat across faces; duplicates are harmless for binning.
    return np.vstack(faces)


def box_solid(lo, hi, spacing: float) -> np.ndarray:
    axes = [_lin(a, b, spacing) for a, b in zip(lo, hi)]
    g = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in g], axis=1)


def rot_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def cylinder_surface(radius: float, height: float, spacing: float, cap: bool) -> np.ndarray:
    """Lateral surface (plus optional top cap) of a vertical cylinder with its
    axis on the z-axis and base at z = 0."""
    n_t = max(8, math.ceil(2 * math.pi * radius / spacing))
    th = np.arange(n_t) * (2 * math.pi / n_t)
    z = _lin(0.0, height, spacing)
    tt, zz = np.meshgrid(th, z, indexing="ij")
    pts = [np.stack([radius * np.cos(tt.ravel()), radius * np.sin(tt.ravel()), zz.ravel()], axis=1)]
    if cap:
        pts.append(disk(radius, spacing, height))
    return np.vstack(pts)


def disk(radius: float, spacing: float, z: float) -> np.ndarray:
    pts = [np.array([[0.0, 0.0, z]])]
    for r in np.arange(spacing, radius, spacing):
        n = max(6, math.ceil(2 * math.pi * r / spacing))
        th = np.arange(n) * (2 * math.pi / n)
        pts.append(np.stack([r * np.cos(th), r * np.sin(th), np.full(n, z)], axis=1))
    return np.vstack(pts)


def _ellipsoid_area(a: float, b: float, c: float) -> float:
    p = 1.6075
    return 4 * math.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3) ** (1 / p)


def ellipsoid_surface(axes, spacing: float) -> np.ndarray:
    """Fibonacci-lattice samples mapped onto an axis-aligned ellipsoid at the origin.
    Oversampled 2x by area so the stretched lattice stays denser than ``spacing``."""
    a, b, c = (float(v) for v in axes)
    n = max(32, math.ceil(2.0 * _ellipsoid_area(a, b, c) / spacing**2))
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = i * math.pi * (3 - math.sqrt(5))
    return np.stack([a * r * np.cos(phi), b * r * np.sin(phi), c * z], axis=1)


def torus_surface(major: float, minor: float, spacing: float) -> np.ndarray:
    """Torus standing in the x-z plane (ring axis along y), centered at the origin."""
    n_u = max(12, math.ceil(2 * math.pi * (major + minor) / spacing))
    n_v = max(8, math.ceil(2 * math.pi * minor / spacing))
    u = np.arange(n_u) * (2 * math.pi / n_u)
    v = np.arange(n_v) * (2 * math.pi / n_v)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major + minor * np.cos(vv)
    x = ring * np.cos(uu)
    z = ring * np.sin(uu)
    y = minor * np.sin(vv)
    return np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
