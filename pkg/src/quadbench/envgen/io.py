"""Point-cloud file I/O (ASCII PLY and whitespace XYZ) and cropping."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..world import Bounds, PointCloud

FORMATS = ("ply", "xyz")


def _guess_format(path: Path) -> str:
    suffix = path.suffix.lower().lstrip(".")
    if suffix in ("xyz", "txt", "pts"):
        return "xyz"
    if suffix == "ply":
        return "ply"
    with open(path, "r", errors="replace") as fh:
        return "ply" if fh.readline().strip() == "ply" else "xyz"


def _float(tok: str, line: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"non-numeric coordinate {tok!r}", line) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite coordinate {tok!r}", line)
    return v


def _parse_xyz(lines: list[str]) -> np.ndarray:
    pts = []
    for n, raw in enumerate(lines, start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        tok = s.replace(",", " ").split()
        if len(tok) < 3:
            raise ParseError(f"expected 3 coordinates, got {len(tok)}", n)
        pts.append([_float(t, n) for t in tok[:3]])
    return np.array(pts, dtype=np.float64).reshape(-1, 3)


def _parse_ply(lines: list[str]) -> np.ndarray:
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", 1)
    before_vertex = 0  # lines of elements declared before "vertex"
    element = None
    counts: dict[str, int] = {}
    order: list[str] = []
    props_of: dict[str, list[str]] = {}
    end = None
    for n, raw in enumerate(lines[1:], start=2):
        tok = raw.split()
        if not tok:
            continue
        key = tok[0]
        if key == "format":
            if len(tok) < 2 or tok[1] != "ascii":
                raise ParseError(f"unsupported PLY format {' '.join(tok[1:])!r}", n)
        elif key in ("comment", "obj_info"):
            continue
        elif key == "element":
            if len(tok) != 3:
                raise ParseError("malformed element line", n)
            element = tok[1]
            try:
                counts[element] = int(tok[2])
            except ValueError:
                raise ParseError(f"bad element count {tok[2]!r}", n) from None
            order.append(element)
            props_of[element] = []
        elif key == "property":
            if element is None or len(tok) < 3:
                raise ParseError("property outside an element", n)
            if tok[1] == "list":
                props_of[element].append("<list>")
            else:
                props_of[element].append(tok[-1])
        elif key == "end_header":
            end = n
            break
        else:
            raise ParseError(f"unknown header keyword {key!r}", n)
    if end is None:
        raise ParseError("missing end_header", len(lines))
    if "vertex" not in counts:
        raise ParseError("no vertex element", end)
    n_vertex = counts["vertex"]
    props = props_of["vertex"]
    if "<list>" in props:
        raise ParseError("list properties on vertices are not supported", end)
    try:
        cols = [props.index(a) for a in ("x", "y", "z")]
    except ValueError:
        raise ParseError("vertex element lacks x, y, z properties", end) from None
    for e in order:
        if e == "vertex":
            break
        before_vertex += counts[e]
    body = [(i, l) for i, l in enumerate(lines[end:], start=end + 1) if l.strip()]
    body = body[before_vertex:]
    if len(body) < n_vertex:
        last = body[-1][0] if body else end
        raise ParseError(f"truncated file: expected {n_vertex} vertices, found {len(body)}", last)
    pts = np.empty((n_vertex, 3))
    for r, (n, raw) in enumerate(body[:n_vertex]):
        tok = raw.split()
        if len(tok) < len(props):
            raise ParseError(f"expected {len(props)} values, got {len(tok)}", n)
        pts[r] = [_float(tok[c], n) for c in cols]
    return pts


def load_point_cloud(path, format: str | None = None) -> PointCloud:
    """Read vertex positions; other attributes (color, normals) are ignored."""
    path = Path(path)
    fmt = format or _guess_format(path)
    if fmt not in FORMATS:
        raise ValueError(f"unknown point-cloud format {fmt!r}")
    lines = path.read_text().splitlines()
    pts = _parse_ply(lines) if fmt == "ply" else _parse_xyz(lines)
    return PointCloud(pts)


def save_point_cloud(cloud: PointCloud, path, format: str | None = None):
    path = Path(path)
    fmt = format or ("ply" if path.suffix.lower() == ".ply" else "xyz")
    body = "\n".join(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in cloud.points)
    if fmt == "ply":
        header = (
            "ply\nformat ascii 1.0\n"
            f"element vertex {len(cloud)}\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
        )
        text = header + body
    else:
        text = body
    path.write_text(text + ("\n" if body else ""))


def crop(cloud: PointCloud, bounds: Bounds) -> PointCloud:
    """Points inside ``[min, max)``, translated so ``bounds.min`` is the origin."""
    if not len(cloud):
        return PointCloud.empty()
    keep = bounds.contains(cloud.points, half_open=True)
    return PointCloud(cloud.points[keep] - np.asarray(bounds.lo))
