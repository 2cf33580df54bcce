"""Exact distance and membership predicates for inclusion shapes.

Discs and capsules are both "thickened segments" (a disc is a capsule with equal
endpoints), so every disc/capsule pair reduces to a segment-segment distance.
Cell clusters are unions of closed unit boxes ``[c, c+1]^d``.
"""

from itertools import product

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from src.models import Capsule, CellCluster, Disc, Inclusion
from .exceptions import UnsupportedShapePairError

TANGENT_TOL = 1e-12


def _segment(shape: Disc | Capsule) -> tuple[np.ndarray, np.ndarray, float]:
    if isinstance(shape, Disc):
        c = np.asarray(shape.center, dtype=float)
        return c, c, shape.radius
    return np.asarray(shape.start, dtype=float), np.asarray(shape.end, dtype=float), shape.width


def anchor(shape: Inclusion) -> np.ndarray:
    """A reference point of the shape, used to pick the nearest periodic image."""
    if isinstance(shape, CellCluster):
        return np.asarray(shape.cells[0], dtype=float) + 0.5
    start, end, _ = _segment(shape)
    return 0.5 * (start + end)


def bounds(shape: Inclusion) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box ``(lo, hi)`` in unwrapped coordinates."""
    if isinstance(shape, CellCluster):
        cells = np.asarray(shape.cells, dtype=float)
        return cells.min(axis=0), cells.max(axis=0) + 1.0
    start, end, radius = _segment(shape)
    return np.minimum(start, end) - radius, np.maximum(start, end) + radius


def diameter(shape: Inclusion) -> float:
    if isinstance(shape, Disc):
        return 2.0 * shape.radius
    if isinstance(shape, Capsule):
        start, end, width = _segment(shape)
        return float(np.linalg.norm(end - start)) + 2.0 * width
    cells = np.asarray(shape.cells, dtype=float)
    dim = cells.shape[1]
    if dim == 1:
        return float(cells.max() + 1.0 - cells.min())
    corners = np.unique(
        (cells[:, None, :] + np.array(list(product((0.0, 1.0), repeat=dim)))[None]).reshape(-1, dim),
        axis=0,
    )
    hull = ConvexHull(corners)
    return float(pdist(corners[hull.vertices]).max())


def segment_distance(p0, p1, q0, q1) -> float:
    """Euclidean distance between the closed segments ``[p0, p1]`` and ``[q0, q1]``."""
    d1, d2, r = p1 - p0, q1 - q0, p0 - q0
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    eps = 1e-300
    if a <= eps and e <= eps:
        return float(np.linalg.norm(r))
    if a <= eps:
        s, t = 0.0, float(np.clip(f / e, 0.0, 1.0))
    else:
        c = d1 @ r
        if e <= eps:
            s, t = float(np.clip(-c / a, 0.0, 1.0)), 0.0
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = float(np.clip((b * f - c * e) / denom, 0.0, 1.0)) if denom > 1e-14 * a * e else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                s, t = float(np.clip(-c / a, 0.0, 1.0)), 0.0
            elif t > 1.0:
                s, t = float(np.clip((b - c) / a, 0.0, 1.0)), 1.0
    return float(np.linalg.norm(p0 + d1 * s - (q0 + d2 * t)))


def point_segment_distance(points: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Distances from ``points`` (shape ``(..., d)``) to the segment ``[start, end]``."""
    direction = end - start
    length2 = direction @ direction
    rel = points - start
    if length2 == 0.0:
        return np.linalg.norm(rel, axis=-1)
    t = np.clip(rel @ direction / length2, 0.0, 1.0)
    return np.linalg.norm(rel - t[..., None] * direction, axis=-1)


def _box_gap(cells_a: np.ndarray, cells_b: np.ndarray) -> float:
    diff = np.abs(cells_a[:, None, :] - cells_b[None, :, :])
    if np.all(diff < 1.0, axis=-1).any():
        return -1.0
    per_axis = np.clip(diff - 1.0, 0.0, None)
    return float(np.sqrt((per_axis**2).sum(axis=-1)).min())


def _point_box_gap(point: np.ndarray, cells: np.ndarray) -> float:
    per_axis = np.maximum(np.maximum(cells - point, point - cells - 1.0), 0.0)
    return float(np.sqrt((per_axis**2).sum(axis=-1)).min())


def raw_gap(first: Inclusion, second: Inclusion, shift: np.ndarray) -> float:
    """Gap between ``first`` and ``second`` translated by ``shift``; negative means overlap."""
    first_cluster = isinstance(first, CellCluster)
    second_cluster = isinstance(second, CellCluster)
    if first_cluster and second_cluster:
        return _box_gap(np.asarray(first.cells, float), np.asarray(second.cells, float) + shift)
    if first_cluster or second_cluster:
        cluster, disc = (first, second) if first_cluster else (second, first)
        if not isinstance(disc, Disc):
            raise UnsupportedShapePairError("cluster", disc.type)
        cells = np.asarray(cluster.cells, float)
        center = np.asarray(disc.center, float)
        if first_cluster:
            center = center + shift
        else:
            cells = cells + shift
        return _point_box_gap(center, cells) - disc.radius
    p0, p1, r1 = _segment(first)
    q0, q1, r2 = _segment(second)
    return segment_distance(p0, p1, q0 + shift, q1 + shift) - r1 - r2


def gap(first: Inclusion, second: Inclusion, period: float, periodic: bool, same: bool = False) -> float:
    """Distance between two inclusions in the torus (or box) metric.

    With ``same=True`` the distance between ``first`` and its own nontrivial
    periodic images is returned (``inf`` in a box).
    """
    dim = len(anchor(first))
    if not periodic:
        return np.inf if same else raw_gap(first, second, np.zeros(dim))
    base = np.zeros(dim)
    if not same:
        delta = anchor(second) - anchor(first)
        base = -period * np.round(delta / period)
    best = np.inf
    for k in product((-1, 0, 1), repeat=dim):
        if same and not any(k):
            continue
        best = min(best, raw_gap(first, second, base + period * np.asarray(k, dtype=float)))
    return best


def contains(shape: Inclusion, points: np.ndarray) -> np.ndarray:
    """Membership of ``points`` (shape ``(..., d)``, unwrapped) in the open shape."""
    if isinstance(shape, CellCluster):
        cells = np.asarray(shape.cells, dtype=np.int64)
        lo = cells.min(axis=0)
        width = cells.max(axis=0) - lo + 1
        floors = np.floor(points).astype(np.int64) - lo
        inside_box = np.all((floors >= 0) & (floors < width), axis=-1)
        strides = np.cumprod(np.concatenate([[1], width[:-1]]))
        keys = (np.clip(floors, 0, width - 1) * strides).sum(axis=-1)
        cell_keys = ((cells - lo) * strides).sum(axis=-1)
        return inside_box & np.isin(keys, cell_keys)
    start, end, radius = _segment(shape)
    return point_segment_distance(points, start, end) < radius


def translate(shape: Inclusion, offset: np.ndarray, new_id: int) -> Inclusion:
    """Copy of ``shape`` moved by ``offset`` (integral for clusters)."""
    if isinstance(shape, Disc):
        return Disc(id=new_id, center=(np.asarray(shape.center) + offset).tolist(), radius=shape.radius)
    if isinstance(shape, Capsule):
        return Capsule(
            id=new_id,
            start=(np.asarray(shape.start) + offset).tolist(),
            end=(np.asarray(shape.end) + offset).tolist(),
            width=shape.width,
        )
    step = np.rint(offset).astype(int)
    return CellCluster(id=new_id, cells=(np.asarray(shape.cells) + step).tolist())
