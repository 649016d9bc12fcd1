"""Small planar-geometry helpers used across modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, TWO_PI)
    if wrapped <= 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned world rectangle, in meters."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("bounds must have positive extent")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by two corners."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, x, y) -> bool:
        return (self.xmin <= x <= self.xmax) & (self.ymin <= y <= self.ymax)

    def interior_contains(self, x, y) -> bool:
        return (self.xmin < x < self.xmax) & (self.ymin < y < self.ymax)


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd test for an array of points against a simple polygon.

    Vectorized crossing-number algorithm; points exactly on an edge are
    resolved by the half-open ray convention and should not be relied on.
    """
    pts = np.asarray(points, dtype=float)
    poly = np.asarray(polygon, dtype=float)
    px = pts[:, 0]
    py = pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    x1 = poly[:, 0]
    y1 = poly[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    for ex1, ey1, ex2, ey2 in zip(x1, y1, x2, y2):
        crosses = (ey1 > py) != (ey2 > py)
        if not crosses.any():
            continue
        xint = ex1 + (py - ey1) * (ex2 - ex1) / (ey2 - ey1)
        inside ^= crosses & (px < xint)
    return inside


def point_in_polygon(x: float, y: float, polygon: np.ndarray) -> bool:
    return bool(points_in_polygon(np.array([[x, y]]), polygon)[0])


def points_to_polyline_distance(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest point on an open polyline."""
    pts = np.asarray(points, dtype=float)
    line = np.asarray(polyline, dtype=float)
    if len(line) == 1:
        return np.hypot(pts[:, 0] - line[0, 0], pts[:, 1] - line[0, 1])
    a = line[:-1]
    b = line[1:]
    ab = b - a
    ab_len2 = np.einsum("ij,ij->i", ab, ab)
    ab_len2 = np.where(ab_len2 == 0.0, 1.0, ab_len2)
    # project every point on every segment, clamp to [0, 1]
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nsk,sk->ns", ap, ab) / ab_len2, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.hypot(pts[:, None, 0] - closest[:, :, 0], pts[:, None, 1] - closest[:, :, 1])
    return d.min(axis=1)


def polyline_arclength(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length of a polyline, starting at 0."""
    pts = np.asarray(points, dtype=float)
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample_polyline(points: np.ndarray, step: float) -> np.ndarray:
    """Points at uniform arc-length spacing along a polyline, endpoints kept."""
    pts = np.asarray(points, dtype=float)
    s = polyline_arclength(pts)
    total = s[-1]
    if total == 0.0:
        return pts[:1].copy()
    targets = np.arange(0.0, total, step)
    if total - targets[-1] > 1e-12:
        targets = np.concatenate([targets, [total]])
    else:
        targets[-1] = total
    x = np.interp(targets, s, pts[:, 0])
    y = np.interp(targets, s, pts[:, 1])
    return np.column_stack([x, y])


def spaced_points(p0, p1, max_spacing: float) -> np.ndarray:
    """Evenly spaced points covering segment p0-p1, both endpoints included.

    The count is the smallest that keeps consecutive points within
    max_spacing of each other.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = math.hypot(*(p1 - p0))
    n = max(1, math.ceil(length / max_spacing - 1e-12))
    t = np.linspace(0.0, 1.0, n + 1)
    return p0[None, :] + t[:, None] * (p1 - p0)[None, :]
