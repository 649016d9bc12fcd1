"""Binary occupancy grids: rasterization, inflation, precision, PGM I/O.

Convention: cell value 1 = occupied, 0 = free. Cells are stored row-major
in an array of shape (height, width); cell (ix, iy) covers the half-open
world square [origin + i*res, origin + (i+1)*res).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from .exceptions import GridMismatchError, NoFreeCellsError, ParseError
from .geometry import Bounds, points_in_polygon

if TYPE_CHECKING:
    from .workzone import WorkZoneLayout

OCCUPIED = 1
FREE = 0

# 5 in expressed in meters; the stamp size quoted for sample plots.
FIVE_INCH_M = 0.127

# slack for "distance <= radius" comparisons at cell granularity
_EDGE_EPS = 1e-9


@dataclass
class OccupancyGrid:
    origin: np.ndarray          # world coordinates of the corner of cell (0, 0)
    resolution: float           # meters per cell
    cells: np.ndarray = field(repr=False)  # (height, width) uint8, 1 = occupied

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.cells.ndim != 2:
            raise ValueError("cells must be a 2-D array")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @classmethod
    def filled(cls, bounds: Bounds, resolution: float, value: int) -> "OccupancyGrid":
        width = max(1, math.ceil(bounds.width / resolution - 1e-9))
        height = max(1, math.ceil(bounds.height / resolution - 1e-9))
        cells = np.full((height, width), value, dtype=np.uint8)
        return cls(np.array([bounds.xmin, bounds.ymin]), resolution, cells)

    def cell_centers(self):
        """Meshgrid arrays (x, y) of all cell centers, shape (height, width)."""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        ix = int(math.floor((x - self.origin[0]) / self.resolution))
        iy = int(math.floor((y - self.origin[1]) / self.resolution))
        return ix, iy

    def in_grid(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_free_at(self, x: float, y: float) -> bool:
        ix, iy = self.cell_index(x, y)
        return self.in_grid(ix, iy) and self.cells[iy, ix] == FREE

    def free_mask(self) -> np.ndarray:
        return self.cells == FREE

    def same_frame(self, other: "OccupancyGrid") -> bool:
        return (
            np.array_equal(self.origin, other.origin)
            and self.resolution == other.resolution
            and self.cells.shape == other.cells.shape
        )

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.origin.copy(), self.resolution, self.cells.copy())


def from_samples(samples, footprint_side: float, bounds: Bounds, resolution: float) -> OccupancyGrid:
    """Inverse occupancy grid: cells touched by sample footprints are free.

    A cell is free iff it intersects at least one axis-aligned square of
    side footprint_side centered on a sample point; every other cell is
    occupied. A zero footprint frees only the containing cell.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if footprint_side < 0:
        raise ValueError("footprint_side must be non-negative")
    grid = OccupancyGrid.filled(bounds, resolution, OCCUPIED)
    pts = np.asarray(getattr(samples, "points", samples), dtype=float)
    if pts.size == 0:
        return grid
    half = footprint_side / 2.0
    lo_x = np.floor((pts[:, 0] - half - grid.origin[0]) / resolution).astype(int)
    hi_x = np.floor((pts[:, 0] + half - grid.origin[0]) / resolution).astype(int)
    lo_y = np.floor((pts[:, 1] - half - grid.origin[1]) / resolution).astype(int)
    hi_y = np.floor((pts[:, 1] + half - grid.origin[1]) / resolution).astype(int)
    lo_x = np.clip(lo_x, 0, grid.width - 1)
    hi_x = np.clip(hi_x, 0, grid.width - 1)
    lo_y = np.clip(lo_y, 0, grid.height - 1)
    hi_y = np.clip(hi_y, 0, grid.height - 1)
    keep = (pts[:, 0] + half >= grid.origin[0]) & (pts[:, 1] + half >= grid.origin[1])
    keep &= pts[:, 0] - half < grid.origin[0] + grid.width * resolution
    keep &= pts[:, 1] - half < grid.origin[1] + grid.height * resolution
    for x0, x1, y0, y1 in zip(lo_x[keep], hi_x[keep], lo_y[keep], hi_y[keep]):
        grid.cells[y0 : y1 + 1, x0 : x1 + 1] = FREE
    return grid


def from_obstacles(layout: "WorkZoneLayout", cone_radius: float, bounds: Bounds, resolution: float) -> OccupancyGrid:
    """Perception-style benchmark grid: cones and the road boundary only.

    Cells whose center lies within cone_radius of a cone, or that the road
    boundary polyline passes through, are occupied; everything else is free.
    No lane semantics are encoded.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    grid = OccupancyGrid.filled(bounds, resolution, FREE)
    cones = np.asarray(layout.cones, dtype=float)
    if cones.size:
        cx, cy = grid.cell_centers()
        occupied = np.zeros(grid.cells.shape, dtype=bool)
        for x, y in cones:
            occupied |= (cx - x) ** 2 + (cy - y) ** 2 <= (cone_radius + _EDGE_EPS) ** 2
        grid.cells[occupied] = OCCUPIED
    boundary = np.asarray(layout.road_boundary, dtype=float)
    if boundary.size:
        # dense sampling of the polyline marks every cell it passes through
        for a, b in zip(boundary[:-1], boundary[1:]):
            length = math.hypot(b[0] - a[0], b[1] - a[1])
            n = max(2, int(length / (resolution / 4.0)) + 1)
            t = np.linspace(0.0, 1.0, n)
            xs = a[0] + t * (b[0] - a[0])
            ys = a[1] + t * (b[1] - a[1])
            ix = np.floor((xs - grid.origin[0]) / resolution).astype(int)
            iy = np.floor((ys - grid.origin[1]) / resolution).astype(int)
            ok = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
            grid.cells[iy[ok], ix[ok]] = OCCUPIED
    return grid


def inflate(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    """Grow the occupied set by a Euclidean radius measured center-to-center."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    out = grid.copy()
    if radius == 0.0 or not (grid.cells == OCCUPIED).any():
        return out
    # distance (in cells) from each cell center to the nearest occupied center
    dist = ndimage.distance_transform_edt(grid.cells == FREE)
    out.cells = np.where(dist <= radius / grid.resolution + _EDGE_EPS, OCCUPIED, FREE).astype(np.uint8)
    return out


def precision(predicted: OccupancyGrid, truth: OccupancyGrid) -> float:
    """Fraction of predicted-free cells that are truly free (TP / (TP + FP))."""
    if not predicted.same_frame(truth):
        raise GridMismatchError("grids differ in origin, resolution, or shape")
    pred_free = predicted.free_mask()
    n_pred = int(pred_free.sum())
    if n_pred == 0:
        raise NoFreeCellsError("predicted grid has no free cells")
    tp = int((pred_free & truth.free_mask()).sum())
    return tp / n_pred


def save_pgm(grid: OccupancyGrid, path) -> None:
    """Write a P2 ASCII PGM (occupied=0, free=255) plus a JSON sidecar."""
    path = Path(path)
    values = np.where(grid.cells == OCCUPIED, 0, 255)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{grid.width} {grid.height}\n255\n")
        for row in values:
            fh.write(" ".join(map(str, row)))
            fh.write("\n")
    meta = {
        "origin": [grid.origin[0], grid.origin[1]],
        "resolution": grid.resolution,
        "width": grid.width,
        "height": grid.height,
    }
    with open(path.with_suffix(path.suffix + ".json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def load_pgm(path) -> OccupancyGrid:
    path = Path(path)
    try:
        tokens = path.read_text(encoding="ascii").split()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not tokens or tokens[0] != "P2":
        raise ParseError(f"{path}: not a P2 PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        data = np.array(tokens[4:], dtype=int)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed PGM header or data") from exc
    if maxval != 255 or data.size != width * height:
        raise ParseError(f"{path}: expected {width * height} pixels, got {data.size}")
    sidecar = path.with_suffix(path.suffix + ".json")
    try:
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"missing sidecar {sidecar}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{sidecar}: invalid JSON") from exc
    cells = np.where(data.reshape(height, width) == 0, OCCUPIED, FREE).astype(np.uint8)
    return OccupancyGrid(np.array(meta["origin"], dtype=float), float(meta["resolution"]), cells)


def grid_from_polygon(polygon: np.ndarray, bounds: Bounds, resolution: float) -> OccupancyGrid:
    """Grid whose free cells are those with centers inside the polygon."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    grid = OccupancyGrid.filled(bounds, resolution, OCCUPIED)
    cx, cy = grid.cell_centers()
    centers = np.column_stack([cx.ravel(), cy.ravel()])
    inside = points_in_polygon(centers, polygon).reshape(grid.cells.shape)
    grid.cells[inside] = FREE
    return grid
