"""Hybrid A* path planning over an inflated occupancy grid.

States are continuous poses bucketed on (cell x, cell y, heading bin) for
the closed set. Expansion uses three forward motion primitives (left arc
at the minimum turning radius, straight, right arc) of arc length equal
to one grid diagonal, so every returned path respects the curvature bound
by construction. The heuristic is the pointwise max of the Euclidean
distance to the goal and an 8-connected obstacle-aware distance field.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .exceptions import (
    EmptyPathError,
    GoalOccupiedError,
    NoPathError,
    ParseError,
    StartOrGoalOccupiedError,
)
from .geometry import polyline_arclength, wrap_angle
from .gridmap import FREE, OccupancyGrid

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float  # radians in (-pi, pi]

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError("pose must be finite")
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass
class ReferencePath:
    poses: list[Pose]
    arc_step: float

    def __len__(self) -> int:
        return len(self.poses)

    def xy(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.poses])

    def length(self) -> float:
        return float(polyline_arclength(self.xy())[-1]) if len(self.poses) > 1 else 0.0


@dataclass(frozen=True)
class PlannerParams:
    r_min: float = 8.0
    heading_bins: int = 72
    steer_penalty: float = 0.1         # per meter of turning arc
    steer_change_penalty: float = 0.5  # per primitive switch
    goal_xy_tol: float = 0.5
    goal_heading_tol: float = math.radians(10.0)


def holonomic_heuristic(grid: OccupancyGrid, goal: Pose) -> np.ndarray:
    """Per-cell 8-connected obstacle-aware distance to the goal cell, meters.

    Unreachable and occupied cells are infinite. Diagonal steps cost
    sqrt(2) times the resolution.
    """
    gx, gy = grid.cell_index(goal.x, goal.y)
    if not grid.in_grid(gx, gy) or grid.cells[gy, gx] != FREE:
        raise GoalOccupiedError("heuristic goal cell is occupied or outside the grid")
    h, w = grid.cells.shape
    free = grid.free_mask()
    n = h * w
    rows, cols, costs = [], [], []
    offsets = [(1, 0, 1.0), (0, 1, 1.0), (1, 1, SQRT2), (1, -1, SQRT2)]
    for di, dj, c in offsets:
        src_i = slice(max(0, -di), h - max(0, di))
        src_j = slice(max(0, -dj), w - max(0, dj))
        dst_i = slice(max(0, di), h - max(0, -di))
        dst_j = slice(max(0, dj), w - max(0, -dj))
        ok = free[src_i, src_j] & free[dst_i, dst_j]
        ii, jj = np.nonzero(ok)
        a = (ii + src_i.start) * w + (jj + src_j.start)
        b = (ii + dst_i.start) * w + (jj + dst_j.start)
        rows.append(a)
        cols.append(b)
        costs.append(np.full(len(a), c * grid.resolution))
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    cost = np.concatenate(costs)
    graph = csr_matrix((cost, (row, col)), shape=(n, n))
    dist = _csgraph_dijkstra(graph, directed=False, indices=gy * w + gx)
    dist = dist.reshape(h, w)
    dist[~free] = np.inf
    return dist


def hybrid_astar(
    grid: OccupancyGrid,
    start: Pose,
    goal: Pose,
    r_min: float = 8.0,
    params: PlannerParams | None = None,
) -> ReferencePath:
    """Plan a curvature-bounded path from start to goal through free cells.

    Raises StartOrGoalOccupiedError if either endpoint cell is occupied and
    NoPathError when the search exhausts the open set.
    """
    if params is None:
        params = PlannerParams(r_min=r_min)
    r_min = params.r_min

    for name, pose in (("start", start), ("goal", goal)):
        ix, iy = grid.cell_index(pose.x, pose.y)
        if not grid.in_grid(ix, iy) or grid.cells[iy, ix] != FREE:
            raise StartOrGoalOccupiedError(f"{name} pose lies in an occupied or out-of-grid cell")

    hfield = holonomic_heuristic(grid, goal)
    six, siy = grid.cell_index(start.x, start.y)
    if not np.isfinite(hfield[siy, six]):
        raise NoPathError("goal unreachable from start on the grid")

    res = grid.resolution
    arc = SQRT2 * res
    dtheta = arc / r_min
    bin_width = 2.0 * math.pi / params.heading_bins
    # primitives: (heading change, steering-arc flag)
    primitives = ((dtheta, True), (0.0, False), (-dtheta, True))

    def heuristic(x, y, ix, iy):
        return max(math.hypot(goal.x - x, goal.y - y), hfield[iy, ix])

    def heading_bin(heading):
        return int((heading % (2.0 * math.pi)) / bin_width) % params.heading_bins

    # The closed-set key carries the last primitive: the steer-change
    # penalty makes cost-to-come depend on it, and with per-step heading
    # changes much smaller than a bin, straight chains would otherwise
    # prune every turning chain sharing their bucket.
    def bucket(x, y, heading, prim):
        ix = int((x - grid.origin[0]) / res)
        iy = int((y - grid.origin[1]) / res)
        return ix, iy, heading_bin(heading), prim

    # nodes: (x, y, heading, parent index, primitive id)
    nodes = [(start.x, start.y, start.heading, -1, 1)]
    g_best = {bucket(start.x, start.y, start.heading, 1): 0.0}
    h0 = heuristic(start.x, start.y, six, siy)
    counter = 0
    open_set = [(h0, h0, counter, 0, 0.0)]  # (f, h, tie, node index, g)

    goal_idx = None
    while open_set:
        _, _, _, node_idx, g = heapq.heappop(open_set)
        x, y, heading, _, prim = nodes[node_idx]
        key = bucket(x, y, heading, prim)
        if g > g_best.get(key, np.inf):
            continue
        if (
            math.hypot(goal.x - x, goal.y - y) <= params.goal_xy_tol
            and abs(wrap_angle(heading - goal.heading)) <= params.goal_heading_tol
        ):
            goal_idx = node_idx
            break
        for pid, (dth, steering) in enumerate(primitives):
            if dth == 0.0:
                nx = x + arc * math.cos(heading)
                ny = y + arc * math.sin(heading)
                nheading = heading
            else:
                # exact arc geometry at radius r_min
                nheading = wrap_angle(heading + dth)
                chord = 2.0 * r_min * math.sin(abs(dth) / 2.0)
                mid = heading + dth / 2.0
                nx = x + chord * math.cos(mid)
                ny = y + chord * math.sin(mid)
            ix = int((nx - grid.origin[0]) / res)
            iy = int((ny - grid.origin[1]) / res)
            if nx < grid.origin[0] or ny < grid.origin[1] or not grid.in_grid(ix, iy):
                continue
            if grid.cells[iy, ix] != FREE:
                continue
            hval = hfield[iy, ix]
            if not np.isfinite(hval):
                continue
            ng = g + arc
            if steering:
                ng += params.steer_penalty * arc
            if pid != prim:
                ng += params.steer_change_penalty
            nkey = (ix, iy, heading_bin(nheading), pid)
            if ng >= g_best.get(nkey, np.inf):
                continue
            g_best[nkey] = ng
            nodes.append((nx, ny, nheading, node_idx, pid))
            nh = max(math.hypot(goal.x - nx, goal.y - ny), hval)
            counter += 1
            heapq.heappush(open_set, (ng + nh, nh, counter, len(nodes) - 1, ng))

    if goal_idx is None:
        raise NoPathError("search exhausted the open set without reaching the goal")

    chain = []
    idx = goal_idx
    while idx >= 0:
        x, y, heading, parent, _ = nodes[idx]
        chain.append(Pose(x, y, heading))
        idx = parent
    chain.reverse()
    return ReferencePath(chain, arc_step=arc)


def resample(path: ReferencePath, step: float) -> ReferencePath:
    """Re-parameterize a path at uniform arc-length spacing.

    Positions interpolate linearly along the polyline and headings
    interpolate over the shortest angular difference; both endpoints are
    preserved.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if len(path.poses) == 0:
        raise EmptyPathError("cannot resample an empty path")
    if len(path.poses) == 1:
        return ReferencePath([path.poses[0]], arc_step=step)
    xy = path.xy()
    s = polyline_arclength(xy)
    total = s[-1]
    targets = np.arange(0.0, total, step)
    if total - targets[-1] > 1e-12:
        targets = np.concatenate([targets, [total]])
    else:
        targets[-1] = total
    xs = np.interp(targets, s, xy[:, 0])
    ys = np.interp(targets, s, xy[:, 1])
    headings = np.array([p.heading for p in path.poses])
    unwrapped = np.unwrap(headings)
    hs = np.interp(targets, s, unwrapped)
    poses = [Pose(x, y, wrap_angle(h)) for x, y, h in zip(xs, ys, hs)]
    return ReferencePath(poses, arc_step=step)


def save_path_csv(path: ReferencePath, file_path) -> None:
    xy = path.xy()
    s = polyline_arclength(xy) if len(path.poses) > 1 else np.zeros(len(path.poses))
    with open(file_path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "x", "y", "heading"])
        for si, pose in zip(s, path.poses):
            writer.writerow([f"{si:.6f}", f"{pose.x:.6f}", f"{pose.y:.6f}", f"{pose.heading:.9f}"])


def load_path_csv(file_path) -> ReferencePath:
    try:
        text = Path(file_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {file_path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows:
        raise ParseError(f"{file_path}: empty path file")
    poses = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError("expected 4 columns", line=lineno)
        try:
            _, x, y, heading = map(float, row)
        except ValueError as exc:
            raise ParseError(f"non-numeric value {row!r}", line=lineno) from exc
        poses.append(Pose(x, y, heading))
    if not poses:
        raise ParseError(f"{file_path}: no poses")
    xy = np.array([(p.x, p.y) for p in poses])
    step = float(np.median(np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1])))) if len(poses) > 1 else 1.0
    return ReferencePath(poses, arc_step=step)
