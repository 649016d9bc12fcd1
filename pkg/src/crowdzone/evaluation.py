"""Scenario evaluation: pixel precision, clearance series, rule violations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyTraceError
from .geometry import points_in_polygon, points_to_polyline_distance
from .gridmap import OccupancyGrid
from .gridmap import precision as grid_precision
from .planner import ReferencePath
from .vehicle_sim import Trace
from .workzone import WorkZoneLayout


@dataclass
class ClearanceReport:
    """Minimum vehicle-edge clearances to the cone line and road boundary.

    Distances are taken from the nearest vehicle edge (perpendicular
    offset of half the width from the rear-axle center) to the
    channelizing cone line and to the road boundary polyline. Fluctuation
    is max - min of each series restricted to the activity-area span.
    """

    min_cone_distance: float | None
    min_boundary_distance: float | None
    cone_series: np.ndarray = field(repr=False)
    boundary_series: np.ndarray = field(repr=False)
    cone_fluctuation: float | None = None
    boundary_fluctuation: float | None = None


@dataclass
class EvaluationReport:
    precision: float
    clearance: ClearanceReport
    benchmark_violates: bool
    crowdsourced_violates: bool

    def __post_init__(self):
        if not 0.0 <= self.precision <= 1.0:
            raise ValueError("precision must lie in [0, 1]")


def _edge_points(trace: Trace, vehicle_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Left and right edge points for every trace entry."""
    states = np.array([(e.state.x, e.state.y, e.state.heading) for e in trace.entries])
    normal = np.column_stack([-np.sin(states[:, 2]), np.cos(states[:, 2])])
    half = vehicle_width / 2.0
    left = states[:, :2] + half * normal
    right = states[:, :2] - half * normal
    return left, right


def clearance(trace: Trace, layout: WorkZoneLayout, vehicle_width: float) -> ClearanceReport:
    """Per-timestep clearance of the vehicle edges to cones and boundary."""
    if len(trace.entries) == 0:
        raise EmptyTraceError("clearance of an empty trace")
    left, right = _edge_points(trace, vehicle_width)
    xs = np.array([e.state.x for e in trace.entries])

    cones = np.asarray(layout.cones, dtype=float)
    if cones.size == 0:
        cone_series = np.full(len(xs), np.inf)
        min_cone = None
    else:
        cone_series = np.minimum(
            points_to_polyline_distance(left, cones),
            points_to_polyline_distance(right, cones),
        )
        min_cone = float(cone_series.min())

    boundary = np.asarray(layout.road_boundary, dtype=float)
    boundary_series = np.minimum(
        points_to_polyline_distance(left, boundary),
        points_to_polyline_distance(right, boundary),
    )
    min_boundary = float(boundary_series.min())

    span = (xs >= layout.activity_area.xmin) & (xs <= layout.activity_area.xmax)
    cone_fluct = None
    boundary_fluct = None
    if span.any():
        if cones.size:
            cone_fluct = float(cone_series[span].max() - cone_series[span].min())
        boundary_fluct = float(boundary_series[span].max() - boundary_series[span].min())
    return ClearanceReport(
        min_cone_distance=min_cone,
        min_boundary_distance=min_boundary,
        cone_series=cone_series,
        boundary_series=boundary_series,
        cone_fluctuation=cone_fluct,
        boundary_fluctuation=boundary_fluct,
    )


def _positions(path_or_trace) -> np.ndarray:
    if isinstance(path_or_trace, Trace):
        return path_or_trace.xy()
    if isinstance(path_or_trace, ReferencePath):
        return path_or_trace.xy()
    return np.asarray(path_or_trace, dtype=float).reshape(-1, 2)


def rule_violation(path_or_trace, layout: WorkZoneLayout) -> bool:
    """True iff any pose lies inside the closed region of the work zone."""
    pts = _positions(path_or_trace)
    if len(pts) == 0:
        raise ValueError("rule_violation needs a non-empty path or trace")
    return bool(points_in_polygon(pts, layout.closed_polygon).any())


def evaluate_scenario(
    crowd_grid: OccupancyGrid,
    bench_grid: OccupancyGrid,
    truth_grid: OccupancyGrid,
    crowd_path: ReferencePath,
    bench_path: ReferencePath,
    trace: Trace,
    layout: WorkZoneLayout,
    vehicle_width: float,
) -> EvaluationReport:
    """Aggregate the three scenario evaluations into one report."""
    return EvaluationReport(
        precision=grid_precision(crowd_grid, truth_grid),
        clearance=clearance(trace, layout, vehicle_width),
        benchmark_violates=rule_violation(bench_path, layout),
        crowdsourced_violates=rule_violation(crowd_path, layout),
    )


def _none_if_inf(value):
    if value is None or not math.isfinite(value):
        return None
    return value


def report_to_json(report: EvaluationReport) -> dict:
    c = report.clearance
    return {
        "precision": report.precision,
        "benchmark_violates": report.benchmark_violates,
        "crowdsourced_violates": report.crowdsourced_violates,
        "clearance": {
            "min_cone_distance": _none_if_inf(c.min_cone_distance),
            "min_boundary_distance": _none_if_inf(c.min_boundary_distance),
            "cone_fluctuation": _none_if_inf(c.cone_fluctuation),
            "boundary_fluctuation": _none_if_inf(c.boundary_fluctuation),
        },
    }


def report_from_json(data: dict) -> EvaluationReport:
    c = data["clearance"]

    def back(v):
        return None if v is None else float(v)

    clearance_report = ClearanceReport(
        min_cone_distance=back(c["min_cone_distance"]),
        min_boundary_distance=back(c["min_boundary_distance"]),
        cone_series=np.array([]),
        boundary_series=np.array([]),
        cone_fluctuation=back(c["cone_fluctuation"]),
        boundary_fluctuation=back(c["boundary_fluctuation"]),
    )
    return EvaluationReport(
        precision=data["precision"],
        clearance=clearance_report,
        benchmark_violates=data["benchmark_violates"],
        crowdsourced_violates=data["crowdsourced_violates"],
    )


def save_report(report: EvaluationReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_json(report), fh, sort_keys=True, indent=1)
        fh.write("\n")


def save_clearance_csv(report: ClearanceReport, trace: Trace, path) -> None:
    """Per-timestep clearance series for external plotting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,cone_distance,boundary_distance\n")
        for entry, dc, db in zip(trace.entries, report.cone_series, report.boundary_series):
            fh.write(f"{entry.t:.6f},{dc:.6f},{db:.6f}\n")
