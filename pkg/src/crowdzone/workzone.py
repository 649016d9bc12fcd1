"""MUTCD-style lane-closure geometry.

Builds the taper/cone layout for a rightmost-lane closure and derives the
ground-truth drivable polygon. World frame: x runs along the travel
direction, y is lateral with y = 0 at the outer edge of the right shoulder.
All layout quantities are meters; the spec layer is the only place feet
and mph appear.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidSpecError
from .geometry import Bounds, Rect, spaced_points
from .gridmap import OccupancyGrid, grid_from_polygon

M_PER_FT = 0.3048

# Cone centers sit half a channelizer base inside the closed side of the
# channelizing line, so the base edge touches the line itself.
CONE_LINE_OFFSET = 0.2

DEFAULT_APPROACH_M = 60.0
DEFAULT_EXIT_M = 60.0


def ft_to_m(x: float) -> float:
    """Feet to meters, exactly x * 0.3048."""
    return x * M_PER_FT


@dataclass(frozen=True)
class WorkZoneSpec:
    """Parameter set describing a work zone, in customary US units."""

    speed_limit_mph: float = 60.0
    lane_width_ft: float = 12.0
    n_lanes: int = 3
    shoulder_width_ft: float = 8.0
    closed_lane_index: int = 0          # counted from the right
    cone_spacing_ft: float = 40.0
    activity_length_ft: float = 650.0
    activity_width_ft: float = 20.0     # closed lane + shoulder

    def __post_init__(self):
        if self.speed_limit_mph <= 0:
            raise InvalidSpecError("speed_limit_mph must be positive")
        if self.lane_width_ft <= 0:
            raise InvalidSpecError("lane_width_ft must be positive")
        if self.n_lanes < 2:
            raise InvalidSpecError("n_lanes must be at least 2")
        if self.shoulder_width_ft <= 0:
            raise InvalidSpecError("shoulder_width_ft must be positive")
        if not 0 <= self.closed_lane_index < self.n_lanes:
            raise InvalidSpecError("closed_lane_index out of range")
        if self.closed_lane_index != 0:
            raise InvalidSpecError("only rightmost-lane closures are supported")
        if self.cone_spacing_ft <= 0:
            raise InvalidSpecError("cone_spacing_ft must be positive")
        if self.activity_length_ft <= 0 or self.activity_width_ft <= 0:
            raise InvalidSpecError("activity area dimensions must be positive")
        if self.activity_width_ft > self.lane_width_ft + self.shoulder_width_ft + 1e-9:
            raise InvalidSpecError(
                "activity_width_ft exceeds the closed lane plus shoulder"
            )

    def taper_lengths_ft(self) -> tuple[float, float, float]:
        """(merging, shifting, shoulder) taper lengths in feet.

        Merging taper L = W * S for speeds of 45 mph and above, W * S^2 / 60
        below; shifting taper is L/2 exactly and the shoulder taper rounds
        L/3 to the nearest foot.
        """
        w = self.lane_width_ft
        s = self.speed_limit_mph
        merging = w * s if s >= 45.0 else w * s * s / 60.0
        shifting = merging / 2.0
        shoulder = round(merging / 3.0)
        return merging, shifting, shoulder


@dataclass
class WorkZoneLayout:
    """Derived metric geometry of the work zone."""

    spec: WorkZoneSpec
    merging_taper: float
    shifting_taper: float
    shoulder_taper: float
    activity_area: Rect
    cones: np.ndarray = field(repr=False)            # (N, 2) cone centers
    lane_boundaries: list = field(repr=False)        # polylines, incl. left road edge
    drivable_polygon: np.ndarray = field(repr=False)  # CCW vertex list
    closed_polygon: np.ndarray = field(repr=False)    # closed lane + tapers + activity
    road_boundary: np.ndarray = field(repr=False)     # right road edge polyline
    approach_length: float = DEFAULT_APPROACH_M
    exit_length: float = DEFAULT_EXIT_M

    # longitudinal stations, filled by build_layout
    x_shoulder_start: float = 0.0
    x_merge_start: float = 0.0
    x_activity_start: float = 0.0
    x_activity_end: float = 0.0
    x_shift_end: float = 0.0
    x_end: float = 0.0

    @property
    def shoulder_width(self) -> float:
        return ft_to_m(self.spec.shoulder_width_ft)

    @property
    def lane_width(self) -> float:
        return ft_to_m(self.spec.lane_width_ft)

    @property
    def road_top(self) -> float:
        return self.shoulder_width + self.spec.n_lanes * self.lane_width

    def bounds(self, lateral_margin: float = 2.0) -> Bounds:
        return Bounds(0.0, -lateral_margin, self.x_end, self.road_top + lateral_margin)

    def corridor_center_y(self, x) -> np.ndarray:
        """Lateral position of the open-lane centerline threading the zone.

        Traffic approaches in the closing rightmost lane, shifts to the
        center of the remaining open corridor across the merging taper
        (cosine ramp, C1 continuous), and shifts back across the
        downstream taper.
        """
        x = np.asarray(x, dtype=float)
        zone_bot = self.shoulder_width + self.lane_width
        y_approach = self.shoulder_width + self.lane_width / 2.0
        y_zone = (zone_bot + self.road_top) / 2.0
        shift = y_zone - y_approach

        def ramp(u):
            return (1.0 - np.cos(np.pi * np.clip(u, 0.0, 1.0))) / 2.0

        u_in = (x - self.x_merge_start) / self.merging_taper
        u_out = (x - self.x_activity_end) / self.shifting_taper
        return y_approach + shift * (ramp(u_in) - ramp(u_out))

    def corridor_centerline(self, step: float = 1.0) -> np.ndarray:
        """Polyline along the open-lane centerline over the full layout."""
        xs = np.arange(0.0, self.x_end, step)
        if self.x_end - xs[-1] > 1e-9:
            xs = np.concatenate([xs, [self.x_end]])
        return np.column_stack([xs, self.corridor_center_y(xs)])


def _cone_run(segments, spacing: float) -> np.ndarray:
    """Cones along consecutive segments, shared joints deduplicated."""
    pts = []
    for p0, p1 in segments:
        run = spaced_points(p0, p1, spacing)
        if pts and np.allclose(pts[-1], run[0]):
            run = run[1:]
        pts.extend(run)
    offset = np.array([0.0, -CONE_LINE_OFFSET])
    return np.asarray(pts) + offset


def build_layout(
    spec: WorkZoneSpec,
    approach: float = DEFAULT_APPROACH_M,
    exit_length: float = DEFAULT_EXIT_M,
) -> WorkZoneLayout:
    """Construct the full metric layout for a rightmost-lane closure.

    The channelizing line runs: shoulder taper (road edge up to the
    shoulder line), merging taper (across the closed lane), tangent along
    the activity area, then the downstream shifting taper back to the
    shoulder line. The drivable polygon is the open travel-lane corridor
    left of that line; the shoulder is never drivable.
    """
    merging_ft, shifting_ft, shoulder_ft = spec.taper_lengths_ft()
    merging = ft_to_m(merging_ft)
    shifting = ft_to_m(shifting_ft)
    shoulder_taper = ft_to_m(shoulder_ft)
    activity_len = ft_to_m(spec.activity_length_ft)
    activity_w = ft_to_m(spec.activity_width_ft)
    spacing = ft_to_m(spec.cone_spacing_ft)

    shoulder_w = ft_to_m(spec.shoulder_width_ft)
    lane_w = ft_to_m(spec.lane_width_ft)
    road_top = shoulder_w + spec.n_lanes * lane_w
    zone_bot = shoulder_w + lane_w

    x_sh0 = approach
    x_sh1 = x_sh0 + shoulder_taper
    x_mg1 = x_sh1 + merging
    x_act1 = x_mg1 + activity_len
    x_sf1 = x_act1 + shifting
    x_end = x_sf1 + exit_length

    cone_line = [
        ((x_sh0, 0.0), (x_sh1, shoulder_w)),
        ((x_sh1, shoulder_w), (x_mg1, zone_bot)),
        ((x_mg1, zone_bot), (x_act1, zone_bot)),
        ((x_act1, zone_bot), (x_sf1, shoulder_w)),
    ]
    cones = _cone_run(cone_line, spacing)

    drivable = np.array(
        [
            (0.0, shoulder_w),
            (x_sh1, shoulder_w),
            (x_mg1, zone_bot),
            (x_act1, zone_bot),
            (x_sf1, shoulder_w),
            (x_end, shoulder_w),
            (x_end, road_top),
            (0.0, road_top),
        ]
    )
    closed = np.array(
        [
            (x_sh0, 0.0),
            (x_sh1, shoulder_w),
            (x_mg1, zone_bot),
            (x_act1, zone_bot),
            (x_sf1, shoulder_w),
            (x_sf1, 0.0),
        ]
    )
    lane_boundaries = [
        np.array([(0.0, shoulder_w + i * lane_w), (x_end, shoulder_w + i * lane_w)])
        for i in range(spec.n_lanes + 1)
    ]
    road_boundary = np.array([(0.0, 0.0), (x_end, 0.0)])

    return WorkZoneLayout(
        spec=spec,
        merging_taper=merging,
        shifting_taper=shifting,
        shoulder_taper=shoulder_taper,
        activity_area=Rect(x_mg1, 0.0, x_act1, activity_w),
        cones=cones,
        lane_boundaries=lane_boundaries,
        drivable_polygon=drivable,
        closed_polygon=closed,
        road_boundary=road_boundary,
        approach_length=approach,
        exit_length=exit_length,
        x_shoulder_start=x_sh0,
        x_merge_start=x_sh1,
        x_activity_start=x_mg1,
        x_activity_end=x_act1,
        x_shift_end=x_sf1,
        x_end=x_end,
    )


def ground_truth_grid(layout: WorkZoneLayout, bounds: Bounds, resolution: float) -> OccupancyGrid:
    """Ground-truth drivable grid: a cell is free iff its center lies in the
    drivable polygon."""
    return grid_from_polygon(layout.drivable_polygon, bounds, resolution)


def layout_to_json(layout: WorkZoneLayout) -> dict:
    spec = layout.spec
    return {
        "spec": {
            "speed_limit_mph": spec.speed_limit_mph,
            "lane_width_ft": spec.lane_width_ft,
            "n_lanes": spec.n_lanes,
            "shoulder_width_ft": spec.shoulder_width_ft,
            "closed_lane_index": spec.closed_lane_index,
            "cone_spacing_ft": spec.cone_spacing_ft,
            "activity_length_ft": spec.activity_length_ft,
            "activity_width_ft": spec.activity_width_ft,
        },
        "approach_length": layout.approach_length,
        "exit_length": layout.exit_length,
        "merging_taper": layout.merging_taper,
        "shifting_taper": layout.shifting_taper,
        "shoulder_taper": layout.shoulder_taper,
        "activity_area": [
            layout.activity_area.xmin,
            layout.activity_area.ymin,
            layout.activity_area.xmax,
            layout.activity_area.ymax,
        ],
        "cones": layout.cones.tolist(),
        "lane_boundaries": [b.tolist() for b in layout.lane_boundaries],
        "drivable_polygon": layout.drivable_polygon.tolist(),
        "closed_polygon": layout.closed_polygon.tolist(),
        "road_boundary": layout.road_boundary.tolist(),
    }


def save_layout(layout: WorkZoneLayout, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(layout_to_json(layout), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_layout(path) -> WorkZoneLayout:
    """Rebuild a layout from its JSON export.

    Layout generation is deterministic, so the embedded spec reproduces
    every derived field bit-for-bit.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    spec = WorkZoneSpec(**data["spec"])
    return build_layout(spec, data["approach_length"], data["exit_length"])
