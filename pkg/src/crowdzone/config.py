"""Pipeline configuration: TOML file with a fully-populated default."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ConfigError
from .planner import PlannerParams
from .vehicle_sim import VehicleParams
from .workzone import WorkZoneSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# The default reproduces the case-study constants: 60 mph limit, 0.7 m
# inflation, 5000 gated samples, the PID gains, l_dmin = 3 m, wheelbase
# 4.6391 m, and 10 m/s reference speed. The sample footprint is the one
# deliberate departure: 5 in (0.127 m) stamps cannot produce a connected
# corridor after 0.7 m inflation at 0.1 m cells, so the default stamp is
# sized to stand in for the coarse plot rasterization; see README.
DEFAULT_CONFIG_TOML = """\
[workzone]
speed_limit_mph = 60.0
lane_width_ft = 12.0
n_lanes = 3
shoulder_width_ft = 8.0
closed_lane_index = 0
cone_spacing_ft = 40.0
activity_length_ft = 650.0
activity_width_ft = 20.0
approach_m = 60.0
exit_m = 60.0

[trajectory]
n = 5
lateral_sigma = 0.3
step = 2.0
seed = 7

[gmm]
k_min = 1
k_max = 15
tol = 1e-6
max_iter = 500
seed = 11
confidence = 0.95
n_samples = 5000

[grid]
resolution = 0.1
footprint_side = 1.6
inflation_radius = 0.7
cone_radius = 0.2
lateral_margin = 2.0

[planner]
r_min = 8.0
heading_bins = 72
steer_penalty = 0.1
steer_change_penalty = 0.5
goal_xy_tol = 0.5
goal_heading_tol_deg = 10.0
start_offset = 25.0
goal_offset = 25.0

[vehicle]
wheelbase = 4.6391
width = 1.85
max_steer_deg = 30.0
l_dmin = 3.0
kp = 0.5
ki = 0.018
kd = 0.4
v_ref = 10.0
dt = 0.05

[simulation]
horizon = 150.0

[output]
directory = "out"
"""


@dataclass
class TrajectoryConfig:
    n: int = 5
    lateral_sigma: float = 0.3
    step: float = 2.0
    seed: int = 7


@dataclass
class GmmConfig:
    k_min: int = 1
    k_max: int = 15
    tol: float = 1e-6
    max_iter: int = 500
    seed: int = 11
    confidence: float = 0.95
    n_samples: int = 5000


@dataclass
class GridConfig:
    resolution: float = 0.1
    footprint_side: float = 1.6
    inflation_radius: float = 0.7
    cone_radius: float = 0.2
    lateral_margin: float = 2.0


@dataclass
class PlanConfig:
    params: PlannerParams = field(default_factory=PlannerParams)
    start_offset: float = 25.0
    goal_offset: float = 25.0


@dataclass
class PipelineConfig:
    workzone: WorkZoneSpec = field(default_factory=WorkZoneSpec)
    approach_m: float = 60.0
    exit_m: float = 60.0
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    gmm: GmmConfig = field(default_factory=GmmConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    plan: PlanConfig = field(default_factory=PlanConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    horizon: float = 150.0
    out_dir: Path = Path("out")


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(value)


def parse_config(text: str) -> PipelineConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    try:
        wz = _section(data, "workzone")
        approach = float(wz.pop("approach_m", 60.0))
        exit_m = float(wz.pop("exit_m", 60.0))
        spec = WorkZoneSpec(**wz)

        traj = TrajectoryConfig(**_section(data, "trajectory"))
        gmm = GmmConfig(**_section(data, "gmm"))
        grid = GridConfig(**_section(data, "grid"))

        plan_raw = _section(data, "planner")
        start_offset = float(plan_raw.pop("start_offset", 25.0))
        goal_offset = float(plan_raw.pop("goal_offset", 25.0))
        if "goal_heading_tol_deg" in plan_raw:
            plan_raw["goal_heading_tol"] = math.radians(plan_raw.pop("goal_heading_tol_deg"))
        plan = PlanConfig(PlannerParams(**plan_raw), start_offset, goal_offset)

        veh_raw = _section(data, "vehicle")
        if "max_steer_deg" in veh_raw:
            veh_raw["max_steer"] = math.radians(veh_raw.pop("max_steer_deg"))
        vehicle = VehicleParams(**veh_raw)

        sim = _section(data, "simulation")
        horizon = float(sim.get("horizon", 150.0))
        out = _section(data, "output")
        out_dir = Path(out.get("directory", "out"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return PipelineConfig(
        workzone=spec,
        approach_m=approach,
        exit_m=exit_m,
        trajectory=traj,
        gmm=gmm,
        grid=grid,
        plan=plan,
        vehicle=vehicle,
        horizon=horizon,
        out_dir=out_dir,
    )


def load_config(path_or_default: str) -> PipelineConfig:
    """Load a TOML config; the literal string "default" uses the built-in."""
    if path_or_default == "default":
        return parse_config(DEFAULT_CONFIG_TOML)
    path = Path(path_or_default)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
