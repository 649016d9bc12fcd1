"""Reference-path tracking with a kinematic bicycle model.

Longitudinal control is a PID on speed whose integral covers only the ten
most recent errors; lateral control is pure pursuit toward a lookahead
point on the path. The rear-axle center is the vehicle reference point.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import EmptyPathError, ParseError
from .geometry import wrap_angle
from .planner import Pose, ReferencePath

PID_WINDOW = 10  # number of recent errors in the integral term


@dataclass
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 4.6391
    width: float = 1.85
    max_steer: float = math.radians(30.0)
    l_dmin: float = 3.0
    kp: float = 0.5
    ki: float = 0.018
    kd: float = 0.4
    v_ref: float = 10.0
    dt: float = 0.05
    a_max: float = 3.0   # throttle 1.0 acceleration, m/s^2
    b_max: float = 6.0   # brake 1.0 deceleration, m/s^2

    def __post_init__(self):
        if self.wheelbase <= 0 or self.dt <= 0 or self.l_dmin <= 0:
            raise ValueError("wheelbase, dt, and l_dmin must be positive")


@dataclass(frozen=True)
class ControlCommand:
    throttle: float
    brake: float
    steer: float

    def __post_init__(self):
        if not (0.0 <= self.throttle <= 1.0 and 0.0 <= self.brake <= 1.0):
            raise ValueError("throttle and brake must lie in [0, 1]")
        if self.throttle * self.brake != 0.0:
            raise ValueError("throttle and brake are mutually exclusive")


@dataclass
class TraceEntry:
    t: float
    state: VehicleState
    command: ControlCommand


@dataclass
class Trace:
    entries: list[TraceEntry]
    completed: bool

    def __len__(self) -> int:
        return len(self.entries)

    def xy(self) -> np.ndarray:
        return np.array([(e.state.x, e.state.y) for e in self.entries])


class PidSpeedController:
    """PID on speed error with a 10-sample integral window."""

    def __init__(self, kp: float, ki: float, kd: float):
        self.kp = kp
        self.ki = ki
        self.kd = kd
        self.errors: deque[float] = deque(maxlen=PID_WINDOW)

    def update(self, v_ref: float, v: float, dt: float) -> float:
        if dt <= 0:
            raise ValueError("dt must be positive")
        error = v_ref - v
        prev = self.errors[-1] if self.errors else 0.0
        self.errors.append(error)
        integral = self.ki * sum(self.errors) * dt
        derivative = self.kd * (error - prev) / dt
        return self.kp * error + integral + derivative


def pid_speed(history: PidSpeedController, v_ref: float, v: float, dt: float) -> float:
    """One PID update; positive output requests throttle, negative brake."""
    return history.update(v_ref, v, dt)


def longitudinal_command(u: float, steer: float) -> ControlCommand:
    """Map a signed PID output to mutually exclusive throttle/brake."""
    if u > 0:
        return ControlCommand(min(u, 1.0), 0.0, steer)
    if u < 0:
        return ControlCommand(0.0, min(-u, 1.0), steer)
    return ControlCommand(0.0, 0.0, steer)


def steer_from_alpha(alpha: float, l_d: float, wheelbase: float) -> float:
    """Pure-pursuit steering: atan(2 L sin(alpha) / l_d)."""
    return math.atan2(2.0 * wheelbase * math.sin(alpha), l_d)


def _lookahead_index(state: VehicleState, path: ReferencePath, l_dmin: float, start_index: int = 0):
    """(nearest index, lookahead index) with the nearest search monotone.

    The nearest-pose search never moves backward along the path, so the
    lookahead cannot snap back on self-approaching segments.
    """
    xy = path.xy()
    n = len(xy)
    i = min(start_index, n - 1)
    best = i
    best_d = (xy[i, 0] - state.x) ** 2 + (xy[i, 1] - state.y) ** 2
    j = i + 1
    while j < n:
        d = (xy[j, 0] - state.x) ** 2 + (xy[j, 1] - state.y) ** 2
        if d <= best_d:
            best_d = d
            best = j
        elif j - best > 8:
            break  # distances rising; nearest found
        j += 1
    # first pose at arc distance >= l_dmin beyond the nearest pose
    target = best
    acc = 0.0
    while target + 1 < n and acc < l_dmin:
        acc += math.hypot(xy[target + 1, 0] - xy[target, 0], xy[target + 1, 1] - xy[target, 1])
        target += 1
    return best, target


def pure_pursuit_steer(
    state: VehicleState,
    path: ReferencePath,
    l_dmin: float,
    wheelbase: float,
    max_steer: float = math.inf,
    start_index: int = 0,
) -> float:
    """Steering angle toward the lookahead point, clipped to +-max_steer.

    The lookahead is the first path pose at least l_dmin of arc beyond the
    pose nearest the vehicle; past the path end the last pose is used.
    """
    if len(path.poses) == 0:
        raise EmptyPathError("pure pursuit needs a non-empty path")
    _, target = _lookahead_index(state, path, l_dmin, start_index)
    tx, ty = path.poses[target].x, path.poses[target].y
    l_d = math.hypot(tx - state.x, ty - state.y)
    if l_d < 1e-9:
        return 0.0
    alpha = wrap_angle(math.atan2(ty - state.y, tx - state.x) - state.heading)
    delta = steer_from_alpha(alpha, l_d, wheelbase)
    return max(-max_steer, min(max_steer, delta))


def bicycle_step(state: VehicleState, cmd: ControlCommand, params: VehicleParams) -> VehicleState:
    """Kinematic bicycle update over one dt, rear axle as reference point."""
    dt = params.dt
    accel = cmd.throttle * params.a_max - cmd.brake * params.b_max
    x = state.x + state.speed * math.cos(state.heading) * dt
    y = state.y + state.speed * math.sin(state.heading) * dt
    heading = wrap_angle(state.heading + state.speed / params.wheelbase * math.tan(cmd.steer) * dt)
    speed = max(0.0, state.speed + accel * dt)
    return VehicleState(x, y, heading, speed)


def simulate(
    path: ReferencePath,
    start: VehicleState,
    params: VehicleParams,
    horizon: float,
) -> Trace:
    """Track the path at fixed dt until the horizon or the path end.

    Entry k holds the state at t = k*dt and the command applied from it.
    Terminates early once the rear axle is within 1 m of the final pose;
    running out the horizon is reported via the completed flag, not an
    error.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if len(path.poses) == 0:
        raise EmptyPathError("cannot track an empty path")
    pid = PidSpeedController(params.kp, params.ki, params.kd)
    end = path.poses[-1]
    state = start
    entries = []
    completed = False
    nearest = 0
    n_steps = math.ceil(horizon / params.dt - 1e-9)
    for k in range(n_steps + 1):
        t = k * params.dt
        nearest, _ = _lookahead_index(state, path, params.l_dmin, nearest)
        steer = pure_pursuit_steer(
            state, path, params.l_dmin, params.wheelbase, params.max_steer, nearest
        )
        u = pid.update(params.v_ref, state.speed, params.dt)
        cmd = longitudinal_command(u, steer)
        entries.append(TraceEntry(t, state, cmd))
        if math.hypot(end.x - state.x, end.y - state.y) <= 1.0:
            completed = True
            break
        if k == n_steps:
            break
        state = bicycle_step(state, cmd, params)
    return Trace(entries, completed)


def save_trace_csv(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "y", "heading", "speed", "throttle", "brake", "steer"])
        for e in trace.entries:
            writer.writerow(
                [
                    f"{e.t:.6f}",
                    f"{e.state.x:.6f}",
                    f"{e.state.y:.6f}",
                    f"{e.state.heading:.9f}",
                    f"{e.state.speed:.6f}",
                    f"{e.command.throttle:.6f}",
                    f"{e.command.brake:.6f}",
                    f"{e.command.steer:.9f}",
                ]
            )


def load_trace_csv(path) -> Trace:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 8:
            raise ParseError("expected 8 columns", line=lineno)
        try:
            t, x, y, heading, speed, throttle, brake, steer = map(float, row)
        except ValueError as exc:
            raise ParseError(f"non-numeric value {row!r}", line=lineno) from exc
        entries.append(
            TraceEntry(t, VehicleState(x, y, heading, speed), ControlCommand(throttle, brake, steer))
        )
    return Trace(entries, completed=True)
