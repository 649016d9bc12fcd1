"""Crowdsourced trajectories: synthesis, CSV ingestion, flattening."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .geometry import polyline_arclength, resample_polyline
from .workzone import WorkZoneLayout

MAX_POINT_GAP = 5.0      # m, largest allowed spacing between consecutive points
NOMINAL_SPEED = 10.0     # m/s, used to timestamp synthetic points

CSV_HEADER = ["vehicle_id", "t", "x", "y"]


@dataclass
class Trajectory:
    """Ordered, timestamped 2-D positions from one vehicle pass."""

    points: np.ndarray = field(repr=False)  # (N, 3) columns t, x, y
    vehicle_id: str = "unknown"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        t = self.points[:, 0]
        if len(t) > 1:
            if not (np.diff(t) > 0).all():
                raise ValueError(f"{self.vehicle_id}: timestamps must be strictly increasing")
            gaps = np.hypot(np.diff(self.points[:, 1]), np.diff(self.points[:, 2]))
            if (gaps > MAX_POINT_GAP + 1e-9).any():
                raise ValueError(
                    f"{self.vehicle_id}: consecutive points exceed the {MAX_POINT_GAP} m gap limit"
                )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, 1:]


@dataclass
class PointSet:
    """Unordered 2-D observations pooled from many trajectories."""

    points: np.ndarray = field(repr=False)  # (N, 2)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.points.size and not np.isfinite(self.points).all():
            raise ValueError("points must be finite")

    def __len__(self) -> int:
        return len(self.points)


def synthesize(
    layout: WorkZoneLayout,
    n: int,
    lateral_sigma: float = 0.3,
    step: float = 2.0,
    seed: int = 0,
) -> list[Trajectory]:
    """Generate n passes along the open-corridor centerline.

    Each pass is the centerline sampled every `step` meters of arc length
    and perturbed along the local normal by Gaussian noise clipped at two
    sigma, which keeps every point inside the drivable corridor.
    Deterministic for a given seed.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if step <= 0:
        raise ValueError("step must be positive")
    if lateral_sigma < 0:
        raise ValueError("lateral_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    center_fine = layout.corridor_centerline(step=0.5)
    base = resample_polyline(center_fine, step)
    s = polyline_arclength(base)
    # unit normals from central-difference tangents
    tang = np.gradient(base, axis=0)
    tang /= np.hypot(tang[:, 0], tang[:, 1])[:, None]
    normal = np.column_stack([-tang[:, 1], tang[:, 0]])

    out = []
    for i in range(n):
        noise = rng.normal(0.0, lateral_sigma, size=len(base))
        noise = np.clip(noise, -2.0 * lateral_sigma, 2.0 * lateral_sigma)
        xy = base + noise[:, None] * normal
        t = s / NOMINAL_SPEED
        out.append(Trajectory(np.column_stack([t, xy]), vehicle_id=f"synth-{i:03d}"))
    return out


def save_csv(trajectories: list[Trajectory], path) -> None:
    """Write trajectories as `vehicle_id,t,x,y` rows sorted by (id, t)."""
    rows = []
    for traj in trajectories:
        for t, x, y in traj.points:
            rows.append((traj.vehicle_id, t, x, y))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for vid, t, x, y in rows:
            writer.writerow([vid, f"{t:.6f}", f"{x:.6f}", f"{y:.6f}"])


def load_csv(path) -> list[Trajectory]:
    """Read trajectories; rows grouped by vehicle_id, ordered by t."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        return []
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    start = 0
    if rows and [c.strip() for c in rows[0]] == CSV_HEADER:
        start = 1
    by_vehicle: dict[str, list[tuple[float, float, float]]] = {}
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
        vid = row[0].strip()
        try:
            t, x, y = float(row[1]), float(row[2]), float(row[3])
        except ValueError as exc:
            raise ParseError(f"non-numeric value in {row[1:]!r}", line=lineno) from exc
        by_vehicle.setdefault(vid, []).append((t, x, y))
    out = []
    for vid in sorted(by_vehicle):
        pts = sorted(by_vehicle[vid])
        out.append(Trajectory(np.array(pts), vehicle_id=vid))
    return out


def flatten(trajectories: list[Trajectory]) -> PointSet:
    """Pool all trajectory positions into one multiset of 2-D points."""
    if not trajectories:
        return PointSet(np.empty((0, 2)))
    return PointSet(np.vstack([traj.xy for traj in trajectories]))
