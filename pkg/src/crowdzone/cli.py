"""Command-line pipeline: each stage reads and writes file artifacts."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, gmm, gridmap, planner, trajectory, vehicle_sim, workzone
from .config import PipelineConfig, load_config
from .exceptions import ConfigError, CrowdzoneError, MissingArtifactError
from .geometry import polyline_arclength
from .planner import Pose
from .trajectory import PointSet
from .vehicle_sim import VehicleState

STAGES = (
    "gen-workzone",
    "synth-traj",
    "fit-gmm",
    "sample",
    "build-map",
    "build-benchmark-map",
    "plan",
    "simulate",
    "evaluate",
)

ARTIFACTS = {
    "layout": "layout.json",
    "trajectories": "trajectories.csv",
    "mixture": "mixture.json",
    "fit_report": "fit_report.json",
    "samples": "samples.csv",
    "crowd_map": "crowd_map.pgm",
    "crowd_map_inflated": "crowd_map_inflated.pgm",
    "truth_map": "truth_map.pgm",
    "bench_map": "bench_map.pgm",
    "bench_map_inflated": "bench_map_inflated.pgm",
    "path_crowd": "path_crowd.csv",
    "path_bench": "path_bench.csv",
    "trace": "trace.csv",
    "report": "report.json",
    "clearance": "clearance.csv",
}


class Runner:
    def __init__(self, config: PipelineConfig, out_dir: Path, quiet: bool = False):
        self.config = config
        self.out = Path(out_dir)
        self.quiet = quiet
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out / ARTIFACTS[name]

    def require(self, name: str, producer: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise MissingArtifactError(p, hint=f"run {producer} first")
        return p

    def say(self, message: str) -> None:
        if not self.quiet:
            print(message)

    # -- stages ---------------------------------------------------------

    def gen_workzone(self):
        cfg = self.config
        layout = workzone.build_layout(cfg.workzone, cfg.approach_m, cfg.exit_m)
        workzone.save_layout(layout, self.path("layout"))
        self.say(
            f"gen-workzone: tapers {layout.merging_taper:.3f}/{layout.shifting_taper:.3f}/"
            f"{layout.shoulder_taper:.3f} m, {len(layout.cones)} cones -> {self.path('layout')}"
        )

    def _layout(self):
        return workzone.load_layout(self.require("layout", "gen-workzone"))

    def synth_traj(self):
        cfg = self.config.trajectory
        layout = self._layout()
        trajs = trajectory.synthesize(layout, cfg.n, cfg.lateral_sigma, cfg.step, cfg.seed)
        trajectory.save_csv(trajs, self.path("trajectories"))
        n_pts = sum(len(t) for t in trajs)
        self.say(f"synth-traj: {len(trajs)} trajectories, {n_pts} points -> {self.path('trajectories')}")

    def fit_gmm(self):
        cfg = self.config.gmm
        trajs = trajectory.load_csv(self.require("trajectories", "synth-traj"))
        data = trajectory.flatten(trajs)
        k_best, mixture, table = gmm.select_k(
            data, cfg.k_min, cfg.k_max, seed=cfg.seed, tol=cfg.tol, max_iter=cfg.max_iter
        )
        _, report = gmm.em_fit(data, k_best, seed=cfg.seed, tol=cfg.tol, max_iter=cfg.max_iter)
        gmm.save_mixture(mixture, self.path("mixture"))
        payload = gmm.report_to_json(report)
        payload["k_best"] = k_best
        payload["table"] = [{"k": k, "aic": a, "bic": b} for k, a, b in table]
        with open(self.path("fit_report"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
        self.say(f"fit-gmm: K={k_best} (BIC), {len(data)} points -> {self.path('mixture')}")

    def sample(self):
        cfg = self.config.gmm
        mixture = gmm.load_mixture(self.require("mixture", "fit-gmm"))
        pts = gmm.sample_gated(mixture, cfg.n_samples, cfg.confidence, seed=cfg.seed)
        with open(self.path("samples"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x,y\n")
            for x, y in pts.points:
                fh.write(f"{x:.6f},{y:.6f}\n")
        self.say(
            f"sample: {len(pts)} gated draws at {cfg.confidence:.0%} confidence -> {self.path('samples')}"
        )

    def _samples(self) -> PointSet:
        raw = np.loadtxt(self.require("samples", "sample"), delimiter=",", skiprows=1)
        return PointSet(raw)

    def _bounds(self, layout):
        return layout.bounds(self.config.grid.lateral_margin)

    def build_map(self):
        cfg = self.config.grid
        layout = self._layout()
        bounds = self._bounds(layout)
        crowd = gridmap.from_samples(self._samples(), cfg.footprint_side, bounds, cfg.resolution)
        inflated = gridmap.inflate(crowd, cfg.inflation_radius)
        truth = workzone.ground_truth_grid(layout, bounds, cfg.resolution)
        gridmap.save_pgm(crowd, self.path("crowd_map"))
        gridmap.save_pgm(inflated, self.path("crowd_map_inflated"))
        gridmap.save_pgm(truth, self.path("truth_map"))
        free = int(crowd.free_mask().sum())
        self.say(
            f"build-map: {crowd.width}x{crowd.height} cells, {free} free -> "
            f"{self.path('crowd_map')} (+inflated, +truth)"
        )

    def build_benchmark_map(self):
        cfg = self.config.grid
        layout = self._layout()
        bounds = self._bounds(layout)
        bench = gridmap.from_obstacles(layout, cfg.cone_radius, bounds, cfg.resolution)
        inflated = gridmap.inflate(bench, cfg.inflation_radius)
        gridmap.save_pgm(bench, self.path("bench_map"))
        gridmap.save_pgm(inflated, self.path("bench_map_inflated"))
        occ = int((bench.cells == gridmap.OCCUPIED).sum())
        self.say(
            f"build-benchmark-map: {occ} occupied cells from obstacles -> {self.path('bench_map')}"
        )

    def _endpoints(self, layout) -> tuple[Pose, Pose]:
        cfg = self.config.plan
        line = layout.corridor_centerline(step=0.5)
        s = polyline_arclength(line)
        total = s[-1]
        start_xy = np.array(
            [np.interp(cfg.start_offset, s, line[:, 0]), np.interp(cfg.start_offset, s, line[:, 1])]
        )
        goal_xy = np.array(
            [
                np.interp(total - cfg.goal_offset, s, line[:, 0]),
                np.interp(total - cfg.goal_offset, s, line[:, 1]),
            ]
        )
        return Pose(start_xy[0], start_xy[1], 0.0), Pose(goal_xy[0], goal_xy[1], 0.0)

    def plan(self):
        layout = self._layout()
        start, goal = self._endpoints(layout)
        crowd = gridmap.load_pgm(self.require("crowd_map_inflated", "build-map"))
        bench = gridmap.load_pgm(self.require("bench_map_inflated", "build-benchmark-map"))
        params = self.config.plan.params
        path_crowd = planner.hybrid_astar(crowd, start, goal, params=params)
        path_bench = planner.hybrid_astar(bench, start, goal, params=params)
        planner.save_path_csv(path_crowd, self.path("path_crowd"))
        planner.save_path_csv(path_bench, self.path("path_bench"))
        self.say(
            f"plan: crowd path {path_crowd.length():.1f} m ({len(path_crowd)} poses), "
            f"benchmark path {path_bench.length():.1f} m -> {self.path('path_crowd')}"
        )

    def simulate(self):
        path = planner.load_path_csv(self.require("path_crowd", "plan"))
        first = path.poses[0]
        start = VehicleState(first.x, first.y, first.heading, 0.0)
        trace = vehicle_sim.simulate(path, start, self.config.vehicle, self.config.horizon)
        vehicle_sim.save_trace_csv(trace, self.path("trace"))
        final = trace.entries[-1]
        self.say(
            f"simulate: {len(trace)} steps, final speed {final.state.speed:.2f} m/s, "
            f"completed={trace.completed} -> {self.path('trace')}"
        )

    def evaluate(self):
        layout = self._layout()
        crowd = gridmap.load_pgm(self.require("crowd_map", "build-map"))
        truth = gridmap.load_pgm(self.require("truth_map", "build-map"))
        bench = gridmap.load_pgm(self.require("bench_map", "build-benchmark-map"))
        path_crowd = planner.load_path_csv(self.require("path_crowd", "plan"))
        path_bench = planner.load_path_csv(self.require("path_bench", "plan"))
        trace = vehicle_sim.load_trace_csv(self.require("trace", "simulate"))
        report = evaluation.evaluate_scenario(
            crowd, bench, truth, path_crowd, path_bench, trace, layout, self.config.vehicle.width
        )
        evaluation.save_report(report, self.path("report"))
        evaluation.save_clearance_csv(report.clearance, trace, self.path("clearance"))
        self.say(
            f"evaluate: precision {report.precision:.4f}, cone clearance "
            f"{report.clearance.min_cone_distance:.3f} m, benchmark violates="
            f"{report.benchmark_violates} -> {self.path('report')}"
        )

    def run(self, stage: str):
        method = {
            "gen-workzone": self.gen_workzone,
            "synth-traj": self.synth_traj,
            "fit-gmm": self.fit_gmm,
            "sample": self.sample,
            "build-map": self.build_map,
            "build-benchmark-map": self.build_benchmark_map,
            "plan": self.plan,
            "simulate": self.simulate,
            "evaluate": self.evaluate,
        }[stage]
        method()

    def run_all(self):
        for stage in STAGES:
            self.run(stage)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdzone",
        description="Work-zone drivable-area inference from crowdsourced trajectories",
    )
    parser.add_argument("--config", default="default", help="TOML config path, or 'default'")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="override the trajectory seed with N and the GMM seed with N+1000",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress per-stage summaries")
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES + ("run-all",):
        sub.add_parser(stage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config.trajectory.seed = args.seed
        config.gmm.seed = args.seed + 1000
    out_dir = Path(args.out) if args.out else config.out_dir
    runner = Runner(config, out_dir, quiet=args.quiet)
    try:
        if args.command == "run-all":
            runner.run_all()
        else:
            runner.run(args.command)
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CrowdzoneError as exc:
        print(f"error in stage {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
