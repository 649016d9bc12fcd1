"""Work-zone drivable-area inference from crowdsourced vehicle trajectories."""

from .evaluation import ClearanceReport, EvaluationReport, clearance, evaluate_scenario, rule_violation
from .geometry import Bounds, Rect, wrap_angle
from .gmm import (
    FitReport,
    GaussianComponent,
    GaussianMixture,
    chi2_quantile_2dof,
    e_step,
    em_fit,
    log_likelihood,
    mahalanobis_sq,
    pdf,
    sample_components,
    sample_gated,
    select_k,
)
from .gridmap import (
    FIVE_INCH_M,
    OccupancyGrid,
    from_obstacles,
    from_samples,
    inflate,
    load_pgm,
    precision,
    save_pgm,
)
from .planner import Pose, PlannerParams, ReferencePath, holonomic_heuristic, hybrid_astar, resample
from .trajectory import PointSet, Trajectory, flatten, load_csv, save_csv, synthesize
from .vehicle_sim import (
    ControlCommand,
    Trace,
    VehicleParams,
    VehicleState,
    bicycle_step,
    pid_speed,
    pure_pursuit_steer,
    simulate,
)
from .workzone import WorkZoneLayout, WorkZoneSpec, build_layout, ft_to_m, ground_truth_grid

__version__ = "0.1.0"
