"""Perception entropy for multi-sensor (LiDAR + camera) vehicle configurations."""

from .entropy_core import (
    CAMERA_CURVE,
    LIDAR_CURVE,
    ApCurve,
    ApSample,
    ap_from_measurement,
    fit_ap_curve,
    gaussian_entropy,
    normalize_measurement,
    sigma_from_ap,
    voxel_entropy,
)
from .evaluator import Configuration, EntropyReport, Evaluator, SensorSetup, evaluate, export_heatmap
from .fusion import FusionGraph, FusionGroup, fuse_early, fuse_late, fused_voxel_entropy
from .optimizer import NeighborhoodSchedule, SearchSpace, SensorSearch, optimize
from .prior_field import (
    ClassPrior,
    PerceptionSpace,
    PriorField,
    WeightRegion,
    build_prior,
    load_prior,
    prior_density,
    sample_grid,
)
from .sensor_models import (
    CameraModel,
    LidarModel,
    SensorPose,
    VehicleBody,
    Voxel,
    beam_direction,
    camera_voxel_measurement,
    intrinsics_from_spec,
    lidar_voxel_measurement,
    project_point,
    ray_blocked,
)

__version__ = "0.1.0"
