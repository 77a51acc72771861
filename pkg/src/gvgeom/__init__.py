"""Ground-vehicle monocular-depth geometry toolkit.

Pure-numpy implementations of ground-plane perspective math, canonical
depth representations (focal and vertical), uncertainty-weighted cue
fusion, training losses with analytic gradients, geometric augmentation,
RANSAC extrinsics calibration, depth metrics, and a synthetic ray-casting
oracle used to validate all of it.
"""

from .augment import AugmentPolicy, AugmentSpec, sample_augmentation, transform_rig, warp_map
from .calibrate import (
    REFERENCE_EXTRINSICS,
    CalibrationOptions,
    CalibrationResult,
    PlaneFit,
    calibrate_sequence,
    filter_road_points,
    plane_from_extrinsics,
    plane_to_extrinsics,
    ransac_plane,
)
from .camera import (
    CameraRig,
    backproject,
    camera_to_ego,
    ego_to_camera,
    ground_depth_at_pixel,
    horizon_row,
    project,
    rotation_from_pitch,
)
from .canonical import (
    CanonicalConfig,
    extended_height,
    fct_from_depth,
    fct_to_depth,
    vct_from_depth,
    vct_to_depth,
    y_max,
)
from .fusion import SIGMA_FLOOR, activate_log_uncertainty, fuse, gedepth_combine
from .losses import (
    LossConfig,
    LossResult,
    consistency_loss,
    finite_difference_check,
    si_log_loss,
    total_loss,
    uncertainty_loss,
)
from .maps import CanonicalMap, DepthMap, UncertaintyMap
from .metrics import MetricReport, compute_metrics, ground_modulation, per_bin_metrics
from .synth import Box, GroundPlane, NoiseModel, SceneSpec, inject_noise, render_depth, simulate_cue_predictions

__version__ = "0.1.0"
