"""Multi-human safety index for mobile robots."""
from .core import (
    DegenerateGeometryError,
    KinematicLimits,
    Pose2,
    RelativeState,
    SafetyInputError,
    Zone,
    ZoneModel,
    bearing,
    classify_zone,
    distance,
    normalize_angle,
)
from .params import SafetyParams
from .estimation import (
    EstimatorConfig,
    HumanTrack,
    KeypointDetection,
    Tracker,
    estimate_velocity,
    fuse_keypoints,
    update_track,
)
from .scenario import Assessment, Bands, ScenarioLabel, appropriateness_matrix, classify_scenario, score_scale
from .gsi import (
    NoHumansError,
    SafetyFrame,
    WorldHuman,
    evaluate_frame,
    gsi_collective,
    gsi_directional,
    gsi_gradient,
    gsi_hat,
)
from .baselines import BaselineConfig, aggregate_mean, di, get_scales, hsa, hsf, kdf

__version__ = "0.1.0"
