"""Multi-camera 3D multi-object tracking.

A tracking-by-detection engine: confidence-guided pre-processing,
multi-view appearance association, noise-adaptive Kalman filtering,
and count-based track lifecycle, plus scenario generation and
CLEAR-MOT / AMOTA evaluation utilities.
"""

from .association import AssociationResult, Match, associate
from .cameras import Camera, CameraRig, camera_from_pose, mcas, project_box
from .categories import CATEGORIES, Category
from .config import ConfigError, Flags, TrackerConfig, load_config, load_config_file
from .geometry import Box2D, Box3D, giou_2d, giou_3d, giou_bev, iou_2d, iou_bev
from .lifecycle import Status, Tracklet
from .metrics import MetricReport, evaluate
from .motion import KinematicState, predict_state, update_state
from .pipeline import Frame, FrameResult, TrackRecord, Tracker, run_sequence
from .synth import ScenarioSpec, generate_scenario, ring_rig

__version__ = "0.1.0"

__all__ = [
    "AssociationResult",
    "Box2D",
    "Box3D",
    "CATEGORIES",
    "Camera",
    "CameraRig",
    "Category",
    "ConfigError",
    "Flags",
    "Frame",
    "FrameResult",
    "KinematicState",
    "Match",
    "MetricReport",
    "ScenarioSpec",
    "Status",
    "TrackRecord",
    "Tracker",
    "TrackerConfig",
    "Tracklet",
    "associate",
    "camera_from_pose",
    "evaluate",
    "generate_scenario",
    "giou_2d",
    "giou_3d",
    "giou_bev",
    "iou_2d",
    "iou_bev",
    "load_config",
    "load_config_file",
    "mcas",
    "predict_state",
    "project_box",
    "ring_rig",
    "run_sequence",
    "update_state",
]
