"""semloc: long-term indoor localization on abstract semantic maps.

Monte Carlo localization fusing geometric range scans, bearing-only semantic
object detections and textual cues (room signs), together with map tooling,
a deterministic 2D simulator and trajectory evaluation.
"""

from .config import RunConfig, load_config
from .detlog import LogFrame, OdometryDelta, read_detection_log, write_detection_log
from .engine import MonteCarloLocalizer, StepRecord
from .errors import (
    EmptyInjectionRegionError,
    EmptyOverlapError,
    NoFreeSpaceError,
    NoMatchingRoomError,
    NonPositiveFactorError,
    OutOfBoundsError,
    ParseError,
    SemlocError,
    TooFewSessionsError,
    ValidationError,
    WaypointInObstacleError,
)
from .evaluation import EvalMetrics, evaluate, read_trajectory, write_trajectory
from .geometry import Pose2D, Rect, wrap_angle
from .grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid
from .mapio import load_map, save_map
from .mcl import (
    InjectionPolicy,
    MotionNoise,
    Particle,
    ParticleSet,
    effective_sample_size,
    estimate_pose,
    infer_room_category,
    init_in_rooms,
    init_uniform,
    inject_text_particles,
    predict,
    resample_low_variance,
    update,
)
from .semmap import AbstractSemanticMap, Room, SemanticObject, TextBox, Violation, validate_map
from .sensor_models import (
    LikelihoodField,
    ObjectDetection,
    RangeScan,
    SemanticModelParams,
    TextDetection,
    build_likelihood_field,
    geometric_weight,
    levenshtein,
    match_text,
    semantic_weight,
)
from .simulator import (
    DetectionParams,
    ScanSpec,
    WorldSpec,
    generate_trajectory,
    perturb_object_sizes,
    simulate_log,
    simulate_text_observations,
)
from .stability import (
    SessionObservation,
    StabilityReport,
    associate_instances,
    select_stable_classes,
    stability_scores,
)
from .textmap import PosedTextObservation, TagHistogram, accumulate, build_text_box, merge_into_map

__version__ = "0.1.0"
