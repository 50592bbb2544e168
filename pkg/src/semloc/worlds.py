"""Built-in scenario fixtures.

Three desk-scale worlds exercise the full pipeline:

* twin corridor -- two geometrically identical, disconnected corridor wings
  with distinct room tags; geometry alone cannot tell the wings apart, text
  cues can.
* office -- four identically shaped rooms off one long corridor; furniture
  annotations (not visible to the range sensor) break the geometric aliasing
  and the kitchen carries classes unique to it.
* furniture shift -- multi-session object observations with planted per-class
  move probabilities for the stability analyzer.

All rectangles are aligned to the 0.1 m grid so room membership by cell
center is exact.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ParseError
from .geometry import Rect
from .grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, fill_rect
from .mcl import MotionNoise
from .seeding import make_rng
from .semmap import AbstractSemanticMap, Room, SemanticObject, TextBox
from .simulator import DetectionParams, ScanSpec, WorldSpec
from .stability import Instance, SessionObservation

SCENARIO_VERSION = 1
RESOLUTION = 0.1

PH_FURNITURE = 21


def _empty_grid(width_m: float, height_m: float) -> OccupancyGrid:
    cells = np.full((round(height_m / RESOLUTION), round(width_m / RESOLUTION)), UNKNOWN, dtype=np.uint8)
    return OccupancyGrid(resolution=RESOLUTION, origin=(0.0, 0.0), cells=cells)


def _wing(grid: OccupancyGrid, dy: float) -> None:
    """One corridor wing with two rooms; dy shifts the whole layout."""
    fill_rect(grid, 1.8, 8.8 + dy, 22.2, 13.8 + dy, OCCUPIED)  # solid block
    fill_rect(grid, 2.0, 9.0 + dy, 22.0, 11.4 + dy, FREE)  # corridor
    fill_rect(grid, 4.0, 11.6 + dy, 8.0, 13.6 + dy, FREE)  # room 1
    fill_rect(grid, 14.0, 11.6 + dy, 18.0, 13.6 + dy, FREE)  # room 2
    fill_rect(grid, 5.4, 11.4 + dy, 6.6, 11.6 + dy, FREE)  # door 1
    fill_rect(grid, 15.4, 11.4 + dy, 16.6, 11.6 + dy, FREE)  # door 2


def build_twin_corridor() -> tuple[WorldSpec, dict]:
    grid = _empty_grid(24.0, 14.0)
    _wing(grid, 0.0)  # top wing
    _wing(grid, -7.0)  # bottom wing, an exact translated copy

    rooms = (
        Room("rt1", (Rect(4.0, 11.6, 8.0, 13.6),), "office", "2301"),
        Room("rt2", (Rect(14.0, 11.6, 18.0, 13.6),), "office", "2302"),
        Room("rb1", (Rect(4.0, 4.6, 8.0, 6.6),), "office", "7804"),
        Room("rb2", (Rect(14.0, 4.6, 18.0, 6.6),), "office", "7805"),
    )
    # manual annotations of where each sign is readable: the camera must be
    # short of the sign and facing it, so boxes sit upstream of the sign x
    boxes = (
        TextBox("2301", Rect(3.4, 9.4, 5.6, 11.2)),
        TextBox("2302", Rect(13.4, 9.4, 15.6, 11.2)),
        TextBox("7804", Rect(3.4, 2.4, 5.6, 4.2)),
        TextBox("7805", Rect(13.4, 2.4, 15.6, 4.2)),
    )
    semmap = AbstractSemanticMap(grid=grid, rooms=rooms, text_boxes=boxes)
    world = WorldSpec(
        semmap=semmap,
        text_truth={"2301": (6.0, 11.5), "2302": (16.0, 11.5), "7804": (6.0, 4.5), "7805": (16.0, 4.5)},
        detection=DetectionParams(
            fov=2.4,
            max_range=3.5,
            p_detect={"*": 0.75},
            bearing_sigma=0.05,
            text_p_detect=0.9,
            text_max_range=3.0,
            char_corruption_prob=0.05,
        ),
    )
    scenario = {
        "scenario_version": SCENARIO_VERSION,
        "map": "twin_corridor.map.json",
        "waypoints": [
            [3.0, 10.2],
            [7.4, 10.2],
            [4.6, 10.2],
            [7.4, 10.2],
            [4.6, 10.2],
            [7.4, 10.2],
            [17.4, 10.2],
            [14.6, 10.2],
            [17.4, 10.2],
            [14.6, 10.2],
            [17.4, 10.2],
            [21.0, 10.2],
        ],
        "speed": 0.5,
        "turn_rate": 1.5,
        "dt": 0.4,
        "odometry_noise": [0.01, 0.01, 0.01, 0.01],
        "scan": {"n_beams": 36, "fov": 2.0 * math.pi, "range_max": 6.0, "range_sigma": 0.01},
        "detection": detection_to_document(world.detection),
        "text_truth": {tag: list(p) for tag, p in sorted(world.text_truth.items())},
        "eval": {"success_radius": 0.75, "hold": 8.0},
        "config": {
            "sigma_hit": 0.3,
            "z_rand_weight": 0.2,
            "rho": 0.35,
            "cooldown": 3.0,
            "stride": 6,
            "particles": 600,
            "ess_ratio": 0.3,
        },
    }
    return world, scenario


def build_office() -> tuple[WorldSpec, dict]:
    grid = _empty_grid(22.0, 8.5)
    fill_rect(grid, 0.8, 0.8, 21.2, 7.6, OCCUPIED)
    fill_rect(grid, 1.0, 1.0, 21.0, 3.2, FREE)  # corridor
    room_x0 = (1.6, 8.8, 16.0)
    for x0 in room_x0:
        fill_rect(grid, x0, 3.4, x0 + 4.0, 7.4, FREE)  # identical room interiors
        door = x0 + 1.4
        fill_rect(grid, door, 3.2, door + 1.2, 3.4, FREE)  # identical door offsets

    def office_objects(idx: int, x0: float):
        return [
            SemanticObject(f"desk_{idx}", "desk", Rect(x0 + 0.5, 6.6, x0 + 2.1, 7.4)),
            SemanticObject(f"chair_{idx}", "chair", Rect(x0 + 2.4, 6.7, x0 + 2.8, 7.1)),
            SemanticObject(f"shelf_{idx}", "shelf", Rect(x0 + 3.3, 3.8, x0 + 3.9, 5.4)),
        ]

    objects = [
        SemanticObject("sink_k", "sink", Rect(9.3, 6.9, 10.3, 7.4)),
        SemanticObject("fridge_k", "fridge", Rect(11.0, 6.7, 11.7, 7.4)),
        SemanticObject("table_k", "table", Rect(9.8, 4.6, 11.4, 5.6)),
        SemanticObject("chair_k", "chair", Rect(9.0, 4.7, 9.4, 5.1)),
    ]
    objects += office_objects(1, 1.6) + office_objects(3, 16.0)

    rooms = (
        Room("r1", (Rect(1.6, 3.4, 5.6, 7.4),), "office", "O201", ("desk_1", "chair_1", "shelf_1")),
        Room("r2", (Rect(8.8, 3.4, 12.8, 7.4),), "kitchen", "K202", ("sink_k", "fridge_k", "table_k", "chair_k")),
        Room("r3", (Rect(16.0, 3.4, 20.0, 7.4),), "office", "O203", ("desk_3", "chair_3", "shelf_3")),
    )
    semmap = AbstractSemanticMap(grid=grid, objects=tuple(objects), rooms=rooms)
    world = WorldSpec(
        semmap=semmap,
        text_truth={},
        detection=DetectionParams(
            fov=2.6,
            max_range=4.5,
            p_detect={"*": 0.9},
            bearing_sigma=0.05,
            text_p_detect=0.0,
            text_max_range=0.0,
        ),
    )
    scenario = {
        "scenario_version": SCENARIO_VERSION,
        "map": "office.map.json",
        "waypoints": [
            [10.8, 5.9],
            [10.8, 6.6],
            [9.6, 5.4],
            [11.8, 5.9],
            [10.2, 4.4],
            [10.8, 2.1],
            [20.2, 2.1],
            [16.8, 2.1],
        ],
        "speed": 0.5,
        "turn_rate": 1.5,
        "dt": 0.4,
        "odometry_noise": [0.01, 0.01, 0.01, 0.01],
        "scan": {"n_beams": 36, "fov": 2.0 * math.pi, "range_max": 6.0, "range_sigma": 0.01},
        "detection": detection_to_document(world.detection),
        "text_truth": {},
        "eval": {"success_radius": 0.6, "hold": 5.0},
        "config": {
            "sigma_hit": 0.35,
            "z_rand_weight": 0.25,
            "stride": 6,
            "particles": 2000,
            "ess_ratio": 0.3,
            "alpha1": 0.03,
            "alpha2": 0.03,
            "alpha3": 0.03,
            "alpha4": 0.03,
        },
    }
    return world, scenario


FURNITURE_CLASSES = (
    # class, move probability per transition, home positions
    ("door", 0.0, ((5.0, 5.0), (13.0, 5.0), (21.0, 5.0))),
    ("chair", 0.5, ((5.0, 13.0), (13.0, 13.0), (21.0, 13.0), (29.0, 13.0))),
    ("cart", 1.0, ((5.0, 21.0), (13.0, 21.0))),
)
FURNITURE_REGION_RADIUS = 1.0
FURNITURE_MIN_MOVE = 0.6
FURNITURE_JITTER = 0.05


def furniture_shift_sessions(seed: int = 7, n_sessions: int = 100) -> list[SessionObservation]:
    """Synthetic multi-session observations with planted move rates.

    Instances stay inside a 1 m disk around their home, far from any other
    instance, so greedy association always pairs an instance with itself; a
    "move" jumps at least 0.6 m, a "stay" jitters at most ~0.07 m, and the
    stay/move classification threshold sits safely between the two.
    """
    rng = make_rng(seed, PH_FURNITURE)
    positions = {}
    for label, _, homes in FURNITURE_CLASSES:
        for i, home in enumerate(homes):
            positions[(label, i)] = home

    sessions = []
    for sid in range(n_sessions):
        instances = []
        for label, p_move, homes in FURNITURE_CLASSES:
            for i, home in enumerate(homes):
                x, y = positions[(label, i)]
                if sid > 0:
                    if rng.uniform(0.0, 1.0) < p_move:
                        while True:
                            ang = rng.uniform(0.0, 2.0 * math.pi)
                            rad = FURNITURE_REGION_RADIUS * math.sqrt(rng.uniform(0.0, 1.0))
                            nx = home[0] + rad * math.cos(ang)
                            ny = home[1] + rad * math.sin(ang)
                            if math.hypot(nx - x, ny - y) >= FURNITURE_MIN_MOVE:
                                break
                        x, y = nx, ny
                    else:
                        x += rng.uniform(-FURNITURE_JITTER, FURNITURE_JITTER)
                        y += rng.uniform(-FURNITURE_JITTER, FURNITURE_JITTER)
                        # keep jittered stays inside the home region
                        x = min(max(x, home[0] - FURNITURE_REGION_RADIUS), home[0] + FURNITURE_REGION_RADIUS)
                        y = min(max(y, home[1] - FURNITURE_REGION_RADIUS), home[1] + FURNITURE_REGION_RADIUS)
                    positions[(label, i)] = (x, y)
                instances.append(Instance(label, x, y))
        sessions.append(SessionObservation(session_id=sid, instances=instances))
    return sessions


def detection_to_document(det: DetectionParams) -> dict:
    return {
        "fov": det.fov,
        "max_range": det.max_range,
        "p_detect": dict(sorted(det.p_detect.items())),
        "bearing_sigma": det.bearing_sigma,
        "text_p_detect": det.text_p_detect,
        "text_max_range": det.text_max_range,
        "char_corruption_prob": det.char_corruption_prob,
        "line_of_sight": det.line_of_sight,
    }


def scenario_to_document(scenario: dict) -> bytes:
    return (json.dumps(scenario, sort_keys=True, indent=2) + "\n").encode("utf-8")


def parse_scenario(doc: dict) -> tuple[ScanSpec, DetectionParams, MotionNoise]:
    scan = doc.get("scan", {})
    scan_spec = ScanSpec(
        n_beams=int(scan.get("n_beams", 36)),
        fov=float(scan.get("fov", 2.0 * math.pi)),
        range_max=float(scan.get("range_max", 6.0)),
        range_sigma=float(scan.get("range_sigma", 0.01)),
    )
    det = doc.get("detection", {})
    detection = DetectionParams(
        fov=float(det.get("fov", 2.4)),
        max_range=float(det.get("max_range", 3.5)),
        p_detect={str(k): float(v) for k, v in det.get("p_detect", {"*": 0.75}).items()},
        bearing_sigma=float(det.get("bearing_sigma", 0.05)),
        text_p_detect=float(det.get("text_p_detect", 0.9)),
        text_max_range=float(det.get("text_max_range", 3.0)),
        char_corruption_prob=float(det.get("char_corruption_prob", 0.05)),
        line_of_sight=bool(det.get("line_of_sight", False)),
    )
    noise = doc.get("odometry_noise", [0.01, 0.01, 0.01, 0.01])
    if len(noise) != 4:
        raise ParseError("odometry_noise must have 4 entries")
    motion_noise = MotionNoise(*(float(a) for a in noise))
    return scan_spec, detection, motion_noise


def load_scenario(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid scenario JSON: {exc}") from exc
    if doc.get("scenario_version") != SCENARIO_VERSION:
        raise ParseError(f"unsupported scenario_version {doc.get('scenario_version')!r}")
    for key in ("map", "waypoints", "speed", "turn_rate", "dt"):
        if key not in doc:
            raise ParseError(f"scenario document missing {key!r}")
    return doc


def world_from_scenario(doc: dict, semmap: AbstractSemanticMap) -> WorldSpec:
    _, detection, _ = parse_scenario(doc)
    truth = {str(tag): (float(p[0]), float(p[1])) for tag, p in doc.get("text_truth", {}).items()}
    return WorldSpec(semmap=semmap, text_truth=truth, detection=detection)
