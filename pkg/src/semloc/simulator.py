"""Deterministic 2D world simulator.

Generates waypoint trajectories, then renders them into detection logs:
noisy odometry deltas, raycast range scans, bearing-only object detections
and text detections run through a character-corruption channel. Everything
is bit-deterministic for a fixed (world, trajectory, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detlog import LogFrame, OdometryDelta
from .errors import WaypointInObstacleError
from .geometry import Pose2D, Rect, wrap_angle
from .grid import OccupancyGrid
from .mcl import MotionNoise
from .seeding import (
    PH_SIM_OBJECTS,
    PH_SIM_ODOMETRY,
    PH_SIM_PERTURB,
    PH_SIM_SCAN,
    PH_SIM_TEXT,
    PH_SIM_TEXTOBS,
    make_rng,
)
from .semmap import AbstractSemanticMap, SemanticObject
from .sensor_models import ObjectDetection, RangeScan, TextDetection
from .textmap import PosedTextObservation

CORRUPTION_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass
class ScanSpec:
    n_beams: int = 36
    fov: float = 2.0 * math.pi
    range_max: float = 6.0
    range_sigma: float = 0.01

    def angles(self) -> np.ndarray:
        # evenly spaced, endpoint excluded so a full circle has no double beam
        return np.linspace(-self.fov / 2.0, self.fov / 2.0, self.n_beams, endpoint=False)


@dataclass
class DetectionParams:
    fov: float = 1.9  # camera field of view, radians
    max_range: float = 3.5  # object detection range, meters
    p_detect: dict = field(default_factory=dict)  # class -> probability; "*" is the fallback
    bearing_sigma: float = 0.05  # radians
    text_p_detect: float = 0.85
    text_max_range: float = 3.0
    char_corruption_prob: float = 0.05
    line_of_sight: bool = False  # raycast visibility check for objects and text

    def p_for(self, class_label: str) -> float:
        return float(self.p_detect.get(class_label, self.p_detect.get("*", 0.75)))


@dataclass
class WorldSpec:
    semmap: AbstractSemanticMap
    text_truth: dict[str, tuple[float, float]] = field(default_factory=dict)  # tag -> sign position
    detection: DetectionParams = field(default_factory=DetectionParams)


def generate_trajectory(
    waypoints,
    speed: float,
    turn_rate: float,
    dt: float,
    grid: OccupancyGrid | None = None,
    initial_heading: float | None = None,
) -> list[tuple[float, Pose2D]]:
    """Rotate-then-translate path through the waypoints.

    At each waypoint the robot turns in place at turn_rate until it faces
    the next waypoint, then translates at constant speed; timestamps are
    multiples of dt. When a grid is given, every waypoint must sit on a FREE
    cell.
    """
    waypoints = [(float(x), float(y)) for x, y in waypoints]
    if len(waypoints) < 2:
        raise ValueError("need at least 2 waypoints")
    if dt <= 0.0 or speed <= 0.0 or turn_rate <= 0.0:
        raise ValueError("speed, turn_rate and dt must be > 0")
    if grid is not None:
        for wx, wy in waypoints:
            if not grid.is_free_at(wx, wy):
                raise WaypointInObstacleError(f"waypoint ({wx}, {wy}) is not on a FREE cell")

    eps = 1e-12
    x, y = waypoints[0]
    heading = initial_heading
    if heading is None:
        nx, ny = waypoints[1]
        heading = math.atan2(ny - y, nx - x)
    heading = wrap_angle(heading)

    out = [(0.0, Pose2D(x, y, heading))]
    k = 0
    max_turn = turn_rate * dt
    max_step = speed * dt
    for tx, ty in waypoints[1:]:
        # turn in place toward the target
        target_heading = math.atan2(ty - y, tx - x) if math.hypot(tx - x, ty - y) > eps else heading
        err = wrap_angle(target_heading - heading)
        while abs(err) > eps:
            step = math.copysign(min(abs(err), max_turn), err)
            heading = wrap_angle(heading + step)
            err = wrap_angle(target_heading - heading)
            k += 1
            out.append((k * dt, Pose2D(x, y, heading)))
        # translate
        remaining = math.hypot(tx - x, ty - y)
        while remaining > eps:
            step = min(remaining, max_step)
            x += step * math.cos(heading)
            y += step * math.sin(heading)
            remaining = math.hypot(tx - x, ty - y)
            if remaining <= eps:
                x, y = tx, ty  # snap to kill float dust
                remaining = 0.0
            k += 1
            out.append((k * dt, Pose2D(x, y, heading)))
    return out


def _odometry_between(prev: Pose2D, curr: Pose2D) -> OdometryDelta:
    dx = curr.x - prev.x
    dy = curr.y - prev.y
    trans = math.hypot(dx, dy)
    if trans < 1e-12:
        rot1 = 0.0
        rot2 = wrap_angle(curr.theta - prev.theta)
    else:
        rot1 = wrap_angle(math.atan2(dy, dx) - prev.theta)
        rot2 = wrap_angle(curr.theta - prev.theta - rot1)
    return OdometryDelta(rot1, trans, rot2)


def _corrupt_text(tag: str, prob: float, rng) -> str:
    if prob <= 0.0:
        return tag
    chars = list(tag)
    flips = rng.uniform(0.0, 1.0, size=len(chars))
    for i, (ch, f) in enumerate(zip(chars, flips)):
        if f < prob:
            # replacement always differs from the original character
            pool = CORRUPTION_ALPHABET.replace(ch.upper(), "") or CORRUPTION_ALPHABET
            chars[i] = pool[int(rng.integers(0, len(pool)))]
    return "".join(chars)


def _visible(world: WorldSpec, pose: Pose2D, tx: float, ty: float, fov: float, max_range: float) -> bool:
    dist = math.hypot(tx - pose.x, ty - pose.y)
    if dist > max_range:
        return False
    bearing = wrap_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.theta)
    if abs(bearing) > fov / 2.0:
        return False
    if world.detection.line_of_sight and dist > 1e-9:
        angle = math.atan2(ty - pose.y, tx - pose.x)
        seen = world.semmap.grid.raycast(pose, angle - pose.theta, max_range)
        if seen < dist - world.semmap.grid.resolution:
            return False
    return True


def simulate_log(
    world: WorldSpec,
    trajectory,
    odometry_noise: MotionNoise,
    scan_spec: ScanSpec,
    seed: int,
) -> list[LogFrame]:
    """Render a ground-truth trajectory into a detection log.

    Frame 0 carries observations only; each later frame adds the noisy
    odometry delta from its predecessor. Per-channel RNG streams keep the
    log bit-deterministic per (world, trajectory, seed).
    """
    rng_odo = make_rng(seed, PH_SIM_ODOMETRY)
    rng_scan = make_rng(seed, PH_SIM_SCAN)
    rng_obj = make_rng(seed, PH_SIM_OBJECTS)
    rng_text = make_rng(seed, PH_SIM_TEXT)
    det = world.detection
    grid = world.semmap.grid
    angles = scan_spec.angles()

    frames: list[LogFrame] = []
    prev_pose = None
    for t, pose in trajectory:
        frame = LogFrame(t=t, gt_pose=pose)

        if prev_pose is not None:
            true_delta = _odometry_between(prev_pose, pose)
            r1, tr, r2 = true_delta.rot1, true_delta.trans, true_delta.rot2
            n = odometry_noise
            std_r1 = math.sqrt(n.alpha1 * r1**2 + n.alpha2 * tr**2)
            std_tr = math.sqrt(n.alpha3 * tr**2 + n.alpha4 * (r1**2 + r2**2))
            std_r2 = math.sqrt(n.alpha1 * r2**2 + n.alpha2 * tr**2)
            frame.odometry = OdometryDelta(
                wrap_angle(r1 + rng_odo.normal(0.0, std_r1)),
                max(0.0, tr + rng_odo.normal(0.0, std_tr)),
                wrap_angle(r2 + rng_odo.normal(0.0, std_r2)),
            )

        ranges = np.empty(angles.size)
        for b, beam in enumerate(angles):
            ranges[b] = grid.raycast(pose, float(beam), scan_spec.range_max)
        if scan_spec.range_sigma > 0.0:
            noise = rng_scan.normal(0.0, scan_spec.range_sigma, size=ranges.size)
            hit = ranges < scan_spec.range_max
            ranges = np.where(hit, np.clip(ranges + noise, 0.0, scan_spec.range_max), scan_spec.range_max)
        frame.scan = RangeScan(angles=angles, ranges=ranges, range_max=scan_spec.range_max)

        for obj in world.semmap.objects:
            cx, cy = obj.rect.center
            if not _visible(world, pose, cx, cy, det.fov, det.max_range):
                continue
            if rng_obj.uniform(0.0, 1.0) >= det.p_for(obj.class_label):
                continue
            bearing = wrap_angle(math.atan2(cy - pose.y, cx - pose.x) - pose.theta)
            if det.bearing_sigma > 0.0:
                bearing = wrap_angle(bearing + rng_obj.normal(0.0, det.bearing_sigma))
            frame.object_detections.append(ObjectDetection(obj.class_label, bearing, 1.0))

        for tag in sorted(world.text_truth):
            tx, ty = world.text_truth[tag]
            if not _visible(world, pose, tx, ty, det.fov, det.text_max_range):
                continue
            if rng_text.uniform(0.0, 1.0) >= det.text_p_detect:
                continue
            raw = _corrupt_text(tag, det.char_corruption_prob, rng_text)
            frame.text_detections.append(TextDetection(raw, 1.0))

        frames.append(frame)
        prev_pose = pose
    return frames


def simulate_text_observations(world: WorldSpec, trajectory, seed: int) -> list[PosedTextObservation]:
    """Posed attempted/detected tag records for the text-map builder.

    A tag counts as attempted whenever the pose is within detection range
    and field of view of the sign's true location; detection succeeds per
    the world's text detection probability.
    """
    rng = make_rng(seed, PH_SIM_TEXTOBS)
    det = world.detection
    out = []
    for _, pose in trajectory:
        attempted = []
        detected = []
        for tag in sorted(world.text_truth):
            tx, ty = world.text_truth[tag]
            if not _visible(world, pose, tx, ty, det.fov, det.text_max_range):
                continue
            attempted.append(tag)
            if rng.uniform(0.0, 1.0) < det.text_p_detect:
                detected.append(tag)
        out.append(PosedTextObservation(pose=pose, attempted_tags=attempted, detected_tags=detected))
    return out


def perturb_object_sizes(semmap: AbstractSemanticMap, scale: float, seed: int) -> AbstractSemanticMap:
    """Rescale every object rectangle about its center by an independent
    factor drawn uniformly from [1 - scale, 1 + scale], floored so extents
    stay positive. Emulates sloppy hand-annotated object sizes."""
    if scale < 0.0:
        raise ValueError("scale must be >= 0")
    rng = make_rng(seed, PH_SIM_PERTURB)
    factors = rng.uniform(1.0 - scale, 1.0 + scale, size=len(semmap.objects))
    factors = np.maximum(factors, 1e-3)
    new_objects = []
    for obj, f in zip(semmap.objects, factors):
        if f == 1.0:
            new_objects.append(obj)
            continue
        cx, cy = obj.rect.center
        hx = 0.5 * obj.rect.width * f
        hy = 0.5 * obj.rect.height * f
        new_objects.append(
            SemanticObject(id=obj.id, class_label=obj.class_label, rect=Rect(cx - hx, cy - hy, cx + hx, cy + hy))
        )
    return semmap.with_objects(new_objects)
