"""Particle filter primitives: initialization, odometry prediction, weight
updates, low-variance resampling, text-cue injection and pose estimation.

Particles live in numpy arrays -- poses (n, 3), weights (n,) -- and every
operation returns a new ParticleSet; nothing mutates in place. After every
public operation weights sum to 1 within 1e-9 and stay strictly positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInjectionRegionError,
    NoFreeSpaceError,
    NoMatchingRoomError,
    NonPositiveFactorError,
)
from .geometry import Pose2D, wrap_angle
from .grid import FREE, OccupancyGrid
from .semmap import AbstractSemanticMap, TextBox
from .detlog import OdometryDelta
from .seeding import make_rng


@dataclass(frozen=True)
class Particle:
    pose: Pose2D
    weight: float


@dataclass
class MotionNoise:
    """Odometry model noise coefficients (all >= 0)."""

    alpha1: float = 0.05  # rotation noise from rotation
    alpha2: float = 0.05  # rotation noise from translation
    alpha3: float = 0.05  # translation noise from translation
    alpha4: float = 0.05  # translation noise from rotation


@dataclass
class InjectionPolicy:
    rho: float = 0.15  # fraction of particles replaced per text event
    cooldown: float = 5.0  # seconds between injections for the same tag


@dataclass
class ParticleSet:
    poses: np.ndarray  # (n, 3): x, y, theta
    weights: np.ndarray  # (n,), normalized
    lineage: tuple[str, ...] = ()  # opaque reproducibility token

    @property
    def n(self) -> int:
        return self.poses.shape[0]

    def particle(self, i: int) -> Particle:
        x, y, th = self.poses[i]
        return Particle(Pose2D(float(x), float(y), float(th)), float(self.weights[i]))

    def derived(self, poses, weights, op: str) -> "ParticleSet":
        return ParticleSet(poses=poses, weights=weights, lineage=self.lineage + (op,))


def _sample_free_cells(grid: OccupancyGrid, cell_rc: np.ndarray, n: int, rng) -> np.ndarray:
    """n poses with positions uniform within the given (row, col) cells."""
    idx = rng.integers(0, cell_rc.shape[0], size=n)
    rows = cell_rc[idx, 0].astype(float)
    cols = cell_rc[idx, 1].astype(float)
    res = grid.resolution
    offsets = rng.uniform(0.0, res, size=(n, 2))
    x = grid.origin[0] + cols * res + offsets[:, 0]
    y = grid.origin[1] + rows * res + offsets[:, 1]
    theta = wrap_angle(rng.uniform(-math.pi, math.pi, size=n))
    return np.column_stack([x, y, theta])


def init_uniform(semmap: AbstractSemanticMap, n: int, seed: int) -> ParticleSet:
    """n particles uniform over FREE cells (cell uniform, position uniform
    within the cell), heading uniform, weights 1/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    free = semmap.grid.free_cells()
    if free.shape[0] == 0:
        raise NoFreeSpaceError("map has no FREE cell to initialize in")
    rng = make_rng(seed, 0)
    poses = _sample_free_cells(semmap.grid, free, n, rng)
    return ParticleSet(poses=poses, weights=np.full(n, 1.0 / n), lineage=(f"init_uniform[seed={seed}]",))


def infer_room_category(semmap: AbstractSemanticMap, detected_classes) -> list[tuple[str, float]]:
    """Rank room categories by how much of their furniture was just seen.

    score(category) = sum over the detected class multiset of the frequency
    of that class among all objects contained in rooms of the category.
    Zero-score categories are omitted; ties order by category name.
    """
    by_category: dict[str, list[str]] = {}
    for room in semmap.rooms:
        labels = by_category.setdefault(room.category, [])
        for oid in room.object_ids:
            obj = semmap.object_by_id(oid)
            if obj is not None:
                labels.append(obj.class_label)
    detected = list(detected_classes)
    scored = []
    for category, labels in by_category.items():
        if not labels:
            continue
        score = sum(labels.count(c) for c in detected) / len(labels)
        if score > 0.0:
            scored.append((category, score))
    scored.sort(key=lambda cs: (-cs[1], cs[0]))
    return scored


def init_in_rooms(semmap: AbstractSemanticMap, categories, n: int, seed: int) -> ParticleSet:
    """Particles uniform over FREE cells whose centers lie in rooms of the
    given categories. Sampling is per-cell, so rooms get particles in
    proportion to their free area."""
    if n < 1:
        raise ValueError("n must be >= 1")
    wanted = set(categories)
    rooms = [r for r in semmap.rooms if r.category in wanted]
    if not rooms:
        raise NoMatchingRoomError(f"no room matches categories {sorted(wanted)}")
    grid = semmap.grid
    free = grid.free_cells()
    if free.shape[0]:
        cx = grid.origin[0] + (free[:, 1] + 0.5) * grid.resolution
        cy = grid.origin[1] + (free[:, 0] + 0.5) * grid.resolution
        mask = np.zeros(free.shape[0], dtype=bool)
        for room in rooms:
            for rect in room.rects:
                mask |= (cx >= rect.x_min) & (cx <= rect.x_max) & (cy >= rect.y_min) & (cy <= rect.y_max)
        candidates = free[mask]
    else:
        candidates = free
    if candidates.shape[0] == 0:
        raise NoFreeSpaceError("matching rooms contain no FREE cell")
    rng = make_rng(seed, 0)
    poses = _sample_free_cells(grid, candidates, n, rng)
    label = ",".join(sorted(wanted))
    return ParticleSet(poses=poses, weights=np.full(n, 1.0 / n), lineage=(f"init_in_rooms[{label},seed={seed}]",))


def predict(
    pset: ParticleSet,
    delta: OdometryDelta,
    noise: MotionNoise,
    seed_or_rng,
    grid: OccupancyGrid | None = None,
    wall_penalty: float = 0.1,
) -> ParticleSet:
    """Sampled odometry motion model.

    Each particle applies rot1/trans/rot2 perturbed by zero-mean Gaussians
    with the standard alpha-weighted variances. Particles landing on
    OCCUPIED/UNKNOWN/out-of-grid keep their motion but their weight is
    multiplied by wall_penalty -- a soft penalty, because hand-annotated
    floor plans have thin or slightly misplaced walls and outright rejection
    would bias the filter.
    """
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else make_rng(seed_or_rng)
    n = pset.n
    rot1, trans, rot2 = delta.rot1, delta.trans, delta.rot2
    std_rot1 = math.sqrt(noise.alpha1 * rot1**2 + noise.alpha2 * trans**2)
    std_trans = math.sqrt(noise.alpha3 * trans**2 + noise.alpha4 * (rot1**2 + rot2**2))
    std_rot2 = math.sqrt(noise.alpha1 * rot2**2 + noise.alpha2 * trans**2)
    r1 = rot1 - rng.normal(0.0, std_rot1, size=n)
    tr = trans - rng.normal(0.0, std_trans, size=n)
    r2 = rot2 - rng.normal(0.0, std_rot2, size=n)

    theta0 = pset.poses[:, 2]
    x = pset.poses[:, 0] + tr * np.cos(theta0 + r1)
    y = pset.poses[:, 1] + tr * np.sin(theta0 + r1)
    theta = wrap_angle(theta0 + r1 + r2)
    poses = np.column_stack([x, y, theta])

    weights = pset.weights
    if grid is not None:
        cols = np.floor((x - grid.origin[0]) / grid.resolution).astype(int)
        rows = np.floor((y - grid.origin[1]) / grid.resolution).astype(int)
        inside = (cols >= 0) & (cols < grid.width) & (rows >= 0) & (rows < grid.height)
        ok = inside.copy()
        ok[inside] = grid.cells[rows[inside], cols[inside]] == FREE
        weights = weights * np.where(ok, 1.0, wall_penalty)
    weights = weights / weights.sum()
    return pset.derived(poses, weights, "predict")


def update(pset: ParticleSet, factors) -> ParticleSet:
    """Multiply weights by per-particle factors and renormalize."""
    factors = np.asarray(factors, dtype=float)
    if factors.shape != (pset.n,):
        raise ValueError(f"expected {pset.n} factors, got shape {factors.shape}")
    if not np.all(np.isfinite(factors)) or np.any(factors <= 0.0):
        raise NonPositiveFactorError("weight factors must be positive and finite")
    weights = pset.weights * factors
    weights = weights / weights.sum()
    return pset.derived(pset.poses, weights, "update")


def effective_sample_size(pset: ParticleSet) -> float:
    return float(1.0 / np.sum(np.square(pset.weights)))


def systematic_indices(weights: np.ndarray, u: float, n_out: int | None = None) -> np.ndarray:
    """Particle indices selected by systematic resampling with offset u.

    The resampling grid is u + k/n_out for k = 0..n_out-1 (n_out defaults to
    the particle count); index i is chosen once for every grid point falling
    in [C_{i-1}, C_i), the particle's cumulative weight interval.
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    if n_out is None:
        n_out = n
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard against round-off at the top
    positions = u + np.arange(n_out) / n_out
    idx = np.searchsorted(cum, positions, side="right")
    return np.minimum(idx, n - 1)


def resample_low_variance(pset: ParticleSet, seed_or_rng) -> ParticleSet:
    """Systematic (low-variance) resampling from a single uniform draw."""
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else make_rng(seed_or_rng)
    n = pset.n
    u = rng.uniform(0.0, 1.0 / n)
    idx = systematic_indices(pset.weights, u)
    return pset.derived(pset.poses[idx].copy(), np.full(n, 1.0 / n), "resample")


def _injection_cells(grid: OccupancyGrid, rect):
    """FREE cells overlapping the rect with their overlap boxes and measures.

    The overlap measure is taken in the rect's intrinsic dimension, so
    degenerate (point or segment) boxes sample correctly: a degenerate axis
    pins the coordinate and contributes unit measure via the cell containing
    it under the floor convention.
    """
    res = grid.resolution
    ox, oy = grid.origin

    def axis_span(lo, hi, o, count):
        c0 = max(0, math.floor((lo - o) / res))
        c1 = min(count - 1, math.floor((hi - o) / res))
        return c0, c1

    c0, c1 = axis_span(rect.x_min, rect.x_max, ox, grid.width)
    r0, r1 = axis_span(rect.y_min, rect.y_max, oy, grid.height)
    cells = []
    boxes = []
    measures = []
    degen_x = rect.x_max == rect.x_min
    degen_y = rect.y_max == rect.y_min
    for row in range(r0, r1 + 1):
        cell_y0 = oy + row * res
        if degen_y:
            if not (cell_y0 <= rect.y_min < cell_y0 + res):
                continue
            y_lo = y_hi = rect.y_min
            hy = 1.0
        else:
            y_lo = max(rect.y_min, cell_y0)
            y_hi = min(rect.y_max, cell_y0 + res)
            hy = y_hi - y_lo
            if hy <= 0.0:
                continue
        for col in range(c0, c1 + 1):
            if grid.cells[row, col] != FREE:
                continue
            cell_x0 = ox + col * res
            if degen_x:
                if not (cell_x0 <= rect.x_min < cell_x0 + res):
                    continue
                x_lo = x_hi = rect.x_min
                hx = 1.0
            else:
                x_lo = max(rect.x_min, cell_x0)
                x_hi = min(rect.x_max, cell_x0 + res)
                hx = x_hi - x_lo
                if hx <= 0.0:
                    continue
            cells.append((col, row))
            boxes.append((x_lo, y_lo, x_hi, y_hi))
            measures.append(hx * hy)
    return cells, np.asarray(boxes, dtype=float).reshape(-1, 4), np.asarray(measures, dtype=float)


def _inject(
    pset: ParticleSet,
    box: TextBox,
    policy: InjectionPolicy,
    semmap: AbstractSemanticMap,
    seed_or_rng,
    now: float = 0.0,
    last_fired: dict | None = None,
):
    """Injection core; returns (new_set, replaced_indices). replaced_indices
    is None when the call was a no-op (rho 0 or cooldown)."""
    n = pset.n
    k = math.ceil(policy.rho * n)
    if k == 0:
        return pset, None
    if last_fired is not None and box.tag in last_fired and now - last_fired[box.tag] < policy.cooldown:
        return pset, None
    _, boxes, measures = _injection_cells(semmap.grid, box.rect)
    if measures.size == 0 or measures.sum() <= 0.0:
        raise EmptyInjectionRegionError(f"text box {box.tag!r} covers no FREE cell")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else make_rng(seed_or_rng)

    replaced = np.argsort(pset.weights, kind="stable")[:k]
    pick = rng.choice(measures.size, size=k, p=measures / measures.sum())
    frac = rng.uniform(0.0, 1.0, size=(k, 2))
    x = boxes[pick, 0] + frac[:, 0] * (boxes[pick, 2] - boxes[pick, 0])
    y = boxes[pick, 1] + frac[:, 1] * (boxes[pick, 3] - boxes[pick, 1])
    theta = wrap_angle(rng.uniform(-math.pi, math.pi, size=k))

    poses = pset.poses.copy()
    poses[replaced] = np.column_stack([x, y, theta])
    weights = pset.weights.copy()
    weights[replaced] = pset.weights.mean()
    weights = weights / weights.sum()
    new = pset.derived(poses, weights, f"inject[{box.tag}]")
    return new, replaced


def inject_text_particles(
    pset: ParticleSet,
    box: TextBox,
    policy: InjectionPolicy,
    semmap: AbstractSemanticMap,
    seed_or_rng,
    now: float = 0.0,
    last_fired: dict | None = None,
) -> ParticleSet:
    """Replace the ceil(rho*n) lowest-weight particles with samples drawn
    uniformly from the text box's FREE area (reciprocal sampling).

    Replaced particles take the current mean weight, then weights are
    renormalized; particle count never changes. Returns the input set
    unchanged (same object) when rho is 0 or the tag re-fired within its
    cooldown window.
    """
    new, _ = _inject(pset, box, policy, semmap, seed_or_rng, now=now, last_fired=last_fired)
    return new


def estimate_pose(pset: ParticleSet) -> tuple[Pose2D, np.ndarray]:
    """Weighted mean pose with a 3x3 covariance.

    The heading mean is circular (atan2 of mean sin/cos) and heading
    residuals are wrapped before entering the covariance.
    """
    w = pset.weights
    x = float(np.dot(w, pset.poses[:, 0]))
    y = float(np.dot(w, pset.poses[:, 1]))
    theta = float(math.atan2(np.dot(w, np.sin(pset.poses[:, 2])), np.dot(w, np.cos(pset.poses[:, 2]))))
    dev = pset.poses - np.array([x, y, theta])
    dev[:, 2] = wrap_angle(dev[:, 2])
    cov = np.einsum("n,ni,nj->ij", w, dev, dev)
    return Pose2D(x, y, theta), cov
