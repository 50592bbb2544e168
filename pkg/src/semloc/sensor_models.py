"""Per-particle likelihood factors from range scans, object detections and
text detections.

All factors are strictly positive and finite for valid inputs so a single
measurement can never kill a particle outright (filter-death guard). The
functions are pure; batch variants over an (n, 3) pose array are the primal
code path and the scalar spec'd operations delegate to them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, wrap_angle
from .grid import OCCUPIED, OccupancyGrid
from .semmap import AbstractSemanticMap

FACTOR_FLOOR = 1e-12  # keeps factors positive even with z_rand_weight = 0


@dataclass(frozen=True)
class RangeScan:
    angles: np.ndarray  # radians, sensor frame
    ranges: np.ndarray  # meters
    range_max: float

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        ranges = np.asarray(self.ranges, dtype=float)
        if angles.shape != ranges.shape:
            raise ValueError("angles and ranges must have equal length")
        if ranges.size and (ranges.min() < 0.0 or ranges.max() > self.range_max + 1e-9):
            raise ValueError("ranges must lie in [0, range_max]")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "ranges", ranges)


@dataclass(frozen=True)
class ObjectDetection:
    class_label: str
    bearing: float  # radians in robot frame, wrapped
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bearing", wrap_angle(self.bearing))


@dataclass(frozen=True)
class TextDetection:
    raw_text: str
    confidence: float = 1.0


@dataclass(frozen=True)
class SemanticModelParams:
    gamma: float = 2.0  # sharpness exponent >= 1
    miss_penalty: float = 0.5  # factor when the detected class is absent from the map
    min_factor: float = 0.05  # floor for a single detection's factor


@dataclass
class LikelihoodField:
    """Distance-to-nearest-OCCUPIED-cell field over cell centers.

    distances[row, col] is meters; +inf where the grid has no occupied cell
    at all. Evaluation clamps distances at max_eval_range, which bounds the
    penalty a single beam can contribute.
    """

    grid: OccupancyGrid
    distances: np.ndarray
    sigma_hit: float
    z_rand_weight: float
    max_eval_range: float


def _edt_sq_1d(f: np.ndarray) -> np.ndarray:
    """Exact 1D squared distance transform (lower envelope of parabolas).

    f holds squared source distances (may be +inf); returns, per index i,
    min_q (i - q)^2 + f[q].
    """
    n = f.size
    out = np.full(n, np.inf)
    v = np.zeros(n, dtype=int)  # parabola apex indices
    z = np.zeros(n + 1)  # envelope breakpoints
    k = -1
    for q in range(n):
        fq = f[q]
        if not np.isfinite(fq):
            continue
        while k >= 0:
            p = v[k]
            s = ((fq + q * q) - (f[p] + p * p)) / (2.0 * (q - p))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = -np.inf if k == 0 else s
        z[k + 1] = np.inf
    if k < 0:
        return out  # no finite source in this line
    k = 0
    for i in range(n):
        while z[k + 1] < i:
            k += 1
        p = v[k]
        out[i] = (i - p) * (i - p) + f[p]
    return out


def exact_distance_transform(occupied: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance (in cells) to the nearest True entry.

    Two passes: a vertical sweep producing per-column nearest distances, then
    a per-row parabola envelope over the squared column distances.
    """
    occ = np.asarray(occupied, dtype=bool)
    h, w = occ.shape
    g = np.full((h, w), np.inf)
    g[occ] = 0.0
    for i in range(1, h):  # downward sweep
        g[i] = np.minimum(g[i], g[i - 1] + 1.0)
    for i in range(h - 2, -1, -1):  # upward sweep
        g[i] = np.minimum(g[i], g[i + 1] + 1.0)
    g_sq = np.square(g)
    out = np.empty((h, w))
    for i in range(h):
        out[i] = _edt_sq_1d(g_sq[i])
    return np.sqrt(out)


def build_likelihood_field(
    grid: OccupancyGrid,
    sigma_hit: float = 0.2,
    z_rand_weight: float = 0.05,
    max_eval_range: float = 2.0,
) -> LikelihoodField:
    """Precompute the exact distance field used by the geometric model."""
    if sigma_hit <= 0.0:
        raise ValueError("sigma_hit must be > 0")
    if not 0.0 <= z_rand_weight < 1.0:
        raise ValueError("z_rand_weight must lie in [0, 1)")
    distances = exact_distance_transform(grid.cells == OCCUPIED) * grid.resolution
    return LikelihoodField(
        grid=grid,
        distances=distances,
        sigma_hit=float(sigma_hit),
        z_rand_weight=float(z_rand_weight),
        max_eval_range=float(max_eval_range),
    )


def geometric_weights(
    field: LikelihoodField, poses: np.ndarray, scan: RangeScan, stride: int = 10
) -> np.ndarray:
    """Likelihood-field factor for each pose in an (n, 3) array.

    Every stride-th beam with range < range_max contributes
    (1 - z_rand) * exp(-d^2 / (2 sigma^2)) + z_rand / range_max, where d is
    the field distance at the beam endpoint; endpoints outside the grid use
    the z_rand term alone. Beams at range_max carry no information and are
    skipped, so a scan of only max-range beams yields factor 1.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    n = poses.shape[0]
    sel = np.arange(0, scan.ranges.size, stride)
    sel = sel[scan.ranges[sel] < scan.range_max]
    if sel.size == 0:
        return np.ones(n)

    angles = scan.angles[sel]
    ranges = scan.ranges[sel]
    grid = field.grid
    a = poses[:, 2:3] + angles[None, :]
    ex = poses[:, 0:1] + ranges[None, :] * np.cos(a)
    ey = poses[:, 1:2] + ranges[None, :] * np.sin(a)

    cols = np.floor((ex - grid.origin[0]) / grid.resolution).astype(int)
    rows = np.floor((ey - grid.origin[1]) / grid.resolution).astype(int)
    inside = (cols >= 0) & (cols < grid.width) & (rows >= 0) & (rows < grid.height)

    d = np.full(ex.shape, field.max_eval_range)
    d[inside] = np.minimum(field.distances[rows[inside], cols[inside]], field.max_eval_range)

    z_rand = field.z_rand_weight
    rand_term = z_rand / scan.range_max
    hit = (1.0 - z_rand) * np.exp(-0.5 * np.square(d) / (field.sigma_hit**2))
    beam = hit + rand_term
    beam[~inside] = rand_term
    beam = np.maximum(beam, FACTOR_FLOOR)
    return np.prod(beam, axis=1)


def geometric_weight(field: LikelihoodField, pose: Pose2D, scan: RangeScan, stride: int = 10) -> float:
    return float(geometric_weights(field, pose.as_array()[None, :], scan, stride)[0])


def semantic_weights(
    semmap: AbstractSemanticMap,
    poses: np.ndarray,
    detections,
    params: SemanticModelParams,
) -> np.ndarray:
    """Cosine-alignment factor between detected headings and map objects.

    For each detection, the best-aligned object of the detected class sets
    c* = max cos(angle between detected heading and the direction to the
    object center); the per-detection factor is
    max(min_factor, ((1 + c*) / 2) ** gamma). Objects closer to the particle
    than 1e-9 m are skipped (direction undefined); a class absent from the
    map, or with every object skipped, contributes miss_penalty. Factors
    multiply over detections; no detections means factor 1.
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    n = poses.shape[0]
    out = np.ones(n)
    for det in detections:
        objs = semmap.objects_of_class(det.class_label)
        if not objs:
            out *= params.miss_penalty
            continue
        centers = np.array([o.rect.center for o in objs])  # (k, 2)
        v = centers[None, :, :] - poses[:, None, 0:2]  # (n, k, 2)
        dist = np.linalg.norm(v, axis=2)
        valid = dist > 1e-9
        heading = poses[:, 2] + det.bearing
        u = np.stack([np.cos(heading), np.sin(heading)], axis=1)  # (n, 2)
        cos = np.einsum("nkj,nj->nk", v, u)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.where(valid, cos / np.where(valid, dist, 1.0), -np.inf)
        c_star = cos.max(axis=1)
        factor = np.maximum(params.min_factor, np.power(0.5 * (1.0 + np.clip(c_star, -1.0, 1.0)), params.gamma))
        factor = np.where(valid.any(axis=1), factor, params.miss_penalty)
        out *= factor
    return out


def semantic_weight(
    semmap: AbstractSemanticMap, pose: Pose2D, detections, params: SemanticModelParams
) -> float:
    return float(semantic_weights(semmap, pose.as_array()[None, :], detections, params)[0])


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def match_text(tags, det: TextDetection, max_edit_distance: int = 1) -> str | None:
    """Closest tag by edit distance, or None.

    Returns the tag with minimal Levenshtein distance to the raw detection
    when that distance is within max_edit_distance and the minimum is unique;
    ties and far matches return None -- an ambiguous reading must never
    inject particles at a guessed location.
    """
    best_tag = None
    best = None
    tied = False
    for tag in tags:
        d = levenshtein(tag, det.raw_text)
        if best is None or d < best:
            best, best_tag, tied = d, tag, False
        elif d == best:
            tied = True
    if best is None or tied or best > max_edit_distance:
        return None
    return best_tag
