import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semloc.geometry import Pose2D, Rect
from semloc.grid import FREE, OCCUPIED, OccupancyGrid
from semloc.semmap import AbstractSemanticMap, SemanticObject
from semloc.sensor_models import (
    RangeScan,
    SemanticModelParams,
    TextDetection,
    ObjectDetection,
    build_likelihood_field,
    exact_distance_transform,
    geometric_weight,
    geometric_weights,
    levenshtein,
    match_text,
    semantic_weight,
)


def brute_force_distance(occupied: np.ndarray) -> np.ndarray:
    """O(n^2) nearest-occupied scan; the oracle for the two-pass transform."""
    h, w = occupied.shape
    occ = np.argwhere(occupied)
    if occ.shape[0] == 0:
        return np.full((h, w), np.inf)
    rr, cc = np.mgrid[0:h, 0:w]
    d2 = (rr[..., None] - occ[:, 0]) ** 2 + (cc[..., None] - occ[:, 1]) ** 2
    return np.sqrt(d2.min(axis=2))


def grid_from_mask(mask: np.ndarray, resolution=0.05) -> OccupancyGrid:
    cells = np.where(mask, OCCUPIED, FREE).astype(np.uint8)
    return OccupancyGrid(resolution=resolution, origin=(0.0, 0.0), cells=cells)


class TestDistanceTransform:
    def test_single_occupied_cell_collinear(self):
        mask = np.zeros((9, 9), dtype=bool)
        mask[4, 4] = True
        field = build_likelihood_field(grid_from_mask(mask), sigma_hit=0.2)
        assert field.distances[4, 7] == pytest.approx(0.15)  # 3 cells at 0.05 m
        assert field.distances[4, 4] == 0.0

    def test_all_free_grid_is_inf(self):
        mask = np.zeros((5, 5), dtype=bool)
        field = build_likelihood_field(grid_from_mask(mask), sigma_hit=0.2, z_rand_weight=0.05)
        assert np.isinf(field.distances).all()
        scan = RangeScan(angles=[0.0], ranges=[1.0], range_max=5.0)
        w = geometric_weight(field, Pose2D(0.1, 0.1, 0.0), scan, stride=1)
        assert w == pytest.approx(0.05 / 5.0, rel=1e-9)  # falls back to the z_rand term

    def test_matches_brute_force_on_random_grids(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            h, w = rng.integers(2, 33, size=2)
            mask = rng.uniform(size=(h, w)) < rng.uniform(0.02, 0.3)
            got = exact_distance_transform(mask)
            want = brute_force_distance(mask)
            assert np.array_equal(got, want)

    def test_zero_exactly_on_occupied(self):
        rng = np.random.default_rng(7)
        mask = rng.uniform(size=(20, 20)) < 0.2
        d = exact_distance_transform(mask)
        assert (d[mask] == 0.0).all()
        assert (d[~mask] > 0.0).all()


class TestGeometricWeight:
    def setup_method(self):
        mask = np.zeros((40, 40), dtype=bool)
        mask[:, 30] = True  # wall at x = 1.5 m
        self.grid = grid_from_mask(mask)
        self.field = build_likelihood_field(self.grid, sigma_hit=0.2, z_rand_weight=0.05)

    def test_perfect_endpoints_give_maximal_factor(self):
        # endpoints exactly on the wall: d = 0 for every evaluated beam
        pose = Pose2D(0.5, 1.0, 0.0)
        r = 30 * 0.05 + 0.025 - 0.5
        scan = RangeScan(angles=[0.0, 0.0, 0.0], ranges=[r, r, r], range_max=5.0)
        w = geometric_weight(self.field, pose, scan, stride=1)
        per_beam = 0.95 * 1.0 + 0.05 / 5.0
        assert w == pytest.approx(per_beam**3, rel=1e-12)

    def test_displaced_pose_scores_strictly_less(self):
        r = 30 * 0.05 + 0.025 - 0.5
        scan = RangeScan(angles=[0.0], ranges=[r], range_max=5.0)
        good = geometric_weight(self.field, Pose2D(0.5, 1.0, 0.0), scan, stride=1)
        bad = geometric_weight(self.field, Pose2D(0.5 - 0.7, 1.0, 0.0), scan, stride=1)
        assert bad < good

    def test_max_range_beams_are_skipped(self):
        scan = RangeScan(angles=[0.0, 1.0], ranges=[5.0, 5.0], range_max=5.0)
        w = geometric_weight(self.field, Pose2D(0.5, 1.0, 0.0), scan, stride=1)
        assert w == 1.0

    def test_out_of_grid_endpoint_uses_rand_term(self):
        scan = RangeScan(angles=[math.pi], ranges=[3.0], range_max=5.0)  # endpoint behind the map
        w = geometric_weight(self.field, Pose2D(0.5, 1.0, 0.0), scan, stride=1)
        assert w == pytest.approx(0.05 / 5.0, rel=1e-12)

    def test_stride_selects_every_kth_beam(self):
        angles = np.zeros(10)
        ranges = np.full(10, 30 * 0.05 + 0.025 - 0.5)
        scan = RangeScan(angles=angles, ranges=ranges, range_max=5.0)
        w1 = geometric_weight(self.field, Pose2D(0.5, 1.0, 0.0), scan, stride=5)
        per_beam = 0.95 + 0.05 / 5.0
        assert w1 == pytest.approx(per_beam**2, rel=1e-12)

    def test_monotone_in_endpoint_distance(self):
        # moving every endpoint farther from the wall never increases the factor
        pose = Pose2D(0.5, 1.0, 0.0)
        base = 30 * 0.05 + 0.025 - 0.5
        factors = []
        for shift in (0.0, 0.1, 0.2, 0.4, 0.8):
            scan = RangeScan(angles=[0.0], ranges=[base - shift], range_max=5.0)
            factors.append(geometric_weight(self.field, pose, scan, stride=1))
        assert all(a >= b for a, b in zip(factors, factors[1:]))

    def test_batch_positive_and_finite(self):
        rng = np.random.default_rng(0)
        poses = np.column_stack(
            [rng.uniform(0, 2, 200), rng.uniform(0, 2, 200), rng.uniform(-math.pi, math.pi, 200)]
        )
        scan = RangeScan(angles=np.linspace(-1, 1, 9), ranges=np.full(9, 1.0), range_max=5.0)
        w = geometric_weights(self.field, poses, scan, stride=2)
        assert (w > 0).all() and np.isfinite(w).all()


def single_object_map(label="door", cx=2.0, cy=0.0):
    cells = np.zeros((80, 80), dtype=np.uint8)
    grid = OccupancyGrid(resolution=0.1, origin=(-4.0, -4.0), cells=cells)
    obj = SemanticObject("x1", label, Rect(cx - 0.2, cy - 0.2, cx + 0.2, cy + 0.2))
    return AbstractSemanticMap(grid=grid, objects=(obj,))


class TestSemanticWeight:
    params = SemanticModelParams(gamma=1.0, miss_penalty=0.5, min_factor=0.01)

    def test_perfect_alignment_is_one(self):
        m = single_object_map(cx=2.0, cy=0.0)
        det = [ObjectDetection("door", bearing=0.0)]
        assert semantic_weight(m, Pose2D(0, 0, 0), det, self.params) == pytest.approx(1.0)

    def test_antipodal_hits_floor(self):
        m = single_object_map(cx=2.0, cy=0.0)
        det = [ObjectDetection("door", bearing=math.pi)]
        w = semantic_weight(m, Pose2D(0, 0, 0), det, self.params)
        assert w == pytest.approx(0.01)  # raw factor 0 floored at min_factor

    def test_best_aligned_object_wins(self):
        # two candidates; the better-aligned one sets the factor
        cells = np.zeros((80, 80), dtype=np.uint8)
        grid = OccupancyGrid(resolution=0.1, origin=(-4.0, -4.0), cells=cells)
        a = math.acos(0.9)
        b = math.acos(0.2)
        objs = (
            SemanticObject("a", "door", Rect(2 * math.cos(a) - 0.1, 2 * math.sin(a) - 0.1,
                                             2 * math.cos(a) + 0.1, 2 * math.sin(a) + 0.1)),
            SemanticObject("b", "door", Rect(2 * math.cos(b) - 0.1, 2 * math.sin(b) - 0.1,
                                             2 * math.cos(b) + 0.1, 2 * math.sin(b) + 0.1)),
        )
        m = AbstractSemanticMap(grid=grid, objects=objs)
        w = semantic_weight(m, Pose2D(0, 0, 0), [ObjectDetection("door", 0.0)], self.params)
        assert w == pytest.approx((1 + 0.9) / 2, abs=1e-9)

    def test_missing_class_pays_miss_penalty(self):
        m = single_object_map(label="door")
        w = semantic_weight(m, Pose2D(0, 0, 0), [ObjectDetection("sofa", 0.0)], self.params)
        assert w == pytest.approx(0.5)

    def test_empty_detections_is_one(self):
        m = single_object_map()
        assert semantic_weight(m, Pose2D(0, 0, 0), [], self.params) == 1.0

    def test_pose_on_object_center_skips_object(self):
        m = single_object_map(cx=1.0, cy=1.0)
        w = semantic_weight(m, Pose2D(1.0, 1.0, 0.0), [ObjectDetection("door", 0.0)], self.params)
        assert w == pytest.approx(self.params.miss_penalty)  # all candidates degenerate

    def test_rotation_invariance(self):
        # rotating map objects and pose about the pose position preserves the factor
        rng = np.random.default_rng(5)
        cells = np.zeros((100, 100), dtype=np.uint8)
        grid = OccupancyGrid(resolution=0.1, origin=(-5.0, -5.0), cells=cells)
        params = SemanticModelParams(gamma=2.0, miss_penalty=0.5, min_factor=0.05)
        for _ in range(25):
            px, py, pth = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-math.pi, math.pi)
            centers = rng.uniform(-3, 3, size=(3, 2))
            dets = [ObjectDetection("door", rng.uniform(-math.pi, math.pi))]

            def factor(rot):
                objs = []
                for i, (cx, cy) in enumerate(centers):
                    dx, dy = cx - px, cy - py
                    rx = px + dx * math.cos(rot) - dy * math.sin(rot)
                    ry = py + dx * math.sin(rot) + dy * math.cos(rot)
                    objs.append(SemanticObject(f"o{i}", "door", Rect(rx - 0.1, ry - 0.1, rx + 0.1, ry + 0.1)))
                m = AbstractSemanticMap(grid=grid, objects=tuple(objs))
                return semantic_weight(m, Pose2D(px, py, pth + rot), dets, params)

            rot = rng.uniform(-math.pi, math.pi)
            assert factor(rot) == pytest.approx(factor(0.0), abs=1e-12)

    def test_confidence_is_ignored_in_weighting(self):
        m = single_object_map(cx=2.0, cy=0.0)
        w_low = semantic_weight(m, Pose2D(0, 0, 0), [ObjectDetection("door", 0.0, confidence=0.1)], self.params)
        w_high = semantic_weight(m, Pose2D(0, 0, 0), [ObjectDetection("door", 0.0, confidence=1.0)], self.params)
        assert w_low == w_high


class TestMatchText:
    def test_exact_match(self):
        assert match_text(["2301", "2302"], TextDetection("2301"), 1) == "2301"

    def test_single_substitution(self):
        assert levenshtein("23O1", "2301") == 1
        assert match_text(["2301", "2302"], TextDetection("23O1"), 1) == "2301"

    def test_ambiguity_yields_none(self):
        # "230" is at distance 1 from both tags
        assert match_text(["2301", "2302"], TextDetection("230"), 1) is None

    def test_distance_cap(self):
        assert match_text(["2301"], TextDetection("9999"), 1) is None

    def test_empty_tag_list(self):
        assert match_text([], TextDetection("2301"), 1) is None

    @given(st.text(alphabet="0123456789", min_size=1, max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_equidistant_tags_never_match(self, raw):
        # two tags built to be equidistant from the detection
        tags = [raw + "A", raw + "B"]
        assert match_text(tags, TextDetection(raw), 2) is None


class TestLevenshtein:
    @pytest.mark.parametrize(
        "a,b,d",
        [("", "", 0), ("a", "", 1), ("kitten", "sitting", 3), ("2301", "2301", 0), ("ab", "ba", 2)],
    )
    def test_known_distances(self, a, b, d):
        assert levenshtein(a, b) == d

    @given(st.text(max_size=8), st.text(max_size=8))
    @settings(max_examples=80, deadline=None)
    def test_symmetry_and_bounds(self, a, b):
        d = levenshtein(a, b)
        assert d == levenshtein(b, a)
        assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
