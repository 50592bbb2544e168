import math

import numpy as np
import pytest

from semloc.detlog import OdometryDelta
from semloc.errors import (
    EmptyInjectionRegionError,
    NoFreeSpaceError,
    NoMatchingRoomError,
    NonPositiveFactorError,
)
from semloc.geometry import Rect
from semloc.grid import FREE, OCCUPIED, OccupancyGrid
from semloc.mcl import (
    InjectionPolicy,
    MotionNoise,
    ParticleSet,
    effective_sample_size,
    estimate_pose,
    infer_room_category,
    init_in_rooms,
    init_uniform,
    inject_text_particles,
    predict,
    resample_low_variance,
    systematic_indices,
    update,
)
from semloc.semmap import AbstractSemanticMap, Room, SemanticObject, TextBox


def open_map(w=40, h=40, res=0.1):
    cells = np.zeros((h, w), dtype=np.uint8)
    return AbstractSemanticMap(grid=OccupancyGrid(resolution=res, origin=(0.0, 0.0), cells=cells))


def pset_from(poses, weights=None):
    poses = np.asarray(poses, dtype=float)
    n = poses.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    return ParticleSet(poses=poses, weights=w)


class TestInitUniform:
    def test_counts_weights_and_free_cells(self, three_room_map):
        ps = init_uniform(three_room_map, 1000, seed=1)
        assert ps.n == 1000
        assert np.allclose(ps.weights, 1e-3)
        grid = three_room_map.grid
        for x, y in ps.poses[:, :2]:
            assert grid.is_free_at(x, y)

    def test_deterministic_per_seed(self, three_room_map):
        a = init_uniform(three_room_map, 128, seed=9)
        b = init_uniform(three_room_map, 128, seed=9)
        assert np.array_equal(a.poses, b.poses)
        c = init_uniform(three_room_map, 128, seed=10)
        assert not np.array_equal(a.poses, c.poses)

    def test_single_free_cell(self):
        cells = np.full((4, 4), OCCUPIED, dtype=np.uint8)
        cells[2, 1] = FREE
        m = AbstractSemanticMap(grid=OccupancyGrid(resolution=0.5, origin=(0.0, 0.0), cells=cells))
        ps = init_uniform(m, 50, seed=0)
        assert ((ps.poses[:, 0] >= 0.5) & (ps.poses[:, 0] <= 1.0)).all()
        assert ((ps.poses[:, 1] >= 1.0) & (ps.poses[:, 1] <= 1.5)).all()

    def test_no_free_space(self):
        cells = np.full((3, 3), OCCUPIED, dtype=np.uint8)
        m = AbstractSemanticMap(grid=OccupancyGrid(resolution=0.5, origin=(0.0, 0.0), cells=cells))
        with pytest.raises(NoFreeSpaceError):
            init_uniform(m, 10, seed=0)

    def test_headings_cover_the_circle(self, three_room_map):
        ps = init_uniform(three_room_map, 2000, seed=3)
        assert ps.poses[:, 2].min() < -3.0 and ps.poses[:, 2].max() > 3.0


class TestInferRoomCategory:
    def make_map(self):
        cells = np.zeros((100, 100), dtype=np.uint8)
        grid = OccupancyGrid(resolution=0.1, origin=(0.0, 0.0), cells=cells)
        objs = []
        # office: 3 chairs of 6 objects; kitchen: 1 chair of 4 objects
        for i in range(3):
            objs.append(SemanticObject(f"oc{i}", "chair", Rect(1 + i, 1, 1.5 + i, 1.5)))
        for i in range(3):
            objs.append(SemanticObject(f"od{i}", "desk", Rect(1 + i, 2, 1.5 + i, 2.5)))
        objs.append(SemanticObject("kc", "chair", Rect(1, 6, 1.5, 6.5)))
        for i, lbl in enumerate(["sink", "fridge", "table"]):
            objs.append(SemanticObject(f"k{i}", lbl, Rect(2 + i, 6, 2.5 + i, 6.5)))
        rooms = (
            Room("office1", (Rect(0.5, 0.5, 9.5, 3.0),), "office", None,
                 ("oc0", "oc1", "oc2", "od0", "od1", "od2")),
            Room("kitchen1", (Rect(0.5, 5.5, 9.5, 8.0),), "kitchen", None,
                 ("kc", "k0", "k1", "k2")),
        )
        return AbstractSemanticMap(grid=grid, objects=tuple(objs), rooms=rooms)

    def test_unique_class(self):
        m = self.make_map()
        assert infer_room_category(m, ["sink"]) == [("kitchen", 0.25)]

    def test_empty_detections(self):
        assert infer_room_category(self.make_map(), []) == []

    def test_shared_class_frequencies(self):
        m = self.make_map()
        got = infer_room_category(m, ["chair"])
        assert got == [("office", 0.5), ("kitchen", 0.25)]

    def test_multiset_counts_twice(self):
        m = self.make_map()
        got = dict(infer_room_category(m, ["chair", "chair"]))
        assert got["office"] == pytest.approx(1.0)


class TestInitInRooms:
    def test_all_inside_matching_room(self, three_room_map):
        ps = init_in_rooms(three_room_map, ["kitchen"], 300, seed=2)
        room = three_room_map.rooms_of_category("kitchen")[0]
        for x, y in ps.poses[:, :2]:
            assert room.contains(x, y)

    def test_area_weighted_split(self):
        cells = np.full((40, 60), OCCUPIED, dtype=np.uint8)
        grid = OccupancyGrid(resolution=0.1, origin=(0.0, 0.0), cells=cells)
        from semloc.grid import fill_rect

        fill_rect(grid, 0.0, 0.0, 4.0, 2.0, FREE)  # room a: 8 m^2
        fill_rect(grid, 4.0, 0.0, 6.0, 1.0, FREE)  # room b: 2 m^2... use 2:1 in cells below
        rooms = (
            Room("a", (Rect(0.0, 0.0, 4.0, 2.0),), "office"),
            Room("b", (Rect(4.0, 0.0, 6.0, 2.0),), "office"),
        )
        m = AbstractSemanticMap(grid=grid, rooms=rooms)
        # free cells: a has 800, b has 200 -> expected split 0.8/0.2
        counts = []
        for seed in range(10):
            ps = init_in_rooms(m, ["office"], 300, seed=seed)
            counts.append((ps.poses[:, 0] < 4.0).mean())
        frac = np.mean(counts)
        p = 0.8
        tol = 3 * math.sqrt(p * (1 - p) / (300 * 10))
        assert abs(frac - p) < tol

    def test_no_matching_room(self, three_room_map):
        with pytest.raises(NoMatchingRoomError):
            init_in_rooms(three_room_map, ["garage"], 10, seed=0)


class TestPredict:
    def test_zero_delta_zero_noise_identity(self):
        ps = pset_from([[1.0, 2.0, 0.5], [3.0, 1.0, -1.0]])
        out = predict(ps, OdometryDelta(0.0, 0.0, 0.0), MotionNoise(0, 0, 0, 0), seed_or_rng=0)
        assert np.array_equal(out.poses, ps.poses)

    def test_exact_translation(self):
        ps = pset_from([[0.0, 0.0, 0.0], [2.0, 5.0, 0.0]])
        out = predict(ps, OdometryDelta(0.0, 1.0, 0.0), MotionNoise(0, 0, 0, 0), seed_or_rng=0)
        assert np.allclose(out.poses[:, 0], ps.poses[:, 0] + 1.0)
        assert np.allclose(out.poses[:, 1], ps.poses[:, 1])

    def test_rotation_then_translation(self):
        ps = pset_from([[0.0, 0.0, 0.0]])
        out = predict(ps, OdometryDelta(math.pi / 2, 1.0, -math.pi / 2), MotionNoise(0, 0, 0, 0), 0)
        assert out.poses[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert out.poses[0, 1] == pytest.approx(1.0)
        assert out.poses[0, 2] == pytest.approx(0.0, abs=1e-12)

    def test_sample_mean_matches_delta(self):
        n = 10_000
        ps = pset_from(np.zeros((n, 3)))
        noise = MotionNoise(0.01, 0.01, 0.01, 0.01)
        out = predict(ps, OdometryDelta(0.0, 1.0, 0.0), noise, seed_or_rng=4)
        displacement = np.hypot(out.poses[:, 0], out.poses[:, 1]).mean()
        std_trans = math.sqrt(0.01 * 1.0)
        assert abs(displacement - 1.0) < 3 * std_trans / math.sqrt(n)

    def test_wall_penalty_reweights(self):
        cells = np.zeros((10, 10), dtype=np.uint8)
        cells[:, 5:] = OCCUPIED
        grid = OccupancyGrid(resolution=0.1, origin=(0.0, 0.0), cells=cells)
        ps = pset_from([[0.25, 0.5, 0.0], [0.44, 0.5, 0.0]])
        out = predict(ps, OdometryDelta(0.0, 0.1, 0.0), MotionNoise(0, 0, 0, 0), 0, grid=grid)
        # second particle crosses into the wall: weight ratio 10:1 after penalty
        assert out.weights[0] == pytest.approx(10 * out.weights[1])
        assert out.weights.sum() == pytest.approx(1.0)


class TestUpdate:
    def test_equal_factors_leave_weights(self):
        ps = pset_from(np.zeros((4, 3)))
        out = update(ps, np.full(4, 3.7))
        assert np.allclose(out.weights, 0.25)

    def test_single_doubled_factor(self):
        ps = pset_from(np.zeros((4, 3)))
        out = update(ps, [2.0, 1.0, 1.0, 1.0])
        assert np.allclose(out.weights, [0.4, 0.2, 0.2, 0.2])

    def test_normalization(self):
        rng = np.random.default_rng(0)
        ps = pset_from(np.zeros((50, 3)), weights=np.full(50, 0.02))
        out = update(ps, rng.uniform(0.1, 5.0, size=50))
        assert abs(out.weights.sum() - 1.0) < 1e-9

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        ps = pset_from(np.zeros((30, 3)))
        f = rng.uniform(0.5, 2.0, size=30)
        a = update(ps, f).weights
        b = update(ps, f * 123.456).weights
        assert np.allclose(a, b, atol=1e-12)

    def test_rejects_nonpositive(self):
        ps = pset_from(np.zeros((3, 3)))
        with pytest.raises(NonPositiveFactorError):
            update(ps, [1.0, 0.0, 1.0])
        with pytest.raises(NonPositiveFactorError):
            update(ps, [1.0, -2.0, 1.0])
        with pytest.raises(ValueError):
            update(ps, [1.0, 1.0])


class TestESS:
    def test_uniform(self):
        ps = pset_from(np.zeros((100, 3)))
        assert effective_sample_size(ps) == pytest.approx(100.0)

    def test_degenerate(self):
        eps = 1e-12
        w = np.full(10, eps)
        w[0] = 1.0 - 9 * eps
        ps = pset_from(np.zeros((10, 3)), weights=w)
        assert effective_sample_size(ps) == pytest.approx(1.0, abs=1e-6)

    def test_two_effective(self):
        w = np.array([0.5, 0.5, 1e-15, 1e-15])
        ps = pset_from(np.zeros((4, 3)), weights=w / w.sum())
        assert effective_sample_size(ps) == pytest.approx(2.0, abs=1e-9)


def closed_form_counts(weights, u):
    """Independent enumeration of systematic resampling copy counts."""
    n = len(weights)
    cum = np.concatenate([[0.0], np.cumsum(weights)])
    cum[-1] = 1.0
    counts = np.zeros(n, dtype=int)
    for k in range(n):
        p = u + k / n
        for i in range(n):
            if cum[i] <= p < cum[i + 1]:
                counts[i] += 1
                break
    return counts


class TestResample:
    def test_uniform_weights_copy_each_once(self):
        ps = pset_from(np.arange(15).reshape(5, 3).astype(float))
        out = resample_low_variance(ps, seed_or_rng=0)
        assert np.array_equal(np.sort(out.poses, axis=0), np.sort(ps.poses, axis=0))
        assert np.allclose(out.weights, 0.2)

    def test_three_one_split_for_any_u(self):
        # 4 grid points over cumulative weights (0.75, 1.0): 3 land in the
        # first interval and 1 in the second, wherever u falls in [0, 1/4)
        w = np.array([0.75, 0.25])
        for u in np.linspace(0.0, 0.2499, 23):
            idx = systematic_indices(w, float(u), n_out=4)
            counts = np.bincount(idx, minlength=2)
            assert counts.tolist() == [3, 1]

    def test_all_weight_on_one_particle(self):
        eps = 1e-15
        w = np.array([eps, 1.0 - 2 * eps, eps])
        out = resample_low_variance(pset_from(np.arange(9).reshape(3, 3).astype(float), w), 1)
        assert np.allclose(out.poses, out.poses[0])

    def test_matches_closed_form_enumeration(self):
        rng = np.random.default_rng(8)
        for n in range(2, 9):
            for _ in range(20):
                # power-of-two weights make the comparison float-exact
                raw = rng.integers(1, 16, size=n)
                weights = raw / raw.sum()
                u = float(rng.uniform(0, 1.0 / n))
                idx = systematic_indices(weights, u)
                got = np.bincount(idx, minlength=n)
                assert np.array_equal(got, closed_form_counts(weights, u))


class TestInject:
    def make_map_with_box(self):
        m = open_map()
        box = TextBox("sign", Rect(1.0, 1.0, 2.0, 2.0))
        return m.with_text_boxes([box]), box

    def spread_set(self, n=100, seed=0):
        rng = np.random.default_rng(seed)
        poses = np.column_stack(
            [rng.uniform(0, 4, n), rng.uniform(0, 4, n), rng.uniform(-math.pi, math.pi, n)]
        )
        w = rng.uniform(0.1, 1.0, n)
        return ParticleSet(poses=poses, weights=w / w.sum())

    def test_replaced_count_and_conservation(self):
        m, box = self.make_map_with_box()
        ps = self.spread_set()
        out = inject_text_particles(ps, box, InjectionPolicy(rho=0.2, cooldown=0.0), m, 3)
        assert out.n == ps.n
        inside = (
            (out.poses[:, 0] >= 1.0)
            & (out.poses[:, 0] <= 2.0)
            & (out.poses[:, 1] >= 1.0)
            & (out.poses[:, 1] <= 2.0)
        )
        assert inside.sum() >= 20
        assert abs(out.weights.sum() - 1.0) < 1e-9

    def test_rho_zero_is_noop(self):
        m, box = self.make_map_with_box()
        ps = self.spread_set()
        out = inject_text_particles(ps, box, InjectionPolicy(rho=0.0, cooldown=0.0), m, 3)
        assert out is ps

    def test_cooldown_suppresses_repeat(self):
        m, box = self.make_map_with_box()
        ps = self.spread_set()
        policy = InjectionPolicy(rho=0.2, cooldown=5.0)
        fired = {"sign": 10.0}
        out = inject_text_particles(ps, box, policy, m, 3, now=12.0, last_fired=fired)
        assert out is ps
        out2 = inject_text_particles(ps, box, policy, m, 3, now=15.5, last_fired=fired)
        assert out2 is not ps

    def test_replaces_lowest_weight_particles(self):
        m, box = self.make_map_with_box()
        poses = np.tile(np.array([3.5, 3.5, 0.0]), (10, 1))
        w = np.arange(1, 11, dtype=float)
        ps = ParticleSet(poses=poses, weights=w / w.sum())
        out = inject_text_particles(ps, box, InjectionPolicy(rho=0.3, cooldown=0.0), m, 3)
        moved = np.flatnonzero(np.abs(out.poses[:, 0] - 3.5) > 1e-9)
        assert set(moved) == {0, 1, 2}  # the three lowest weights

    def test_empty_region_raises(self):
        m, _ = self.make_map_with_box()
        m.grid.cells[10:20, 10:20] = OCCUPIED
        box = TextBox("sign", Rect(1.0, 1.0, 1.9, 1.9))
        ps = self.spread_set()
        with pytest.raises(EmptyInjectionRegionError):
            inject_text_particles(ps, box, InjectionPolicy(rho=0.2, cooldown=0.0), m, 3)

    def test_degenerate_point_box(self):
        m, _ = self.make_map_with_box()
        box = TextBox("pt", Rect(1.25, 1.25, 1.25, 1.25))
        ps = self.spread_set()
        out = inject_text_particles(ps, box, InjectionPolicy(rho=0.1, cooldown=0.0), m, 3)
        replaced = np.flatnonzero(out.poses[:, 0] == 1.25)
        assert replaced.size == 10
        assert (out.poses[replaced, 1] == 1.25).all()

    def test_bimodal_mass_shifts_to_box_wing(self):
        # wrong-wing mode heavier; injection into the correct wing strictly
        # increases the correct-wing posterior mass
        m, _ = self.make_map_with_box()
        box = TextBox("sign", Rect(0.5, 0.5, 1.5, 1.5))
        m = m.with_text_boxes([box])
        rng = np.random.default_rng(0)
        wrong = np.column_stack([rng.uniform(2.5, 3.5, 70), rng.uniform(2.5, 3.5, 70), np.zeros(70)])
        right = np.column_stack([rng.uniform(0.5, 1.5, 30), rng.uniform(0.5, 1.5, 30), np.zeros(30)])
        poses = np.vstack([wrong, right])
        w = np.concatenate([np.full(70, 0.9 / 70), np.full(30, 0.1 / 30)])
        ps = ParticleSet(poses=poses, weights=w)
        before = ps.weights[ps.poses[:, 0] < 2.0].sum()
        out = inject_text_particles(ps, box, InjectionPolicy(rho=0.25, cooldown=0.0), m, 1)
        after = out.weights[out.poses[:, 0] < 2.0].sum()
        assert after > before


class TestEstimatePose:
    def test_identical_particles(self):
        ps = pset_from(np.tile([1.0, 2.0, 0.7], (5, 1)))
        mean, cov = estimate_pose(ps)
        assert (mean.x, mean.y, mean.theta) == pytest.approx((1.0, 2.0, 0.7))
        assert np.allclose(cov, 0.0)

    def test_circular_mean_across_pi(self):
        a = math.radians(175)
        ps = pset_from([[0, 0, a], [0, 0, -a]])
        mean, _ = estimate_pose(ps)
        assert mean.theta == pytest.approx(math.pi)

    def test_covariance_matches_direct_computation(self):
        rng = np.random.default_rng(2)
        poses = np.column_stack(
            [rng.normal(1.0, 0.3, 400), rng.normal(-2.0, 0.1, 400), rng.normal(0.4, 0.05, 400)]
        )
        w = rng.uniform(0.5, 1.5, 400)
        ps = pset_from(poses, w / w.sum())
        mean, cov = estimate_pose(ps)
        wn = ps.weights
        dev = poses - [mean.x, mean.y, mean.theta]
        want = np.einsum("n,ni,nj->ij", wn, dev, dev)
        assert np.allclose(cov, want, atol=1e-12)
