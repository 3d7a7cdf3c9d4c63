import numpy as np
import pytest

from dfgof.transport import (
    AnchorSet,
    brute_force_assignment,
    generate_anchors,
    rescale_unit_cube,
    solve_assignment,
    transported_ecdf,
    transported_points,
)


class TestGenerateAnchors:
    def test_halton_base2_first_points(self):
        out = generate_anchors(4, 1, "halton")
        assert np.allclose(out.points[:, 0], [0.5, 0.25, 0.75, 0.125])

    def test_halton_second_axis_uses_base3(self):
        out = generate_anchors(3, 2, "halton")
        assert np.allclose(out.points[:, 0], [0.5, 0.25, 0.75])
        assert np.allclose(out.points[:, 1], [1 / 3, 2 / 3, 1 / 9])

    def test_random_is_deterministic_per_seed(self):
        a = generate_anchors(20, 2, "random", seed=42)
        b = generate_anchors(20, 2, "random", seed=42)
        assert np.array_equal(a.points, b.points)
        c = generate_anchors(20, 2, "random", seed=43)
        assert not np.array_equal(a.points, c.points)

    def test_random_requires_seed(self):
        with pytest.raises(ValueError, match="seed"):
            generate_anchors(5, 1, "random")

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            generate_anchors(5, 1, "sobol")

    def test_points_must_be_distinct(self):
        with pytest.raises(ValueError, match="distinct"):
            AnchorSet(points=np.array([[0.5], [0.5]]), mode="halton")


class TestSolveAssignment:
    def test_identity_when_clouds_coincide(self):
        anchors = generate_anchors(6, 2, "halton")
        out = solve_assignment(anchors.points, anchors)
        assert np.array_equal(out.sigma, np.arange(6))
        assert out.cost == pytest.approx(0.0, abs=1e-12)

    def test_two_point_crossing(self):
        anchors = AnchorSet(points=np.array([[0.8], [0.2]]), mode="halton")
        out = solve_assignment(np.array([[0.1], [0.9]]), anchors)
        assert np.array_equal(out.sigma, np.array([1, 0]))
        assert out.cost == pytest.approx(0.2, abs=1e-12)

    def test_matches_brute_force_on_small_instances(self):
        for seed in range(25):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 8))
            p = int(rng.integers(1, 4))
            x = rng.uniform(0.0, 1.0, size=(n, p))
            anchors = generate_anchors(n, p, "random", seed=seed + 1000)
            fast = solve_assignment(x, anchors)
            slow = brute_force_assignment(x, anchors)
            assert fast.cost == slow.cost

    def test_cost_never_beaten_by_random_permutations(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0.0, 1.0, size=(30, 2))
        anchors = generate_anchors(30, 2, "halton")
        best = solve_assignment(x, anchors)
        for _ in range(50):
            sigma = rng.permutation(30)
            cost = np.linalg.norm(x - anchors.points[sigma], axis=1).sum()
            assert best.cost <= cost + 1e-12

    def test_row_shuffle_invariance(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(0.0, 1.0, size=(15, 2))
        anchors = generate_anchors(15, 2, "halton")
        base = solve_assignment(x, anchors)
        perm = rng.permutation(15)
        shuffled = solve_assignment(x[perm], anchors)
        assert shuffled.cost == pytest.approx(base.cost, abs=1e-12)
        base_pairs = {(i, s) for i, s in enumerate(base.sigma)}
        shuffled_pairs = {(int(perm[i]), s) for i, s in enumerate(shuffled.sigma)}
        assert base_pairs == shuffled_pairs

    def test_non_finite_rejected(self):
        anchors = generate_anchors(3, 1, "halton")
        with pytest.raises(ValueError, match="finite"):
            solve_assignment(np.array([[0.1], [np.inf], [0.4]]), anchors)

    def test_shape_mismatch_rejected(self):
        anchors = generate_anchors(3, 1, "halton")
        with pytest.raises(ValueError):
            solve_assignment(np.array([[0.1], [0.2]]), anchors)


class TestBruteForce:
    def test_single_point(self):
        anchors = AnchorSet(points=np.array([[0.3]]), mode="halton")
        out = brute_force_assignment(np.array([[0.9]]), anchors)
        assert np.array_equal(out.sigma, np.array([0]))

    def test_never_worse_than_identity(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0.0, 1.0, size=(6, 2))
        anchors = generate_anchors(6, 2, "halton")
        out = brute_force_assignment(x, anchors)
        identity_cost = np.linalg.norm(x - anchors.points, axis=1).sum()
        assert out.cost <= identity_cost + 1e-12

    def test_size_guard(self):
        anchors = generate_anchors(9, 1, "halton")
        with pytest.raises(ValueError, match="n <= 8"):
            brute_force_assignment(np.linspace(0, 1, 9)[:, None], anchors)


class TestTransportedEcdf:
    def test_upper_corner_is_one(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(0.0, 1.0, size=(12, 2))
        anchors = generate_anchors(12, 2, "halton")
        assignment = solve_assignment(x, anchors)
        assert transported_ecdf(assignment, anchors, np.array([1.0, 1.0])) == 1.0

    def test_below_smallest_coordinate_is_zero(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0.0, 1.0, size=(10, 2))
        anchors = generate_anchors(10, 2, "halton")
        assignment = solve_assignment(x, anchors)
        low = anchors.points.min(axis=0)
        probe = np.array([low[0] / 2.0, 1.0])
        assert transported_ecdf(assignment, anchors, probe) == 0.0

    def test_equals_anchor_ecdf_everywhere(self):
        rng = np.random.default_rng(10)
        x = rng.uniform(0.0, 1.0, size=(25, 2))
        anchors = generate_anchors(25, 2, "random", seed=77)
        assignment = solve_assignment(x, anchors)
        for probe in rng.uniform(0.0, 1.0, size=(100, 2)):
            anchor_value = float(np.all(anchors.points <= probe, axis=1).mean())
            assert transported_ecdf(assignment, anchors, probe) == anchor_value

    def test_transported_points_are_matched_anchors(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0.0, 1.0, size=(8, 2))
        anchors = generate_anchors(8, 2, "halton")
        assignment = solve_assignment(x, anchors)
        pts = transported_points(assignment, anchors)
        assert np.array_equal(pts, anchors.points[assignment.sigma])


class TestRescale:
    def test_maps_bounds_to_unit_cube(self):
        rng = np.random.default_rng(12)
        x = rng.normal(5.0, 3.0, size=(40, 2))
        out, lo, hi = rescale_unit_cube(x)
        assert np.allclose(out.min(axis=0), 0.0)
        assert np.allclose(out.max(axis=0), 1.0)
        assert np.allclose(lo, x.min(axis=0))
        assert np.allclose(hi, x.max(axis=0))

    def test_monotone_per_coordinate(self):
        x = np.array([[1.0, 10.0], [3.0, -2.0], [2.0, 4.0]])
        out, _, _ = rescale_unit_cube(x)
        for j in range(2):
            assert np.array_equal(np.argsort(out[:, j]), np.argsort(x[:, j]))

    def test_constant_column_maps_to_half(self):
        x = np.array([[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]])
        out, _, _ = rescale_unit_cube(x)
        assert np.allclose(out[:, 1], 0.5)
