import numpy as np
import pytest
from numpy.testing import assert_allclose

from prafd.geometry import (FeasibleRegionSpec, circle_circle_intersections,
                            circle_square_intersections, clamp_to_square,
                            is_feasible, layout_side_feasible,
                            min_pairwise_distance, nearest_feasible_point,
                            ray_circle_exit)
from prafd.oracles import grid_nearest_feasible


def region(hw=1.0, obstacles=(), radius=0.25):
    obs = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    return FeasibleRegionSpec(half_width=hw, obstacles=obs, radius=radius)


class TestPrimitives:
    def test_clamp(self):
        assert_allclose(clamp_to_square(np.array([2.0, -3.0]), 1.0), [1.0, -1.0])
        assert_allclose(clamp_to_square(np.array([0.2, 0.3]), 1.0), [0.2, 0.3])

    def test_feasibility(self):
        spec = region(obstacles=[[0.0, 0.0]])
        assert is_feasible(np.array([0.5, 0.5]), spec)
        assert not is_feasible(np.array([0.1, 0.0]), spec)   # inside disc
        assert not is_feasible(np.array([1.5, 0.0]), spec)   # outside square

    def test_boundary_counts_as_feasible(self):
        spec = region(obstacles=[[0.0, 0.0]])
        assert is_feasible(np.array([0.25, 0.0]), spec)
        assert is_feasible(np.array([1.0, 1.0]), spec)

    def test_ray_exit_is_nearest_rim_point(self):
        center = np.array([0.0, 0.0])
        p = ray_circle_exit(center, 0.5, np.array([0.3, 0.0]))
        assert_allclose(p, [0.5, 0.0])
        # off-axis point exits along its own ray
        q = ray_circle_exit(center, 0.5, np.array([0.1, 0.1]))
        assert_allclose(np.linalg.norm(q - center), 0.5)
        assert_allclose(q[0], q[1])

    def test_ray_exit_from_center_is_on_rim(self):
        p = ray_circle_exit(np.zeros(2), 0.5, np.zeros(2))
        assert_allclose(np.linalg.norm(p), 0.5)


class TestCircleIntersections:
    def test_two_points(self):
        pts = circle_circle_intersections(np.array([0.0, 0.0]),
                                          np.array([1.0, 0.0]), 0.75)
        assert len(pts) == 2
        for p in pts:
            assert_allclose(np.linalg.norm(p), 0.75, atol=1e-12)
            assert_allclose(np.linalg.norm(p - [1.0, 0.0]), 0.75, atol=1e-12)

    def test_tangent_circles_touch_once(self):
        pts = circle_circle_intersections(np.array([0.0, 0.0]),
                                          np.array([1.0, 0.0]), 0.5)
        assert len(pts) >= 1
        assert_allclose(pts[0], [0.5, 0.0], atol=1e-9)

    def test_disjoint_and_coincident(self):
        assert circle_circle_intersections(np.zeros(2),
                                           np.array([3.0, 0.0]), 0.5) == []
        assert circle_circle_intersections(np.zeros(2), np.zeros(2), 0.5) == []

    def test_circle_square_crossings(self):
        # Circle centered at the right edge midpoint crosses it twice.
        pts = circle_square_intersections(np.array([1.0, 0.0]), 0.3, 1.0)
        assert len(pts) >= 2
        for p in pts:
            assert_allclose(np.linalg.norm(p - [1.0, 0.0]), 0.3, atol=1e-12)
            assert np.max(np.abs(p)) <= 1.0 + 1e-12

    def test_interior_circle_has_no_square_crossings(self):
        assert circle_square_intersections(np.zeros(2), 0.3, 1.0) == []


class TestNearestFeasible:
    def test_free_point_unchanged(self):
        spec = region()
        sp = np.array([0.4, -0.2])
        assert_allclose(nearest_feasible_point(sp, spec), sp)

    def test_outside_square_clamps(self):
        spec = region()
        assert_allclose(nearest_feasible_point(np.array([5.0, 0.1]), spec),
                        [1.0, 0.1])

    def test_inside_disc_pushed_to_rim(self):
        spec = region(obstacles=[[0.0, 0.0]])
        out = nearest_feasible_point(np.array([0.1, 0.0]), spec)
        assert_allclose(out, [0.25, 0.0], atol=1e-12)

    def test_overlapping_discs_resolved_at_crossing(self):
        # Point midway between two overlapping discs: nearest free point is
        # one of the circle-circle crossings.
        spec = region(obstacles=[[-0.2, 0.0], [0.2, 0.0]], radius=0.3)
        sp = np.array([0.0, 0.0])
        out = nearest_feasible_point(sp, spec)
        assert is_feasible(out, spec)
        d_circle = max(np.linalg.norm(out - [-0.2, 0.0]),
                       np.linalg.norm(out - [0.2, 0.0]))
        assert d_circle >= 0.3 - 1e-9

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(0)
        hw = 1.0
        step = hw / 400
        for _ in range(150):
            n_obs = int(rng.integers(0, 5))
            spec = region(hw, rng.uniform(-hw, hw, (n_obs, 2)), radius=0.3)
            sp = rng.uniform(-1.3 * hw, 1.3 * hw, 2)
            out = nearest_feasible_point(sp, spec)
            assert is_feasible(out, spec)
            g = grid_nearest_feasible(sp, spec, step)
            if g is None:
                continue
            d_out = np.linalg.norm(out - sp)
            d_grid = np.linalg.norm(g - sp)
            assert d_out <= d_grid + np.sqrt(2) * step

    def test_simplified_mode_stays_feasible(self):
        rng = np.random.default_rng(1)
        hw = 1.0
        for _ in range(200):
            n_obs = int(rng.integers(0, 7))
            spec = region(hw, rng.uniform(-hw, hw, (n_obs, 2)), radius=0.3)
            sp = rng.uniform(-1.3 * hw, 1.3 * hw, 2)
            out = nearest_feasible_point(sp, spec, simplified=True)
            assert is_feasible(out, spec)

    def test_deterministic(self):
        spec = region(obstacles=[[0.0, 0.1], [0.3, -0.2]])
        sp = np.array([0.12, 0.03])
        a = nearest_feasible_point(sp, spec)
        b = nearest_feasible_point(sp, spec)
        assert_allclose(a, b)

    def test_crowded_region_still_resolves(self):
        # Ring of obstacles around the start point; the walk or the ring
        # fallback must still return something feasible.
        ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
        obstacles = 0.4 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        spec = region(1.0, obstacles, radius=0.22)
        out = nearest_feasible_point(np.zeros(2), spec)
        assert is_feasible(out, spec)


class TestLayoutHelpers:
    def test_min_pairwise_distance(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        assert_allclose(min_pairwise_distance(pts), 1.0)
        assert min_pairwise_distance(pts[:1]) == np.inf

    def test_layout_side_feasible(self):
        pts = np.array([[0.0, 0.0], [0.5, 0.0]])
        assert layout_side_feasible(pts, half_width=1.0, d_min=0.5)
        assert not layout_side_feasible(pts, half_width=1.0, d_min=0.6)
        assert not layout_side_feasible(pts * 3.0, half_width=1.0, d_min=0.5)
