import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle_utils import circle_rms, grid_search_circle

from cylscan.cloud import PointCloud
from cylscan.fitting import (
    ConsensusFailureError,
    CylinderModel,
    DegenerateSampleError,
    EllipseModel,
    FitError,
    RansacConfig,
    circle_from_3_points,
    estimate_axis,
    fit_circle_algebraic,
    fit_cylinder_multislice,
    fit_ellipse_direct,
    model_diameter,
    project_slice,
    ransac_circle,
)
from cylscan.simulate import CylinderSpec, sample_cylinder_surface

SPEC = CylinderSpec(diameter=0.4, height=3.0)


def circle_points(center, radius, n, sigma=0.0, rng=None, arc=2 * np.pi):
    rng = rng or np.random.default_rng(0)
    t = rng.uniform(0, arc, n)
    r = radius + (rng.normal(0, sigma, n) if sigma > 0 else 0.0)
    return np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)])


class TestCircleFrom3Points:
    def test_symmetric_triple(self):
        m = circle_from_3_points((0, 1), (1, 0), (0, -1))
        np.testing.assert_allclose(m.center, [0, 0], atol=1e-12)
        assert m.radius == pytest.approx(1.0, abs=1e-12)

    def test_collinear_rejected(self):
        with pytest.raises(DegenerateSampleError):
            circle_from_3_points((0, 0), (1, 1), (2, 2))

    def test_random_triples_zero_residual(self):
        rng = np.random.default_rng(1)
        done = 0
        while done < 1000:
            p = rng.uniform(-10, 10, (3, 2))
            try:
                m = circle_from_3_points(*p)
            except DegenerateSampleError:
                continue
            res = np.abs(np.linalg.norm(p - m.center, axis=1) - m.radius)
            assert res.max() < 1e-9
            done += 1


class TestFitCircleAlgebraic:
    def test_exact_recovery(self):
        t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        pts = np.column_stack([2 + 0.2 * np.cos(t), 3 + 0.2 * np.sin(t)])
        m = fit_circle_algebraic(pts)
        np.testing.assert_allclose(m.center, [2, 3], atol=1e-9)
        assert m.radius == pytest.approx(0.2, abs=1e-9)

    def test_translation_equivariance(self):
        t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        pts = np.column_stack([2 + 0.2 * np.cos(t), 3 + 0.2 * np.sin(t)])
        a = fit_circle_algebraic(pts)
        b = fit_circle_algebraic(pts + np.array([10.0, -7.0]))
        np.testing.assert_allclose(b.center, a.center + [10, -7], atol=1e-9)
        assert b.radius == pytest.approx(a.radius, abs=1e-9)

    def test_rms_matches_grid_search_oracle(self):
        rng = np.random.default_rng(2)
        pts = circle_points((0.3, -0.1), 0.2, 200, sigma=0.005, rng=rng)
        m = fit_circle_algebraic(pts)
        rms_fit = circle_rms(pts, m.center[0], m.center[1], m.radius)
        cx, cy, r = grid_search_circle(pts)
        rms_grid = circle_rms(pts, cx, cy, r)
        assert rms_fit <= 1.05 * rms_grid
        assert rms_grid <= 1.05 * rms_fit

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_circle_algebraic([(0, 0), (1, 0)])

    def test_collinear_points(self):
        pts = np.column_stack([np.arange(10.0), 2.0 * np.arange(10.0)])
        with pytest.raises(FitError):
            fit_circle_algebraic(pts)

    @settings(max_examples=25, deadline=None)
    @given(
        st.floats(min_value=0.1, max_value=100.0),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_scale_equivariance(self, scale, seed):
        rng = np.random.default_rng(seed)
        pts = circle_points((0.1, 0.4), 0.25, 60, sigma=0.003, rng=rng)
        a = fit_circle_algebraic(pts)
        b = fit_circle_algebraic(pts * scale)
        assert b.radius == pytest.approx(a.radius * scale, rel=1e-9)


class TestRansacCircle:
    def test_exact_circle_all_inliers(self):
        pts = circle_points((0, 0), 0.2, 300)
        res = ransac_circle(pts, RansacConfig(seed=0))
        assert res.model.radius == pytest.approx(0.2, abs=1e-9)
        assert len(res.inlier_indices) == 300

    def test_outlier_rejection(self):
        rng = np.random.default_rng(3)
        circ = circle_points((0, 0), 0.2, 200, sigma=0.002, rng=rng)
        outliers = rng.uniform(-0.5, 0.5, (100, 2))
        pts = np.vstack([circ, outliers])
        res = ransac_circle(pts, RansacConfig(inlier_threshold=0.01, seed=4))
        assert res.model.radius == pytest.approx(0.2, abs=1e-3)
        assert len(res.inlier_indices) >= 180
        # ground-truth membership: inliers are overwhelmingly circle points
        assert np.mean(res.inlier_indices < 200) > 0.9

    def test_collinear_consensus_failure(self):
        pts = np.column_stack([np.arange(10.0), np.arange(10.0)])
        with pytest.raises(ConsensusFailureError):
            ransac_circle(pts, RansacConfig(seed=5))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        pts = circle_points((0, 0), 0.2, 150, sigma=0.004, rng=rng)
        a = ransac_circle(pts, RansacConfig(seed=7))
        b = ransac_circle(pts, RansacConfig(seed=7))
        assert a.model.radius == b.model.radius
        np.testing.assert_array_equal(a.inlier_indices, b.inlier_indices)
        assert a.iterations_used == b.iterations_used

    def test_inlier_soundness(self):
        rng = np.random.default_rng(8)
        circ = circle_points((0.2, 0.1), 0.2, 150, sigma=0.004, rng=rng)
        pts = np.vstack([circ, rng.uniform(-1, 1, (50, 2))])
        cfg = RansacConfig(inlier_threshold=0.01, seed=9)
        res = ransac_circle(pts, cfg)
        residuals = np.abs(res.model.residuals(pts))
        mask = np.zeros(len(pts), dtype=bool)
        mask[res.inlier_indices] = True
        assert np.all(residuals[mask] <= cfg.inlier_threshold)
        assert np.all(residuals[~mask] > cfg.inlier_threshold)

    def test_min_inliers_enforced(self):
        pts = circle_points((0, 0), 0.2, 30)
        with pytest.raises(ConsensusFailureError):
            ransac_circle(pts, RansacConfig(min_inliers=31, seed=1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RansacConfig(iterations=0)
        with pytest.raises(ValueError):
            RansacConfig(inlier_threshold=0.0)


class TestFitEllipseDirect:
    def test_axis_aligned_recovery(self):
        t = np.linspace(0, 2 * np.pi, 60, endpoint=False)
        pts = np.column_stack([0.25 * np.cos(t), 0.15 * np.sin(t)])
        e = fit_ellipse_direct(pts)
        assert e.semi_major == pytest.approx(0.25, abs=1e-6)
        assert e.semi_minor == pytest.approx(0.15, abs=1e-6)
        np.testing.assert_allclose(e.center, [0, 0], atol=1e-9)

    def test_rotated_translated_recovery(self):
        phi = 0.6
        t = np.linspace(0, 2 * np.pi, 80, endpoint=False)
        x, y = 0.3 * np.cos(t), 0.1 * np.sin(t)
        pts = np.column_stack(
            [1.5 + x * np.cos(phi) - y * np.sin(phi), -0.7 + x * np.sin(phi) + y * np.cos(phi)]
        )
        e = fit_ellipse_direct(pts)
        assert e.semi_major == pytest.approx(0.3, abs=1e-6)
        assert e.semi_minor == pytest.approx(0.1, abs=1e-6)
        assert e.rotation == pytest.approx(phi, abs=1e-6)
        np.testing.assert_allclose(e.center, [1.5, -0.7], atol=1e-7)

    def test_circle_is_an_ellipse(self):
        pts = circle_points((0, 0), 0.2, 50)
        e = fit_ellipse_direct(pts)
        assert e.semi_major == pytest.approx(0.2, abs=1e-6)
        assert e.semi_minor == pytest.approx(0.2, abs=1e-6)

    def test_four_points_rejected(self):
        with pytest.raises(FitError):
            fit_ellipse_direct([(0, 0), (1, 0), (0, 1), (1, 1)])

    def test_collinear_rejected(self):
        pts = np.column_stack([np.arange(8.0), np.arange(8.0) * 3.0])
        with pytest.raises(FitError):
            fit_ellipse_direct(pts)

    def test_always_returns_ellipse_under_noise(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            pts = circle_points((0, 0), 0.2, 40, sigma=0.01, rng=rng, arc=np.pi)
            e = fit_ellipse_direct(pts)
            assert e.semi_major >= e.semi_minor > 0


class TestEstimateAxis:
    def test_vertical_cylinder_lattice(self):
        # symmetric ring lattice: principal direction is exactly vertical
        z = np.repeat(np.linspace(0, 3, 40), 64)
        t = np.tile(np.linspace(0, 2 * np.pi, 64, endpoint=False), 40)
        pts = np.column_stack([0.2 * np.cos(t), 0.2 * np.sin(t), z])
        axis = estimate_axis(PointCloud(pts))
        assert np.arccos(np.clip(axis[2], -1, 1)) < 1e-3

    def test_vertical_cylinder_random_samples(self):
        cloud = sample_cylinder_surface(SPEC, 20000, 0.0, seed=0)
        axis = estimate_axis(cloud)
        assert np.arccos(np.clip(axis[2], -1, 1)) < 5e-3

    def test_tilted_cylinder(self):
        tilt = np.radians(10)
        axis_true = np.array([np.sin(tilt), 0.0, np.cos(tilt)])
        spec = CylinderSpec(diameter=0.4, height=3.0, axis=axis_true)
        cloud = sample_cylinder_surface(spec, 5000, 0.0, seed=1)
        axis = estimate_axis(cloud)
        ang = np.degrees(np.arccos(np.clip(abs(axis @ axis_true), -1, 1)))
        assert ang < 1.0

    def test_repeated_point_degenerate(self):
        cloud = PointCloud(np.tile([[1.0, 2.0, 3.0]], (10, 1)))
        with pytest.raises(FitError):
            estimate_axis(cloud)

    def test_squat_cloud_falls_back_to_vertical(self):
        rng = np.random.default_rng(2)
        # wide flat disc: principal direction is horizontal, but the
        # fallback kicks in because height/width < 1.5
        pts = np.column_stack(
            [rng.uniform(-1, 1, 500), rng.uniform(-1, 1, 500), rng.uniform(0, 0.3, 500)]
        )
        np.testing.assert_array_equal(estimate_axis(PointCloud(pts)), [0, 0, 1])


class TestProjectSlice:
    def test_band_membership(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 0.5], [0.0, 0.0, 1.5]]))
        pts = project_slice(cloud, [0, 0, 1.0], 1.0, 2.0)
        assert len(pts) == 1

    def test_half_open_interval(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]]))
        assert len(project_slice(cloud, [0, 0, 1.0], 1.0, 2.0)) == 1

    def test_noiseless_slice_on_circle(self):
        cloud = sample_cylinder_surface(SPEC, 5000, 0.0, seed=3)
        pts = project_slice(cloud, SPEC.axis, 1.0, 2.0)
        r = np.linalg.norm(pts, axis=1)
        assert np.abs(r - 0.2).max() < 1e-12

    def test_vertical_axis_basis_is_xy(self):
        cloud = PointCloud(np.array([[0.3, -0.4, 1.0]]))
        pts = project_slice(cloud, [0, 0, 1.0], 0.0, 2.0)
        np.testing.assert_allclose(pts[0], [0.3, -0.4], atol=1e-15)

    def test_projected_spread_matches_3d_residual_std(self):
        from cylscan.geometry import distance_to_axis
        from cylscan.simulate import (
            PosePerturbation,
            ScanConfig,
            Scene,
            ring_poses,
            simulate_multi_scan,
        )

        scene = Scene(SPEC, ground_z=None)
        cfg = ScanConfig(n_elevation=16, n_azimuth=128, max_range=30.0)
        cloud = simulate_multi_scan(
            scene, ring_poses(8), cfg, PosePerturbation(0.01, 0.0), seed=4
        )
        res3d = distance_to_axis(cloud.points, SPEC.base_center, SPEC.axis) - 0.2
        pts2d = project_slice(cloud, SPEC.axis, 0.5, 2.5)
        mask = (cloud.points[:, 2] >= 0.5) & (cloud.points[:, 2] < 2.5)
        res2d = np.linalg.norm(pts2d, axis=1) - 0.2
        assert res2d.std() == pytest.approx(res3d[mask].std(), rel=0.10)


class TestFitCylinderMultislice:
    def test_noiseless_recovery(self):
        cloud = sample_cylinder_surface(SPEC, 20000, 0.0, seed=5)
        fit = fit_cylinder_multislice(cloud, RansacConfig(seed=6), n_slices=6)
        assert fit.model.radius == pytest.approx(0.2, abs=1e-6)
        ang = np.degrees(np.arccos(np.clip(fit.model.axis_dir[2], -1, 1)))
        assert ang < 0.01
        assert model_diameter(fit.model) == pytest.approx(0.4, abs=2e-6)

    def test_single_slice(self):
        cloud = sample_cylinder_surface(SPEC, 3000, 0.0, seed=7)
        fit = fit_cylinder_multislice(cloud, RansacConfig(seed=8), n_slices=1)
        assert fit.model.radius == pytest.approx(0.2, abs=1e-4)

    def test_inliers_and_extent(self):
        cloud = sample_cylinder_surface(SPEC, 8000, 0.002, seed=9)
        fit = fit_cylinder_multislice(cloud, RansacConfig(seed=10), n_slices=4)
        assert len(fit.inlier_indices) > 0.9 * len(cloud)
        lo, hi = fit.model.z_extent
        assert hi - lo == pytest.approx(3.0, abs=0.05)

    def test_empty_cloud_fails(self):
        with pytest.raises(FitError):
            fit_cylinder_multislice(PointCloud.empty(), RansacConfig(), n_slices=2)

    def test_deterministic(self):
        cloud = sample_cylinder_surface(SPEC, 5000, 0.003, seed=11)
        a = fit_cylinder_multislice(cloud, RansacConfig(seed=12), n_slices=5)
        b = fit_cylinder_multislice(cloud, RansacConfig(seed=12), n_slices=5)
        assert a.model.radius == b.model.radius
        np.testing.assert_array_equal(a.model.axis_dir, b.model.axis_dir)


class TestModelDiameter:
    def test_circle(self):
        assert model_diameter(_circle(0.2)) == pytest.approx(0.4)

    def test_cylinder(self):
        model = CylinderModel(np.zeros(3), np.array([0, 0, 1.0]), 0.2, (0, 1))
        assert model_diameter(model) == pytest.approx(0.4)

    def test_ellipse_equivalent_diameter(self):
        e = EllipseModel(np.zeros(2), 0.25, 0.16, 0.0)
        assert model_diameter(e) == pytest.approx(0.4, abs=1e-15)

    def test_circular_ellipse(self):
        e = EllipseModel(np.zeros(2), 0.2, 0.2, 0.0)
        assert model_diameter(e) == pytest.approx(0.4, abs=1e-15)


def _circle(r):
    from cylscan.fitting import CircleModel

    return CircleModel(np.zeros(2), r)
