"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with plain `pytest`; the summary lines bypass capture so they are
visible either way.
"""

import math
import time

import numpy as np
import pytest
from oracle_utils import (
    circle_rms,
    ellipse_rms,
    grid_search_circle,
    grid_search_ellipse,
)

from cylscan.fitting import (
    CylinderModel,
    RansacConfig,
    fit_circle_algebraic,
    fit_cylinder_multislice,
    fit_ellipse_direct,
    model_diameter,
)
from cylscan.metrics import (
    ImageGrid,
    diameter_error,
    psnr,
    radial_residual_stats,
    ssim,
)
from cylscan.metrics import RadialStats
from cylscan.pipeline import (
    FitSummary,
    RunReport,
    config_from_dict,
    percent_reduction,
    run_pipeline,
)
from cylscan.report import dump_json
from cylscan.simulate import (
    CylinderSpec,
    PosePerturbation,
    ScanConfig,
    Scene,
    ring_poses,
    sample_cylinder_surface,
    simulate_multi_scan,
)

SPEC = CylinderSpec(diameter=0.400, height=3.0)
TRUE_MODEL = CylinderModel(
    axis_point=np.zeros(3), axis_dir=np.array([0.0, 0.0, 1.0]), radius=0.2, z_extent=(0, 3)
)


def report_line(capsys, num, name, ok, detail):
    with capsys.disabled():
        print(f"[acceptance] criterion {num} ({name}): {'PASS' if ok else 'FAIL'} ({detail})")


def fit_diameter(cloud, seed, n_slices=6):
    cfg = RansacConfig(iterations=1000, inlier_threshold=0.01, seed=seed)
    fit = fit_cylinder_multislice(cloud, cfg, n_slices=n_slices)
    return model_diameter(fit.model)


def test_criterion_1_exact_recovery(capsys):
    start = time.perf_counter()
    cloud = sample_cylinder_surface(SPEC, 20_000, 0.0, seed=101)
    diameter = fit_diameter(cloud, seed=102)
    err = abs(diameter - 0.400)
    elapsed = time.perf_counter() - start
    ok = err < 1e-4 and elapsed < 5.0
    report_line(capsys, 1, "exact recovery", ok, f"|err|={err:.2e} m, {elapsed:.1f}s")
    assert err < 1e-4
    assert elapsed < 5.0


def test_criterion_2_noise_envelope(capsys):
    start = time.perf_counter()
    errors = []
    for seed in range(100):
        cloud = sample_cylinder_surface(SPEC, 6_000, 0.005, seed=200 + seed)
        errors.append(abs(fit_diameter(cloud, seed=300 + seed) - 0.400))
    mean_abs = float(np.mean(errors))
    elapsed = time.perf_counter() - start
    ok = mean_abs < 0.010 and elapsed < 60.0
    report_line(
        capsys, 2, "noise envelope", ok,
        f"mean |err|={mean_abs * 100:.3f} cm (budget 1.0 cm), {elapsed:.1f}s",
    )
    assert mean_abs < 0.010
    assert elapsed < 60.0


def test_criterion_3_undersizing_bias(capsys):
    start = time.perf_counter()
    errors = []
    for seed in range(100):
        cloud = sample_cylinder_surface(
            SPEC, 6_000, 0.005, seed=400 + seed, arc_rad=math.pi
        )
        errors.append(fit_diameter(cloud, seed=500 + seed) - 0.400)
    mean_signed = float(np.mean(errors))
    elapsed = time.perf_counter() - start
    ok = mean_signed < 0.0 and elapsed < 60.0
    report_line(
        capsys, 3, "under-sizing bias", ok,
        f"mean signed err={mean_signed:+.2e} m over 100 seeds, {elapsed:.1f}s",
    )
    assert mean_signed < 0.0
    assert elapsed < 60.0


def test_criterion_4_noise_ordering(capsys):
    start = time.perf_counter()
    scene = Scene(SPEC, ground_z=None)
    poses = ring_poses(8, radius=3.0, height=0.8)
    scan = ScanConfig(n_elevation=16, n_azimuth=128, max_range=30.0)
    perturb = PosePerturbation(translation_sigma=0.01, rotation_sigma_deg=0.5)
    wins = 0
    for seed in range(100):
        merged = simulate_multi_scan(scene, poses, scan, perturb, seed=600 + seed)
        dense = sample_cylinder_surface(SPEC, len(merged), 0.002, seed=700 + seed)
        std_scan = radial_residual_stats(merged, TRUE_MODEL).std
        std_dense = radial_residual_stats(dense, TRUE_MODEL).std
        if std_scan > std_dense:
            wins += 1
    elapsed = time.perf_counter() - start
    ok = wins >= 95 and elapsed < 120.0
    report_line(
        capsys, 4, "noise ordering", ok, f"multi-scan noisier in {wins}/100 seeds, {elapsed:.1f}s"
    )
    assert wins >= 95
    assert elapsed < 120.0


def test_criterion_5_metric_identities(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(800)

    img = ImageGrid.from_array(rng.integers(0, 256, (32, 32)).astype(float))
    assert math.isinf(psnr(img, img))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    zero = ImageGrid.from_array(np.zeros((16, 16)))
    full = ImageGrid.from_array(np.full((16, 16), 255.0))
    assert psnr(zero, full) == pytest.approx(0.0, abs=1e-9)

    c100 = ImageGrid.from_array(np.full((16, 16), 100.0))
    c150 = ImageGrid.from_array(np.full((16, 16), 150.0))
    c1 = (0.01 * 255.0) ** 2
    closed_form = (2 * 100 * 150 + c1) / (100**2 + 150**2 + c1)
    assert ssim(c100, c150) == pytest.approx(closed_form, abs=1e-9)

    a = ImageGrid.from_array(rng.integers(0, 256, (24, 24)).astype(float))
    b = ImageGrid.from_array(rng.integers(0, 256, (24, 24)).astype(float))
    assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-9)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)

    bounded = True
    for _ in range(1000):
        x = ImageGrid.from_array(rng.integers(0, 256, (12, 12)).astype(float))
        y = ImageGrid.from_array(rng.integers(0, 256, (12, 12)).astype(float))
        val = ssim(x, y)
        bounded = bounded and -1.0 <= val <= 1.0
    elapsed = time.perf_counter() - start
    ok = bounded and elapsed < 30.0
    report_line(
        capsys, 5, "metric identities", ok,
        f"identity/symmetry/closed-form at 1e-9, bounded on 1000 pairs, {elapsed:.1f}s",
    )
    assert bounded
    assert elapsed < 30.0


def test_criterion_6_report_fixtures(capsys):
    before, after = 1_030_133, 46_356
    reduction = percent_reduction(before, after)
    fixture = RunReport(
        config={"regime": "external", "seed": 0},
        points_before_crop=before,
        points_after_crop=after,
        pct_reduction=reduction,
        fit=FitSummary(
            diameter=0.395, radius=0.1975, axis_point=[0, 0, 0], axis_dir=[0, 0, 1],
            z_extent=[0, 3], inlier_count=1, rms_residual=0.0, iterations_used=1,
            n_slices=1,
        ),
        diameter=diameter_error(0.395, 0.400),
        radial=RadialStats(count=1, mean=0.0, std=0.0, rms=0.0),
        wall_time_s=0.0,
    )
    reduction_ok = f"{reduction:.1f}" == "95.5" and "95.5% reduction" in fixture.summary_lines()[0]
    pct_ok = fixture.diameter.pct_error == pytest.approx(1.25, abs=1e-12)
    pct_str_ok = "1.25%" in fixture.summary_lines()[1]

    raw = {
        "scene": {"diameter": 0.4, "height": 3.0, "ground_z": None},
        "regime": "surface",
        "surface": {"n_points": 3000, "radial_noise_sigma": 0.004},
        "n_slices": 4,
        "ground_truth_diameter": 0.4,
        "seed": 900,
        "ransac": {"iterations": 300, "inlier_threshold": 0.01},
    }
    r1 = run_pipeline(config_from_dict(raw))
    r2 = run_pipeline(config_from_dict(raw))
    j1 = dump_json(r1.to_dict(include_wall_time=False)).encode()
    j2 = dump_json(r2.to_dict(include_wall_time=False)).encode()
    byte_ok = j1 == j2

    ok = reduction_ok and pct_ok and pct_str_ok and byte_ok
    report_line(
        capsys, 6, "report fixtures", ok,
        f"reduction={reduction:.4f}%, pct_error={fixture.diameter.pct_error}%, "
        f"byte-identical={byte_ok}",
    )
    assert reduction_ok
    assert pct_ok and pct_str_ok
    assert byte_ok


def test_criterion_7_oracle_equivalence(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(1000)
    checked = 0
    worst = 0.0

    for _ in range(12):  # circle instances
        n = int(rng.integers(60, 201))
        cx, cy = rng.uniform(-0.5, 0.5, 2)
        r = rng.uniform(0.1, 0.3)
        sigma = rng.uniform(0.002, 0.008)
        arc = rng.uniform(np.radians(220), 2 * np.pi)
        t = rng.uniform(0, arc, n)
        pts = np.column_stack(
            [cx + (r + rng.normal(0, sigma, n)) * np.cos(t),
             cy + (r + rng.normal(0, sigma, n)) * np.sin(t)]
        )
        m = fit_circle_algebraic(pts)
        rms_fit = circle_rms(pts, m.center[0], m.center[1], m.radius)
        gx, gy, gr = grid_search_circle(pts)
        rms_grid = circle_rms(pts, gx, gy, gr)
        ratio = max(rms_fit / rms_grid, rms_grid / rms_fit)
        worst = max(worst, ratio)
        assert ratio <= 1.05, f"circle instance ratio {ratio}"
        checked += 1

    for _ in range(8):  # ellipse instances
        n = int(rng.integers(80, 201))
        cx, cy = rng.uniform(-0.5, 0.5, 2)
        a = rng.uniform(0.15, 0.3)
        b = rng.uniform(0.6 * a, a)
        phi = rng.uniform(0, np.pi)
        sigma = 0.003
        t = rng.uniform(0, 2 * np.pi, n)
        x, y = a * np.cos(t), b * np.sin(t)
        pts = np.column_stack(
            [cx + x * np.cos(phi) - y * np.sin(phi), cy + x * np.sin(phi) + y * np.cos(phi)]
        ) + rng.normal(0, sigma, (n, 2))
        e = fit_ellipse_direct(pts)
        rms_fit = ellipse_rms(pts, e.center[0], e.center[1], e.semi_major, e.semi_minor, e.rotation)
        gc = grid_search_ellipse(pts)
        rms_grid = ellipse_rms(pts, *gc)
        ratio = max(rms_fit / rms_grid, rms_grid / rms_fit)
        worst = max(worst, ratio)
        assert ratio <= 1.05, f"ellipse instance ratio {ratio}"
        checked += 1

    elapsed = time.perf_counter() - start
    ok = checked >= 20 and elapsed < 120.0
    report_line(
        capsys, 7, "oracle equivalence", ok,
        f"{checked} instances, worst RMS ratio {worst:.4f}, {elapsed:.1f}s",
    )
    assert checked >= 20
    assert elapsed < 120.0
