"""Synthetic scans of a cylinder-on-ground scene.

Two generation regimes mirror the two reconstruction styles the fitters
are evaluated against: dense surface sampling with small radial noise
(NeRF-like exports) and merged multi-pose ray-cast scans whose pose
perturbations inflate surface noise (SLAM-like maps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cloud import PointCloud, RigidTransform
from .geometry import orthonormal_basis, rotation_xyz
from .seeding import derive_seed

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CylinderSpec:
    """Ground-truth cylinder: base center, unit axis, diameter and height in meters."""

    diameter: float
    height: float
    base_center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if not self.diameter > 0.0:
            raise ValueError(f"diameter must be positive, got {self.diameter}")
        if not self.height > 0.0:
            raise ValueError(f"height must be positive, got {self.height}")
        base = np.asarray(self.base_center, dtype=np.float64).reshape(3)
        axis = np.asarray(self.axis, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("axis must be unit-norm (within 1e-12)")
        base.setflags(write=False)
        axis.setflags(write=False)
        object.__setattr__(self, "base_center", base)
        object.__setattr__(self, "axis", axis)

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter


@dataclass(frozen=True)
class Scene:
    """A cylinder standing on an optional horizontal ground plane."""

    cylinder: CylinderSpec
    ground_z: float | None = 0.0

    def __post_init__(self):
        if self.ground_z is not None:
            if self.cylinder.base_center[2] < self.ground_z - 1e-9:
                raise ValueError("cylinder base lies below the ground plane")


@dataclass(frozen=True)
class ScanConfig:
    """Spinning-scanner beam grid: rows spread over the vertical FOV, columns over 360 deg."""

    n_elevation: int
    n_azimuth: int
    vertical_fov_deg: float = 90.0
    max_range: float = 50.0
    range_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_elevation < 1 or self.n_azimuth < 1:
            raise ValueError("beam grid must be at least 1x1")
        if not self.max_range > 0.0:
            raise ValueError("max_range must be positive")
        if self.range_noise_sigma < 0.0:
            raise ValueError("range_noise_sigma must be >= 0")
        if not 0.0 < self.vertical_fov_deg <= 180.0:
            raise ValueError("vertical_fov_deg must be in (0, 180]")


@dataclass(frozen=True)
class PosePerturbation:
    """Gaussian pose noise: per-axis translation sigma (m) and per-Euler-axis rotation sigma (deg)."""

    translation_sigma: float = 0.0
    rotation_sigma_deg: float = 0.0

    def __post_init__(self):
        if self.translation_sigma < 0.0 or self.rotation_sigma_deg < 0.0:
            raise ValueError("perturbation sigmas must be >= 0")


def sample_cylinder_surface(
    spec: CylinderSpec,
    n: int,
    radial_noise_sigma: float = 0.0,
    seed: int = 0,
    arc_rad: float = TWO_PI,
) -> PointCloud:
    """Sample `n` points uniformly by area over the lateral surface.

    Each sample is displaced radially by Gaussian(0, radial_noise_sigma).
    `arc_rad` restricts the angular coverage (2*pi = full shell), which is
    how partial-view reconstructions are emulated. Deterministic per seed.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 < arc_rad <= TWO_PI:
        raise ValueError("arc_rad must be in (0, 2*pi]")
    if n == 0:
        return PointCloud.empty()
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, arc_rad, n)
    height = rng.uniform(0.0, spec.height, n)
    radii = spec.radius + rng.normal(0.0, radial_noise_sigma, n)
    u, v = orthonormal_basis(spec.axis)
    points = (
        spec.base_center
        + np.outer(radii * np.cos(theta), u)
        + np.outer(radii * np.sin(theta), v)
        + np.outer(height, spec.axis)
    )
    return PointCloud(points)


def _ray_directions(cfg: ScanConfig) -> np.ndarray:
    """Unit ray directions in the sensor frame, elevation-major, shape (rows*cols, 3)."""
    if cfg.n_elevation == 1:
        elev = np.array([0.0])
    else:
        half = math.radians(cfg.vertical_fov_deg) / 2.0
        elev = np.linspace(-half, half, cfg.n_elevation)
    azim = TWO_PI * np.arange(cfg.n_azimuth) / cfg.n_azimuth
    ee, aa = np.meshgrid(elev, azim, indexing="ij")
    dirs = np.stack(
        [np.cos(ee) * np.cos(aa), np.cos(ee) * np.sin(aa), np.sin(ee)], axis=-1
    )
    return dirs.reshape(-1, 3)


def _intersect_scene(scene: Scene, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Smallest positive hit range per ray against the cylinder side and ground; inf on miss."""
    cyl = scene.cylinder
    axis = cyl.axis
    rel = origins - cyl.base_center
    oa = rel @ axis
    da = dirs @ axis
    o_perp = rel - np.outer(oa, axis)
    d_perp = dirs - np.outer(da, axis)

    a = np.einsum("ij,ij->i", d_perp, d_perp)
    b = 2.0 * np.einsum("ij,ij->i", o_perp, d_perp)
    c = np.einsum("ij,ij->i", o_perp, o_perp) - cyl.radius**2

    disc = b * b - 4.0 * a * c
    solvable = (a > 1e-15) & (disc >= 0.0)
    sqrt_disc = np.sqrt(np.where(solvable, disc, 0.0))
    denom = np.where(solvable, 2.0 * a, 1.0)
    t_best = np.full(len(dirs), np.inf)
    for sign in (-1.0, 1.0):
        t = np.where(solvable, (-b + sign * sqrt_disc) / denom, np.inf)
        s = oa + t * da
        on_side = (t > 1e-9) & (s >= 0.0) & (s <= cyl.height)
        t_best = np.where(on_side & (t < t_best), t, t_best)

    if scene.ground_z is not None:
        dz = dirs[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_ground = (scene.ground_z - origins[:, 2]) / dz
        ground_ok = (dz != 0.0) & (t_ground > 1e-9)
        t_best = np.where(ground_ok & (t_ground < t_best), t_ground, t_best)
    return t_best


def raycast_scan(
    scene: Scene, sensor_pose: RigidTransform, cfg: ScanConfig
) -> PointCloud:
    """Cast the beam grid from `sensor_pose` and return the hit points.

    Each ray keeps the nearest analytic intersection with the cylinder
    lateral surface or the ground plane within max_range. Range noise is
    Gaussian along the ray, clipped at +/-3 sigma so every returned point
    stays within 3 sigma of the true surface. One noise draw is consumed
    per grid cell (hit or miss), so the stream is a pure function of the
    grid shape and cfg.seed.
    """
    cyl = scene.cylinder
    sensor = sensor_pose.translation
    rel = sensor - cyl.base_center
    along = float(rel @ cyl.axis)
    radial = math.sqrt(max(float(rel @ rel) - along * along, 0.0))
    if radial < cyl.radius and 0.0 <= along <= cyl.height:
        raise ValueError("sensor pose is inside the cylinder")

    dirs = _ray_directions(cfg) @ sensor_pose.rotation.T
    origins = np.broadcast_to(sensor, dirs.shape)
    t = _intersect_scene(scene, origins, dirs)

    rng = np.random.default_rng(cfg.seed)
    sigma = cfg.range_noise_sigma
    noise = rng.normal(0.0, sigma, len(dirs)) if sigma > 0.0 else np.zeros(len(dirs))
    noise = np.clip(noise, -3.0 * sigma, 3.0 * sigma)

    hit = np.isfinite(t) & (t <= cfg.max_range)
    ranges = t[hit] + noise[hit]
    points = sensor + ranges[:, None] * dirs[hit]
    return PointCloud(points)


def _draw_pose_delta(perturb: PosePerturbation, rng: np.random.Generator) -> RigidTransform:
    d_trans = rng.normal(0.0, perturb.translation_sigma, 3)
    angles = np.radians(rng.normal(0.0, perturb.rotation_sigma_deg, 3))
    return RigidTransform(rotation_xyz(*angles), d_trans)


def simulate_multi_scan(
    scene: Scene,
    poses: list[RigidTransform],
    cfg: ScanConfig,
    perturb: PosePerturbation,
    seed: int = 0,
) -> PointCloud:
    """Merge scans from several poses under pose-estimate error.

    For frame k the true pose is the nominal one composed with a random
    delta drawn from `perturb`; rays are cast from the true pose but the
    returns are registered into the map with the nominal pose, the same
    mismatch a miscalibrated scan-merging pipeline produces. Frame k uses
    substream seeds derive_seed(seed, "pose", k) for the delta and
    derive_seed(seed, "range", k) for range noise, so any frame can be
    reproduced in isolation.
    """
    if not poses:
        raise ValueError("at least one pose is required")
    clouds = []
    for k, nominal in enumerate(poses):
        pose_rng = np.random.default_rng(derive_seed(seed, "pose", k))
        delta = _draw_pose_delta(perturb, pose_rng)
        true_pose = nominal.compose(delta)
        frame_cfg = replace(cfg, seed=derive_seed(seed, "range", k))
        scan = raycast_scan(scene, true_pose, frame_cfg)
        register = nominal.compose(true_pose.inverse())
        clouds.append(register.apply(scan.points))
    return PointCloud(np.concatenate(clouds, axis=0))


def ring_poses(
    n: int, radius: float = 3.0, height: float = 0.8, center=(0.0, 0.0)
) -> list[RigidTransform]:
    """Sensor poses evenly spaced on a horizontal circle (identity orientation).

    The default 3 m ring at 0.8 m height is the desk-scale stand-in for a
    walk around the pipe; a 360-degree scanner needs no yaw alignment.
    """
    if n < 1:
        raise ValueError("need at least one pose")
    poses = []
    for k in range(n):
        ang = TWO_PI * k / n
        spot = np.array(
            [center[0] + radius * math.cos(ang), center[1] + radius * math.sin(ang), height]
        )
        poses.append(RigidTransform.from_translation(spot))
    return poses
