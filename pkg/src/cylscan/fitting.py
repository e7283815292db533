"""Robust circle, ellipse and cylinder estimation for slice-based diameter measurement.

The cylinder pipeline mirrors stem-measurement practice: estimate the
axis, cut the cloud into axial bands, RANSAC-fit a circle per band, then
refine the axis through the band centers and take the median band radius
as the cylinder radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cloud import PointCloud
from .geometry import distance_to_axis, orthonormal_basis, unit
from .seeding import derive_seed


class FitError(ValueError):
    """A geometric fit could not be produced from the given points."""


class DegenerateSampleError(FitError):
    """Minimal sample admits no model (collinear or coincident points)."""


class ConsensusFailureError(FitError):
    """RANSAC found no hypothesis with enough inliers."""


@dataclass(frozen=True)
class CircleModel:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(2)
        if not np.all(np.isfinite(c)):
            raise ValueError("circle center must be finite")
        if not self.radius > 0.0 or not math.isfinite(self.radius):
            raise ValueError(f"radius must be positive and finite, got {self.radius}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    def residuals(self, points) -> np.ndarray:
        """Signed distance to the circle: ||p - center|| - radius."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.linalg.norm(pts - self.center, axis=1) - self.radius


@dataclass(frozen=True)
class EllipseModel:
    center: np.ndarray
    semi_major: float
    semi_minor: float
    rotation: float  # major-axis angle, radians in [0, pi)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(2)
        if not (self.semi_major >= self.semi_minor > 0.0):
            raise ValueError("need semi_major >= semi_minor > 0")
        if not 0.0 <= self.rotation < math.pi:
            raise ValueError("rotation must lie in [0, pi)")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    def boundary_points(self, n: int = 360) -> np.ndarray:
        """Points on the ellipse at uniform parameter steps."""
        t = 2.0 * np.pi * np.arange(n) / n
        ca, sa = math.cos(self.rotation), math.sin(self.rotation)
        x = self.semi_major * np.cos(t)
        y = self.semi_minor * np.sin(t)
        return np.column_stack(
            [self.center[0] + ca * x - sa * y, self.center[1] + sa * x + ca * y]
        )


@dataclass(frozen=True)
class CylinderModel:
    axis_point: np.ndarray
    axis_dir: np.ndarray
    radius: float
    z_extent: tuple[float, float]

    def __post_init__(self):
        p = np.asarray(self.axis_point, dtype=np.float64).reshape(3)
        d = np.asarray(self.axis_dir, dtype=np.float64)
        d = unit(d)
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        p.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "axis_point", p)
        object.__setattr__(self, "axis_dir", d)
        object.__setattr__(self, "z_extent", (float(self.z_extent[0]), float(self.z_extent[1])))

    def radial_residuals(self, points) -> np.ndarray:
        """Signed distance to the lateral surface: dist(p, axis) - radius."""
        return distance_to_axis(points, self.axis_point, self.axis_dir) - self.radius


@dataclass(frozen=True)
class RansacConfig:
    """Consensus-fit parameters. min_inliers=None means max(10, 5% of points)."""

    iterations: int = 1000
    inlier_threshold: float = 0.01
    min_inliers: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.inlier_threshold > 0.0:
            raise ValueError("inlier_threshold must be positive")

    def resolve_min_inliers(self, n_points: int) -> int:
        if self.min_inliers is not None:
            return self.min_inliers
        return max(10, math.ceil(0.05 * n_points))


@dataclass(frozen=True)
class FitResult:
    model: CircleModel | EllipseModel | CylinderModel
    inlier_indices: np.ndarray
    rms_residual: float
    iterations_used: int


def circle_from_3_points(p1, p2, p3) -> CircleModel:
    """Circumcircle of three points; collinear triples are degenerate."""
    pts = np.asarray([p1, p2, p3], dtype=np.float64).reshape(3, 2)
    centers, radii, valid = _circumcircles(pts[0:1], pts[1:2], pts[2:3])
    if not valid[0]:
        raise DegenerateSampleError("three points are collinear or coincident")
    return CircleModel(centers[0], float(radii[0]))


def _circumcircles(p1, p2, p3):
    """Batched circumcircles. Returns (centers, radii, valid mask)."""
    ax = p2[:, 0] - p1[:, 0]
    ay = p2[:, 1] - p1[:, 1]
    bx = p3[:, 0] - p1[:, 0]
    by = p3[:, 1] - p1[:, 1]
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    d = 2.0 * (ax * by - ay * bx)
    scale2 = np.maximum(a2, b2)
    valid = np.abs(d) > 1e-12 * np.maximum(scale2, 1e-300)
    d_safe = np.where(valid, d, 1.0)
    ux = (by * a2 - ay * b2) / d_safe + p1[:, 0]
    uy = (ax * b2 - bx * a2) / d_safe + p1[:, 1]
    centers = np.column_stack([ux, uy])
    radii = np.hypot(ux - p1[:, 0], uy - p1[:, 1])
    return centers, radii, valid


def _check_not_collinear(pts: np.ndarray) -> None:
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered
    evals = np.linalg.eigvalsh(cov)
    if evals[-1] <= 0.0 or evals[0] / evals[-1] < 1e-20:
        raise FitError("points are collinear or coincident; circle is undefined")


def fit_circle_algebraic(points) -> CircleModel:
    """Taubin algebraic circle fit.

    Exact on noiseless circle samples and nearly unbiased under isotropic
    noise; needs at least three non-collinear points.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise FitError(f"circle fit needs >= 3 points, got {len(pts)}")
    _check_not_collinear(pts)

    centroid = pts.mean(axis=0)
    x = pts[:, 0] - centroid[0]
    y = pts[:, 1] - centroid[1]
    z = x * x + y * y
    z_mean = z.mean()
    z0 = (z - z_mean) / (2.0 * math.sqrt(z_mean))
    design = np.column_stack([z0, x, y])
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    a = vt[2]
    a0 = a[0] / (2.0 * math.sqrt(z_mean))
    coeffs = np.array([a0, a[1], a[2], -z_mean * a0])
    if coeffs[0] == 0.0:
        raise FitError("algebraic system is rank-deficient (line, not circle)")
    center = -coeffs[1:3] / coeffs[0] / 2.0 + centroid
    disc = coeffs[1] ** 2 + coeffs[2] ** 2 - 4.0 * coeffs[0] * coeffs[3]
    if disc <= 0.0 or not np.isfinite(disc):
        raise FitError("algebraic circle fit is degenerate")
    radius = math.sqrt(disc) / abs(coeffs[0]) / 2.0
    return CircleModel(center, radius)


def ransac_circle(points, cfg: RansacConfig) -> FitResult:
    """Consensus circle fit: minimal 3-point hypotheses, Taubin refit on inliers.

    The winner maximizes inlier count with ties broken by lower inlier RMS
    and then lower hypothesis index; the refit model's inlier set is
    recomputed so reported inliers are exactly the points within the
    threshold. Sampling is driven by cfg.seed only. Stops early once a
    hypothesis makes every point an inlier.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 3:
        raise FitError(f"RANSAC needs >= 3 points, got {n}")
    min_inliers = cfg.resolve_min_inliers(n)
    rng = np.random.default_rng(cfg.seed)
    # Triples are drawn with replacement; duplicate indices make the
    # hypothesis degenerate and it is skipped, like a collinear draw.
    samples = rng.integers(0, n, size=(cfg.iterations, 3))

    best = None  # (count, rms, iteration, center, radius)
    iterations_used = cfg.iterations
    chunk = max(1, int(4_000_000 // max(n, 1)))
    for start in range(0, cfg.iterations, chunk):
        idx = samples[start : start + chunk]
        centers, radii, valid = _circumcircles(
            pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]]
        )
        dup = (
            (idx[:, 0] == idx[:, 1]) | (idx[:, 0] == idx[:, 2]) | (idx[:, 1] == idx[:, 2])
        )
        valid &= ~dup
        if not valid.any():
            continue
        dists = np.abs(
            np.linalg.norm(pts[None, :, :] - centers[:, None, :], axis=2)
            - radii[:, None]
        )
        inlier = dists <= cfg.inlier_threshold
        counts = np.where(valid, inlier.sum(axis=1), -1)
        sq = np.where(inlier, dists, 0.0) ** 2
        with np.errstate(invalid="ignore"):
            rms = np.sqrt(sq.sum(axis=1) / np.maximum(counts, 1))

        order = np.lexsort((np.arange(len(counts)), rms, -counts))
        k = order[0]
        cand = (int(counts[k]), float(rms[k]), start + int(k), centers[k], float(radii[k]))
        if best is None or (cand[0], -cand[1], -cand[2]) > (best[0], -best[1], -best[2]):
            best = cand
        if best[0] == n:
            iterations_used = best[2] + 1
            break

    if best is None or best[0] < min_inliers:
        found = 0 if best is None else best[0]
        raise ConsensusFailureError(
            f"no circle hypothesis reached {min_inliers} inliers (best {found})"
        )

    hypothesis = CircleModel(best[3], best[4])
    consensus = np.abs(hypothesis.residuals(pts)) <= cfg.inlier_threshold
    try:
        model = fit_circle_algebraic(pts[consensus])
    except FitError:
        model = hypothesis
    final_res = np.abs(model.residuals(pts))
    inlier_mask = final_res <= cfg.inlier_threshold
    if inlier_mask.sum() < min_inliers:
        raise ConsensusFailureError("refit model lost consensus")
    rms_final = float(np.sqrt(np.mean(final_res[inlier_mask] ** 2)))
    return FitResult(
        model=model,
        inlier_indices=np.flatnonzero(inlier_mask),
        rms_residual=rms_final,
        iterations_used=iterations_used,
    )


def fit_ellipse_direct(points) -> EllipseModel:
    """Direct least-squares conic fit constrained to ellipses (Halir-Flusser form).

    Minimizes algebraic error subject to the ellipse constraint
    4ac - b^2 = 1, so the returned conic is always an ellipse; exact on
    noiseless ellipse samples.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 5:
        raise FitError(f"ellipse fit needs >= 5 points, got {len(pts)}")
    centroid = pts.mean(axis=0)
    x = pts[:, 0] - centroid[0]
    y = pts[:, 1] - centroid[1]

    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        raise FitError("degenerate point configuration for ellipse fit") from None
    m = s1 + s2 @ t
    reduced = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    evals, evecs = np.linalg.eig(reduced)
    evecs = np.real(evecs)
    cond = 4.0 * evecs[0] * evecs[2] - evecs[1] ** 2
    candidates = np.flatnonzero(cond > 0.0)
    if len(candidates) == 0:
        raise FitError("no ellipse solution (points degenerate?)")
    a1 = evecs[:, candidates[0]]
    coeffs = np.concatenate([a1, t @ a1])
    return _conic_to_ellipse(coeffs, centroid)


def _conic_to_ellipse(coeffs, centroid) -> EllipseModel:
    """Conic [a, b, c, d, e, f] (about `centroid`) to geometric ellipse parameters."""
    a, b, c, d, e, f = (float(v) for v in coeffs)
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        raise FitError("fitted conic is not an ellipse")
    cx = (2.0 * c * d - b * e) / disc
    cy = (2.0 * a * e - b * d) / disc
    f_center = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f
    m2 = np.array([[a, b / 2.0], [b / 2.0, c]])
    evals, evecs = np.linalg.eigh(m2)
    axes_sq = -f_center / evals
    if np.any(axes_sq <= 0.0) or not np.all(np.isfinite(axes_sq)):
        raise FitError("degenerate conic (zero-area ellipse)")
    axes = np.sqrt(axes_sq)
    major_idx = int(np.argmax(axes))
    vec = evecs[:, major_idx]
    rotation = math.atan2(vec[1], vec[0]) % math.pi
    return EllipseModel(
        center=np.array([cx, cy]) + np.asarray(centroid, dtype=np.float64),
        semi_major=float(axes[major_idx]),
        semi_minor=float(axes[1 - major_idx]),
        rotation=rotation,
    )


def estimate_axis(cloud: PointCloud) -> np.ndarray:
    """Cylinder-axis guess: principal direction, sign-fixed to z >= 0.

    Squat clouds (axial extent under 1.5x the horizontal extent) give an
    unreliable principal direction, so those fall back to exact vertical.
    """
    pts = cloud.points
    if len(pts) < 3:
        raise FitError(f"axis estimate needs >= 3 points, got {len(pts)}")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    total_var = np.trace(cov)
    extent = pts.max(axis=0) - pts.min(axis=0)
    scale = max(float(np.max(extent)), 1.0)
    if total_var <= 1e-24 * scale * scale:
        raise FitError("degenerate covariance; no principal direction")
    width = max(extent[0], extent[1])
    if width > 0.0 and extent[2] / width < 1.5:
        return np.array([0.0, 0.0, 1.0])
    evals, evecs = np.linalg.eigh(cov)
    axis = evecs[:, -1]
    if axis[2] < 0.0 or (axis[2] == 0.0 and (axis[0] < 0.0 or (axis[0] == 0.0 and axis[1] < 0.0))):
        axis = -axis
    return axis


def project_slice(
    cloud: PointCloud, axis, h_min: float, h_max: float, return_indices: bool = False
):
    """Project points with axial coordinate in [h_min, h_max) onto the axis-normal plane.

    The 2D frame is the deterministic basis from orthonormal_basis(axis);
    the axial coordinate is the plain dot product with the axis.
    """
    a = unit(axis)
    u, v = orthonormal_basis(a)
    s = cloud.points @ a
    mask = (s >= h_min) & (s < h_max)
    selected = cloud.points[mask]
    pts2d = np.column_stack([selected @ u, selected @ v])
    if return_indices:
        return pts2d, np.flatnonzero(mask)
    return pts2d


def _slice_band_fits(cloud, axis, cfg, n_slices, pass_idx):
    """circle-fit every axial band; returns centers, radii, inlier sets, bookkeeping."""
    u, v = orthonormal_basis(axis)
    s = cloud.points @ axis
    s_min, s_max = float(s.min()), float(s.max())
    edges = np.linspace(s_min, s_max, n_slices + 1)
    edges[-1] = np.nextafter(s_max, math.inf)  # include the top point

    centers3d, radii, inlier_sets = [], [], []
    iterations_total = 0
    failures = 0
    for i in range(n_slices):
        pts2d, idx = project_slice(
            cloud, axis, edges[i], edges[i + 1], return_indices=True
        )
        s_mid = 0.5 * (edges[i] + edges[i + 1])
        slice_cfg = replace(cfg, seed=derive_seed(cfg.seed, "slice", pass_idx, i))
        try:
            res = ransac_circle(pts2d, slice_cfg)
        except FitError:
            failures += 1
            continue
        iterations_total += res.iterations_used
        cx, cy = res.model.center
        centers3d.append(cx * u + cy * v + s_mid * axis)
        radii.append(res.model.radius)
        inlier_sets.append(idx[res.inlier_indices])
    return np.asarray(centers3d), radii, inlier_sets, iterations_total, failures


def _axis_through_centers(centers3d: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    if len(centers3d) < 2:
        return fallback
    rel = centers3d - centers3d.mean(axis=0)
    _, _, vt = np.linalg.svd(rel, full_matrices=False)
    axis_dir = vt[0]
    if axis_dir[2] < 0.0:
        axis_dir = -axis_dir
    return axis_dir


def fit_cylinder_multislice(
    cloud: PointCloud, cfg: RansacConfig, n_slices: int = 6
) -> FitResult:
    """Slice-wise robust cylinder fit.

    Pipeline: estimate_axis, split the axial extent into n_slices bands,
    RANSAC circle per band, refine the axis as the principal line through
    the band centers, radius = median band radius. The band fits run a
    second pass with the refined axis (the initial principal-direction
    estimate carries sampling tilt that would otherwise distort the
    projection), keeping noiseless recovery exact to machine precision.
    Fails when more than half the bands lack consensus.
    """
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    axis0 = estimate_axis(cloud)

    centers3d, radii, inlier_sets, iterations_total, failures = _slice_band_fits(
        cloud, axis0, cfg, n_slices, pass_idx=0
    )
    if failures > n_slices / 2 or not radii:
        raise FitError(f"consensus failure in {failures} of {n_slices} slices")
    axis_refined = _axis_through_centers(centers3d, axis0)

    centers2, radii2, sets2, iterations2, failures2 = _slice_band_fits(
        cloud, axis_refined, cfg, n_slices, pass_idx=1
    )
    if radii2 and failures2 <= n_slices / 2:
        centers3d, radii, inlier_sets = centers2, radii2, sets2
        iterations_total += iterations2

    axis_dir = _axis_through_centers(centers3d, axis_refined)
    axis_point = centers3d.mean(axis=0)
    radius = float(np.median(radii))

    inliers = np.unique(np.concatenate(inlier_sets))
    inlier_pts = cloud.points[inliers]
    res3d = distance_to_axis(inlier_pts, axis_point, axis_dir) - radius
    along = (inlier_pts - axis_point) @ axis_dir
    model = CylinderModel(
        axis_point=axis_point,
        axis_dir=axis_dir,
        radius=radius,
        z_extent=(float(along.min()), float(along.max())),
    )
    return FitResult(
        model=model,
        inlier_indices=inliers,
        rms_residual=float(np.sqrt(np.mean(res3d**2))),
        iterations_used=iterations_total,
    )


def model_diameter(model) -> float:
    """Diameter of a fitted model; ellipses report 2*sqrt(semi_major*semi_minor)."""
    if isinstance(model, (CircleModel, CylinderModel)):
        return 2.0 * model.radius
    if isinstance(model, EllipseModel):
        return 2.0 * math.sqrt(model.semi_major * model.semi_minor)
    raise TypeError(f"unsupported model type {type(model).__name__}")
