"""Point-cloud data model: clouds, crop boxes, rigid transforms, summary stats.

All geometry is carried as float64 numpy arrays in meters. Values are
immutable after construction so they can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-9


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    return pts


@dataclass(frozen=True)
class PointCloud:
    """Ordered 3D points with optional per-point RGB color.

    Parameters
    ----------
    points : (n, 3) float64 array
        Coordinates in meters; must be finite.
    colors : (n, 3) uint8 array, optional
        Per-point RGB, one row per point when present.
    """

    points: np.ndarray
    colors: np.ndarray | None = None

    def __post_init__(self):
        pts = _as_points(self.points)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.colors is not None:
            col = np.asarray(self.colors, dtype=np.uint8)
            if col.size == 0:
                col = col.reshape(0, 3)
            if col.shape != (len(pts), 3):
                raise ValueError(
                    f"colors must have shape ({len(pts)}, 3), got {col.shape}"
                )
            col.setflags(write=False)
            object.__setattr__(self, "colors", col)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty((0, 3)))


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box with inclusive bounds on every face."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if np.any(lo > hi):
            raise ValueError(f"Aabb min {lo} exceeds max {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the box (inclusive)."""
        pts = _as_points(points)
        return np.all((pts >= self.min) & (pts <= self.max), axis=1)


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion p' = R @ p + t.

    The rotation must be orthonormal with determinant +1 (to 1e-9).
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        tr = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(rot @ rot.T, np.eye(3), atol=_ORTHO_TOL, rtol=0.0):
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(rot) < 0.0:
            raise ValueError("rotation has negative determinant (reflection)")
        rot.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_translation(cls, translation) -> "RigidTransform":
        return cls(np.eye(3), translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying `other` first, then self."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rot_inv = self.rotation.T
        return RigidTransform(rot_inv, -rot_inv @ self.translation)

    def apply(self, points) -> np.ndarray:
        pts = _as_points(points)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True)
class CloudStats:
    """Count, centroid and tight axis-aligned bounds of a cloud.

    `centroid`, `bounds_min` and `bounds_max` are None for an empty cloud.
    """

    count: int
    centroid: np.ndarray | None
    bounds_min: np.ndarray | None
    bounds_max: np.ndarray | None


def crop_aabb(cloud: PointCloud, box: Aabb) -> PointCloud:
    """Keep exactly the points inside `box` (inclusive faces), order preserved."""
    mask = box.contains(cloud.points)
    colors = cloud.colors[mask] if cloud.colors is not None else None
    return PointCloud(cloud.points[mask], colors)


def apply_rigid_transform(cloud: PointCloud, transform: RigidTransform) -> PointCloud:
    """Map every point through p' = R @ p + t; colors are carried along."""
    return PointCloud(transform.apply(cloud.points), cloud.colors)


def cloud_stats(cloud: PointCloud) -> CloudStats:
    """Summarize a cloud; centroid and bounds are absent when it is empty."""
    n = len(cloud)
    if n == 0:
        return CloudStats(0, None, None, None)
    pts = cloud.points
    return CloudStats(n, pts.mean(axis=0), pts.min(axis=0), pts.max(axis=0))
