"""Small shared geometry helpers used by the simulator and the fitters."""

from __future__ import annotations

import numpy as np


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("zero vector has no direction")
    return v / norm


def orthonormal_basis(axis) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic in-plane basis (u, v) completing `axis` to a right-handed frame.

    For a vertical axis the basis is exactly (x-hat, y-hat); otherwise
    u = normalize(z-hat x axis) and v = axis x u.
    """
    a = unit(axis)
    zcross = np.cross([0.0, 0.0, 1.0], a)
    norm = np.linalg.norm(zcross)
    if norm < 1e-8:
        u = np.array([1.0, 0.0, 0.0])
        u = unit(u - np.dot(u, a) * a)
    else:
        u = zcross / norm
    v = np.cross(a, u)
    return u, v


def rotation_xyz(rx: float, ry: float, rz: float) -> np.ndarray:
    """Rotation from Euler angles in radians, x applied first: R = Rz @ Ry @ Rx."""
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    rot_x = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    rot_y = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rot_z = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rot_z @ rot_y @ rot_x


def distance_to_axis(points, axis_point, axis_dir) -> np.ndarray:
    """Perpendicular distance of each point to the line through axis_point along axis_dir."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rel = pts - np.asarray(axis_point, dtype=np.float64)
    a = unit(axis_dir)
    along = rel @ a
    perp = rel - np.outer(along, a)
    return np.linalg.norm(perp, axis=1)
