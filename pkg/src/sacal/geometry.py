"""Rotations, the pinhole intrinsic matrix and pure-rotation homographies.

Conventions
-----------
Image points are ``(v, u)`` pairs: ``v`` is the column, ``u`` the row.
The u-axis points opposite to the camera y-axis, so the intrinsic matrix
carries ``-f_u`` on its diagonal::

    K = [[f_v,    0, v_0],
         [  0, -f_u, u_0],
         [  0,    0,   1]]

A camera that rotates by ``R`` about its centre maps a reference pixel ``p``
to ``w * p' = K @ R.T @ inv(K) @ p``.

Angles are radians. Positive pan turns the camera right, positive tilt turns
it up.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import PointAtInfinityError
from .validation import check_angle, check_finite_scalar, check_matrix3, check_positive


@dataclass(frozen=True)
class RotationSpec:
    """Pan (about y) and tilt (about x) angles in radians."""

    pan: float = 0.0
    tilt: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pan", check_angle(self.pan, "pan"))
        object.__setattr__(self, "tilt", check_angle(self.tilt, "tilt"))

    @classmethod
    def from_degrees(cls, pan_deg=0.0, tilt_deg=0.0):
        return cls(math.radians(pan_deg), math.radians(tilt_deg))

    @property
    def pan_deg(self):
        return math.degrees(self.pan)

    @property
    def tilt_deg(self):
        return math.degrees(self.tilt)

    def perturbed(self, d_pan=0.0, d_tilt=0.0):
        return RotationSpec(self.pan + d_pan, self.tilt + d_tilt)


@dataclass(frozen=True)
class Intrinsics:
    """Focal lengths and principal point in pixels; skew is always zero."""

    f_v: float
    f_u: float
    v_0: float
    u_0: float

    def __post_init__(self):
        object.__setattr__(self, "f_v", check_positive(self.f_v, "f_v"))
        object.__setattr__(self, "f_u", check_positive(self.f_u, "f_u"))
        object.__setattr__(self, "v_0", check_finite_scalar(self.v_0, "v_0"))
        object.__setattr__(self, "u_0", check_finite_scalar(self.u_0, "u_0"))

    @property
    def matrix(self):
        return intrinsic_matrix(self)

    def as_array(self):
        return np.array([self.f_v, self.f_u, self.v_0, self.u_0])


@dataclass(frozen=True)
class ImageGeometry:
    width: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "width", check_positive(self.width, "width"))
        object.__setattr__(self, "height", check_positive(self.height, "height"))

    @property
    def c_v(self):
        return self.width / 2.0

    @property
    def c_u(self):
        return self.height / 2.0

    @property
    def center(self):
        return (self.c_v, self.c_u)

    def contains(self, points):
        """Boolean mask of points inside ``[0, width] x [0, height]``."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return (
            (points[:, 0] >= 0)
            & (points[:, 0] <= self.width)
            & (points[:, 1] >= 0)
            & (points[:, 1] <= self.height)
        )


def rotation_pan(theta_p):
    """Rotation about the y-axis by ``theta_p`` radians."""
    theta_p = check_angle(theta_p, "theta_p")
    c, s = math.cos(theta_p), math.sin(theta_p)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rotation_tilt(theta_t):
    """Rotation about the x-axis by ``theta_t`` radians."""
    theta_t = check_angle(theta_t, "theta_t")
    c, s = math.cos(theta_t), math.sin(theta_t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def compose_rotation(spec):
    """``R = R_z @ R_y(pan) @ R_x(tilt)`` with the roll factor ``R_z`` fixed to identity."""
    return rotation_pan(spec.pan) @ rotation_tilt(spec.tilt)


def transposed_elements(r):
    """Return the coefficients ``r_ij`` consumed by the closed-form estimators.

    The estimator formulas are written in terms of the transposed rotation
    that appears in ``K @ R.T @ inv(K)``, indexed so that ``r_ij`` is entry
    ``(j, i)`` of ``R.T``.  The returned array ``e`` satisfies
    ``e[i - 1, j - 1] == r_ij``.  Estimators must read rotation entries only
    through this accessor.
    """
    rt = check_matrix3(r, "rotation").T
    return np.ascontiguousarray(rt.T)


def intrinsic_matrix(k):
    return np.array(
        [
            [k.f_v, 0.0, k.v_0],
            [0.0, -k.f_u, k.u_0],
            [0.0, 0.0, 1.0],
        ]
    )


def intrinsic_matrix_inverse(k):
    """Closed-form inverse of the upper-triangular intrinsic matrix."""
    return np.array(
        [
            [1.0 / k.f_v, 0.0, -k.v_0 / k.f_v],
            [0.0, -1.0 / k.f_u, k.u_0 / k.f_u],
            [0.0, 0.0, 1.0],
        ]
    )


def rotation_homography(k, r):
    """Homography ``K @ R.T @ inv(K)`` taking reference pixels to rotated-view pixels."""
    r = check_matrix3(r, "rotation")
    return intrinsic_matrix(k) @ r.T @ intrinsic_matrix_inverse(k)


def project_points(h, points):
    """Apply homography ``h`` to an (n, 2) array of (v, u) points and dehomogenize.

    Raises :class:`PointAtInfinityError` if any point maps to ``|w| < 1e-12``.
    """
    h = check_matrix3(h, "homography")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ h.T
    w = hom[:, 2]
    if np.any(np.abs(w) < 1e-12):
        raise PointAtInfinityError("point maps to infinity under homography")
    return hom[:, :2] / w[:, None]


def project_point(h, p):
    """Single-point version of :func:`project_points`; returns a ``(v, u)`` tuple."""
    v, u = project_points(h, np.asarray(p, dtype=float).reshape(1, 2))[0]
    return (float(v), float(u))


def project_rays(k, xyz):
    """Project camera-frame 3D points ``(n, 3)`` to pixels; returns (points, depth)."""
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    z = xyz[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = xyz[:, 0] / z
        y = xyz[:, 1] / z
    v = k.f_v * x + k.v_0
    u = -k.f_u * y + k.u_0
    return np.column_stack([v, u]), z


def rotate_rays(r, xyz):
    """Express camera-frame points in the frame of a camera rotated by ``r`` (i.e. apply ``r.T``)."""
    r = check_matrix3(r, "rotation")
    return np.asarray(xyz, dtype=float).reshape(-1, 3) @ r
