"""Synthetic pan-tilt camera.

Scenes live in the reference camera frame (z along the optical axis). A
rotated view is rendered by re-expressing each point in the rotated camera
frame (``R.T @ X``) and projecting with the ground-truth intrinsics, which is
the 3D counterpart of the homography ``K @ R.T @ inv(K)``.

Random streams are numpy ``PCG64`` generators derived from
``numpy.random.SeedSequence`` so results are reproducible across platforms.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .correspondences import CorrespondenceSet
from .exceptions import EmptyCorrespondenceError, InvalidInputError
from .geometry import (
    ImageGeometry,
    Intrinsics,
    RotationSpec,
    compose_rotation,
    project_rays,
    rotate_rays,
)
from .validation import check_finite_scalar

# Spans almost the whole 640x480 frame of the default camera at zero rotation.
# Principal-point accuracy with imperfect focal lengths degrades quickly as
# the matches crowd the centre, so the box is deliberately wide; points that
# leave the frame under larger rotations are dropped.
DEFAULT_BOUNDS = ((-4.0, 4.0), (-3.0, 3.0), (10.0, 14.0))


@dataclass(frozen=True)
class GroundTruthCamera:
    intrinsics: Intrinsics = field(default_factory=lambda: Intrinsics(772.55, 772.55, 314.0, 244.0))
    image: ImageGeometry = field(default_factory=lambda: ImageGeometry(640, 480))


@dataclass(frozen=True)
class NoiseSpec:
    """Pixel noise std (px) and additive angle errors (rad) applied at render time."""

    sigma_pixel: float = 0.0
    angle_error_pan: float = 0.0
    angle_error_tilt: float = 0.0
    seed: int = 0

    def __post_init__(self):
        sigma = check_finite_scalar(self.sigma_pixel, "sigma_pixel")
        if sigma < 0:
            raise InvalidInputError(f"sigma_pixel must be >= 0, got {sigma}")
        object.__setattr__(self, "sigma_pixel", sigma)
        object.__setattr__(
            self, "angle_error_pan", check_finite_scalar(self.angle_error_pan, "angle_error_pan")
        )
        object.__setattr__(
            self, "angle_error_tilt", check_finite_scalar(self.angle_error_tilt, "angle_error_tilt")
        )


@dataclass(frozen=True, eq=False)
class Scene:
    points: np.ndarray
    seed: int | None = None
    bounds: tuple | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 3)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    __hash__ = None


def _check_bounds(bounds):
    try:
        b = np.asarray(bounds, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError("bounds must be ((xmin, xmax), (ymin, ymax), (zmin, zmax))") from None
    if b.shape != (3, 2) or not np.all(np.isfinite(b)):
        raise InvalidInputError("bounds must be ((xmin, xmax), (ymin, ymax), (zmin, zmax))")
    if np.any(b[:, 0] > b[:, 1]):
        raise InvalidInputError(f"inverted bounds {b.tolist()}")
    if b[2, 0] <= 0:
        raise InvalidInputError("bounds must lie in front of the camera (zmin > 0)")
    return b


def generate_scene(n, bounds=DEFAULT_BOUNDS, seed=0):
    """``n`` points uniform in an axis-aligned box, deterministic per seed."""
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    b = _check_bounds(bounds)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pts = rng.uniform(b[:, 0], b[:, 1], size=(n, 3))
    return Scene(pts, seed=seed, bounds=tuple(map(tuple, b.tolist())))


def teapot_like_scene(n_body=420, depth=10.0, scale=1.3):
    """Deterministic teapot-shaped point cloud centred on the optical axis.

    A body of revolution sampled on a golden-angle spiral, plus a spout, a
    handle arc and a lid knob. About 500 points; at the defaults the cloud
    spans most of a 640x480 image for the default camera at zero rotation.
    """
    golden = math.pi * (3.0 - math.sqrt(5.0))
    k = np.arange(n_body)
    # height parameter in [-1, 1]; radius profile of a squat pot
    h = 1.0 - 2.0 * (k + 0.5) / n_body
    phi = golden * k
    radius = 2.0 * np.sqrt(np.clip(1.0 - h**2, 0.0, None)) * (1.0 + 0.15 * (1.0 - h))
    body = np.column_stack([radius * np.cos(phi), 1.4 * h, radius * np.sin(phi)])

    t = np.linspace(0.0, 1.0, 30)
    spout = np.column_stack([2.0 + 0.9 * t, -0.3 + 0.9 * t**1.5, 0.15 * np.sin(6 * math.pi * t)])
    a = np.linspace(-0.45 * math.pi, 0.45 * math.pi, 30)
    handle = np.column_stack([-2.2 - 0.6 * np.cos(a), 0.7 * np.sin(a), 0.1 * np.cos(3 * a)])
    b = np.linspace(0.0, 2.0 * math.pi, 20, endpoint=False)
    knob = np.column_stack([0.3 * np.cos(b), 1.55 + 0.15 * np.sin(2 * b), 0.3 * np.sin(b)])

    pts = scale * np.vstack([body, spout, handle, knob])
    pts[:, 2] += depth
    return Scene(pts, seed=None, bounds=None)


def _render(scene, cam, r):
    pix, z = project_rays(cam.intrinsics, rotate_rays(r, scene.points))
    return pix, z


def image_pair(scene, cam=None, rot=None, noise=None, in_view_only=True):
    """Render a correspondence set for ``rot`` with optional noise.

    The rotated view is rendered with the rotation perturbed by the noise
    spec's angle errors, while the returned set records the nominal
    rotation. Points behind either camera are dropped, as are points outside
    either image when ``in_view_only``. Pixel noise is drawn from independent
    streams for the two views.
    """
    cam = cam or GroundTruthCamera()
    rot = rot or RotationSpec()
    noise = noise or NoiseSpec()
    actual = rot.perturbed(noise.angle_error_pan, noise.angle_error_tilt)

    ref, z_ref = _render(scene, cam, np.eye(3))
    moved, z_mov = _render(scene, cam, compose_rotation(actual))
    keep = (z_ref > 0) & (z_mov > 0)
    if in_view_only:
        keep &= cam.image.contains(ref) & cam.image.contains(moved)
    if not np.any(keep):
        raise EmptyCorrespondenceError("no scene point is visible in both views")
    ref, moved = ref[keep], moved[keep]

    if noise.sigma_pixel > 0:
        ref_ss, mov_ss = np.random.SeedSequence(noise.seed).spawn(2)
        ref = ref + np.random.default_rng(ref_ss).normal(0.0, noise.sigma_pixel, ref.shape)
        moved = moved + np.random.default_rng(mov_ss).normal(0.0, noise.sigma_pixel, moved.shape)
    return CorrespondenceSet(rot, ref, moved, cam.image)


def _quadrant_indices(ref, image):
    chosen = []
    for qv in (0.25, 0.75):
        for qu in (0.25, 0.75):
            in_q = ((ref[:, 0] >= image.c_v) == (qv > 0.5)) & ((ref[:, 1] >= image.c_u) == (qu > 0.5))
            idx = np.flatnonzero(in_q)
            if idx.size == 0:
                continue
            d2 = (ref[idx, 0] - qv * image.width) ** 2 + (ref[idx, 1] - qu * image.height) ** 2
            chosen.append(int(idx[np.argmin(d2)]))
    return chosen


def quadrant_subsample(pair):
    """Pick one match per image quadrant: the one nearest that quadrant's centre.

    Quadrants are taken around the image centre in the reference view.
    Empty quadrants are skipped.
    """
    return pair.subset(_quadrant_indices(pair.ref, pair.image))


def quadrant_scene(scene, cam=None):
    """Reduce ``scene`` to the (up to) four points :func:`quadrant_subsample` would keep."""
    cam = cam or GroundTruthCamera()
    ref, z = _render(scene, cam, np.eye(3))
    visible = np.flatnonzero((z > 0) & cam.image.contains(ref))
    idx = visible[_quadrant_indices(ref[visible], cam.image)]
    return Scene(scene.points[idx], seed=scene.seed, bounds=scene.bounds)


def calibration_triplet(scene, cam, pan, tilt, pantilt, noise=None, in_view_only=True):
    """Pan, tilt and pan+tilt correspondence sets for one scene.

    Each pair gets its own noise seed derived from ``noise.seed``. Angle
    errors only contaminate the axes a pair actually rotates about.
    """
    noise = noise or NoiseSpec()
    seeds = np.random.SeedSequence(noise.seed).generate_state(3)
    pairs = []
    for rot, s in zip((pan, tilt, pantilt), seeds):
        spec = NoiseSpec(
            noise.sigma_pixel,
            noise.angle_error_pan if rot.pan != 0.0 else 0.0,
            noise.angle_error_tilt if rot.tilt != 0.0 else 0.0,
            int(s),
        )
        pairs.append(image_pair(scene, cam, rot, spec, in_view_only=in_view_only))
    return tuple(pairs)
