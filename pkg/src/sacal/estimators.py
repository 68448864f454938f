"""Closed-form intrinsic estimation from known pan/tilt rotations.

The pipeline has three stages:

1. ``f_v`` from a pan-only pair, one value per match then averaged.
2. ``f_u`` from a tilt-only pair, same scheme.
3. The principal point from a pan+tilt pair. Writing it as the image centre
   plus a small shift ``(delta_v, delta_u)`` makes the projection equations
   quadratic in the shift with tiny quadratic coefficients. Dropping those
   terms leaves a ``2n x 2`` linear least-squares problem.

Hatted quantities are centre-relative with the u-axis flipped::

    v_hat = v - c_v        u_hat = c_u - u
"""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .correspondences import CorrespondenceSet
from .exceptions import (
    DegenerateConfigurationError,
    DegenerateRotationError,
    EstimationFailedError,
    InvalidInputError,
    SACError,
    WrongMotionError,
)
from .geometry import Intrinsics, compose_rotation, transposed_elements
from .validation import check_positive

ANGLE_FLOOR = math.radians(0.01)
SENSITIVITY_ANGLE = math.radians(1.0)
_MIN_DIVISOR = 1e-8

AGGREGATES = ("mean", "median")
SELECTIONS = ("all", "nearest-center")


@dataclass(frozen=True)
class PPCoefficients:
    """Coefficients of the shifted principal-point equations.

    ``A, B, D, E, G, H`` depend only on the rotation and focal lengths;
    ``C, F, I`` are per-point arrays.
    """

    A: float
    B: float
    C: np.ndarray
    D: float
    E: float
    F: np.ndarray
    G: float
    H: float
    I: np.ndarray  # noqa: E741


@dataclass(frozen=True)
class PrincipalPointEstimate:
    v_0: float
    u_0: float
    delta_v: float
    delta_u: float
    residual_norm: float
    condition_estimate: float
    n_points: int


@dataclass(frozen=True)
class CalibrationResult:
    intrinsics: Intrinsics
    fv_points_used: int
    fu_points_used: int
    pp_points_used: int
    pp_residual_norm: float
    pp_condition_estimate: float
    delta_v: float
    delta_u: float
    warnings: tuple = field(default_factory=tuple)

    def to_dict(self):
        d = asdict(self)
        d["intrinsics"] = asdict(self.intrinsics)
        d["warnings"] = list(self.warnings)
        return d


def _check_options(aggregate, selection):
    if aggregate not in AGGREGATES:
        raise InvalidInputError(f"aggregate must be one of {AGGREGATES}, got {aggregate!r}")
    if selection not in SELECTIONS:
        raise InvalidInputError(f"selection must be one of {SELECTIONS}, got {selection!r}")


def _select(pair, selection):
    if selection == "nearest-center":
        return pair.subset([pair.nearest_center_index()])
    return pair


def _aggregate(values, aggregate):
    return float(np.median(values)) if aggregate == "median" else float(np.mean(values))


def per_point_fv(pair):
    """Per-match ``f_v`` values from a pan-only pair (no motion checks)."""
    r = transposed_elements(compose_rotation(pair.rotation))
    r11, r31 = r[0, 0], r[2, 0]
    if abs(r31) < _MIN_DIVISOR:
        raise DegenerateRotationError(f"pan rotation too small: |r31| = {abs(r31):.3g}")
    v, vp = pair.ref[:, 0], pair.moved[:, 0]
    return (vp - r11 * v - (1.0 - r11) * pair.image.c_v) / r31


def per_point_fu(pair):
    """Per-match ``f_u`` values from a tilt-only pair (no motion checks)."""
    r = transposed_elements(compose_rotation(pair.rotation))
    r22, r32 = r[1, 1], r[2, 1]
    if abs(r32) < _MIN_DIVISOR:
        raise DegenerateRotationError(f"tilt rotation too small: |r32| = {abs(r32):.3g}")
    u, up = pair.ref[:, 1], pair.moved[:, 1]
    return (r22 * u - up + (1.0 - r22) * pair.image.c_u) / r32


def _focal(pair, per_point, aggregate, selection, label):
    _check_options(aggregate, selection)
    chosen = _select(pair, selection)
    value = _aggregate(per_point(chosen), aggregate)
    if not value > 0:
        raise EstimationFailedError(f"non-positive {label} estimate {value!r}", value=value)
    return value, len(chosen)


def _check_pan_only(rotation, angle_floor):
    if rotation.tilt != 0.0:
        raise WrongMotionError(f"f_v needs a pan-only rotation, got tilt={rotation.tilt_deg:g} deg")
    if abs(rotation.pan) < angle_floor:
        raise DegenerateRotationError(
            f"|pan| = {abs(rotation.pan_deg):g} deg is below the {math.degrees(angle_floor):g} deg floor"
        )


def _check_tilt_only(rotation, angle_floor):
    if rotation.pan != 0.0:
        raise WrongMotionError(f"f_u needs a tilt-only rotation, got pan={rotation.pan_deg:g} deg")
    if abs(rotation.tilt) < angle_floor:
        raise DegenerateRotationError(
            f"|tilt| = {abs(rotation.tilt_deg):g} deg is below the {math.degrees(angle_floor):g} deg floor"
        )


def estimate_fv(pair, aggregate="mean", selection="all", angle_floor=ANGLE_FLOOR):
    """Focal length along v from a pan-only pair.

    Each match gives ``f_v = (v' - r11 v - (1 - r11) c_v) / r31``; the
    estimate is their mean (or median). ``selection="nearest-center"`` uses
    only the match closest to the image centre.
    """
    _check_pan_only(pair.rotation, angle_floor)
    return _focal(pair, per_point_fv, aggregate, selection, "f_v")[0]


def estimate_fu(pair, aggregate="mean", selection="all", angle_floor=ANGLE_FLOOR):
    """Focal length along u from a tilt-only pair: ``f_u = (r22 u - u' + (1 - r22) c_u) / r32``."""
    _check_tilt_only(pair.rotation, angle_floor)
    return _focal(pair, per_point_fu, aggregate, selection, "f_u")[0]


def pp_coefficients(ref, r, f_v, f_u, image):
    """Coefficients of the shifted principal-point equations for reference points ``ref``.

    ``r`` is the output of :func:`sacal.geometry.transposed_elements`.
    """
    f_v = check_positive(f_v, "f_v")
    f_u = check_positive(f_u, "f_u")
    ref = np.asarray(ref, dtype=float).reshape(-1, 2)
    v_hat = ref[:, 0] - image.c_v
    u_hat = image.c_u - ref[:, 1]
    r11, r12, r13 = r[0]
    r21, r22, r23 = r[1]
    r31, r32, r33 = r[2]
    return PPCoefficients(
        A=-r11,
        B=r21 * f_v / f_u,
        C=r11 * v_hat + r21 * u_hat * f_v / f_u + r31 * f_v,
        D=-r12 * f_u / f_v,
        E=r22,
        F=r12 * v_hat * f_u / f_v + r22 * u_hat + r32 * f_u,
        G=-r13 / f_v,
        H=r23 / f_u,
        I=r13 * v_hat / f_v + r23 * u_hat / f_u + r33,
    )


def _moved_hats(moved, image):
    moved = np.asarray(moved, dtype=float).reshape(-1, 2)
    return moved[:, 0] - image.c_v, image.c_u - moved[:, 1]


def pp_system(pair, f_v, f_u):
    """Stacked linear system ``M @ [delta_v, delta_u] = b`` (v rows first, then u rows)."""
    r = transposed_elements(compose_rotation(pair.rotation))
    c = pp_coefficients(pair.ref, r, f_v, f_u, pair.image)
    vp, up = _moved_hats(pair.moved, pair.image)
    n = len(pair)
    m = np.empty((2 * n, 2))
    m[:n, 0] = c.A + c.I - c.G * vp
    m[:n, 1] = c.B - c.H * vp
    m[n:, 0] = c.D - c.G * up
    m[n:, 1] = c.E - c.I - c.H * up
    b = np.concatenate([vp * c.I - c.C, up * c.I - c.F])
    return m, b


def solve_least_squares(m, b):
    """Least-squares solve via Householder QR.

    Returns ``(x, residual_norm, condition)`` where ``condition`` estimates the
    condition number of the normal equations, ``cond(R)**2``.
    """
    m = np.asarray(m, dtype=float)
    b = np.asarray(b, dtype=float)
    q, r = np.linalg.qr(m, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
    if diag.size < m.shape[1] or np.min(diag) <= 1e-12 * scale:
        raise DegenerateConfigurationError("principal-point system is rank deficient")
    x = np.linalg.solve(r, q.T @ b)
    sv = np.linalg.svd(r, compute_uv=False)
    condition = float((sv[0] / sv[-1]) ** 2)
    residual = float(np.linalg.norm(m @ x - b))
    return x, residual, condition


def estimate_principal_point(pair, f_v, f_u, angle_floor=ANGLE_FLOOR):
    """Principal point from a pan+tilt pair with known focal lengths."""
    rot = pair.rotation
    if abs(rot.pan) < angle_floor or abs(rot.tilt) < angle_floor:
        raise DegenerateRotationError(
            "principal point needs both pan and tilt above the "
            f"{math.degrees(angle_floor):g} deg floor, got pan={rot.pan_deg:g}, tilt={rot.tilt_deg:g}"
        )
    m, b = pp_system(pair, f_v, f_u)
    (dv, du), residual, condition = solve_least_squares(m, b)
    return PrincipalPointEstimate(
        v_0=pair.image.c_v + float(dv),
        u_0=pair.image.c_u + float(du),
        delta_v=float(dv),
        delta_u=float(du),
        residual_norm=residual,
        condition_estimate=condition,
        n_points=len(pair),
    )


def pp_residual(moved, delta_v, delta_u, coeffs, image):
    """Residuals of the full quadratic principal-point equations.

    Includes the quadratic terms the linear solve drops. ``delta_v`` and
    ``delta_u`` broadcast against the per-point arrays, so a column of
    candidate shifts evaluates a whole grid at once.
    """
    vp, up = _moved_hats(moved, image)
    c = coeffs
    dv = np.asarray(delta_v, dtype=float)
    du = np.asarray(delta_u, dtype=float)
    res_v = (
        c.G * dv**2
        + c.H * dv * du
        + (c.A + c.I - c.G * vp) * dv
        + (c.B - c.H * vp) * du
        - (c.I * vp - c.C)
    )
    res_u = (
        -c.H * du**2
        - c.G * dv * du
        + (c.D - c.G * up) * dv
        + (c.E - c.I - c.H * up) * du
        - (c.I * up - c.F)
    )
    return res_v, res_u


def sensitivity_warnings(*rotations):
    """Messages for declared non-zero rotations under 1 degree."""
    out = []
    for label, rot in rotations:
        for name, angle in (("pan", rot.pan), ("tilt", rot.tilt)):
            if angle != 0.0 and abs(angle) < SENSITIVITY_ANGLE:
                out.append(
                    f"{label}: {name} of {math.degrees(angle):g} deg is below 1 deg; "
                    "estimates are sensitive to angular and pixel noise"
                )
    return tuple(out)


def _run_stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except SACError as err:
        err.stage = stage
        raise


def calibrate(
    pan_pair,
    tilt_pair,
    pantilt_pair,
    aggregate="mean",
    selection="all",
    angle_floor=ANGLE_FLOOR,
):
    """Run all three stages and assemble the intrinsics.

    Errors from a stage are re-raised with ``err.stage`` set to ``"fv"``,
    ``"fu"`` or ``"pp"``.
    """
    for p in (pan_pair, tilt_pair, pantilt_pair):
        if not isinstance(p, CorrespondenceSet):
            raise InvalidInputError("calibrate expects three CorrespondenceSet instances")
    if not (pan_pair.image == tilt_pair.image == pantilt_pair.image):
        raise InvalidInputError("all three pairs must share one image geometry")

    _run_stage("fv", _check_pan_only, pan_pair.rotation, angle_floor)
    f_v, n_v = _run_stage("fv", _focal, pan_pair, per_point_fv, aggregate, selection, "f_v")
    _run_stage("fu", _check_tilt_only, tilt_pair.rotation, angle_floor)
    f_u, n_u = _run_stage("fu", _focal, tilt_pair, per_point_fu, aggregate, selection, "f_u")
    pp = _run_stage("pp", estimate_principal_point, pantilt_pair, f_v, f_u, angle_floor)

    return CalibrationResult(
        intrinsics=Intrinsics(f_v, f_u, pp.v_0, pp.u_0),
        fv_points_used=n_v,
        fu_points_used=n_u,
        pp_points_used=pp.n_points,
        pp_residual_norm=pp.residual_norm,
        pp_condition_estimate=pp.condition_estimate,
        delta_v=pp.delta_v,
        delta_u=pp.delta_u,
        warnings=sensitivity_warnings(
            ("pan pair", pan_pair.rotation),
            ("tilt pair", tilt_pair.rotation),
            ("pan-tilt pair", pantilt_pair.rotation),
        ),
    )
