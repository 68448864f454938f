"""Input validation helpers shared by the estimators and the simulator."""

import math

import numpy as np

from .exceptions import EmptyCorrespondenceError, InvalidInputError


def check_finite_scalar(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(value, name):
    value = check_finite_scalar(value, name)
    if value <= 0:
        raise InvalidInputError(f"{name} must be positive, got {value!r}")
    return value


def check_angle(theta, name="angle"):
    """Validate an angle in radians: finite and within [-pi/2, pi/2]."""
    theta = check_finite_scalar(theta, name)
    if abs(theta) > math.pi / 2:
        raise InvalidInputError(f"|{name}| must be <= pi/2 rad, got {theta!r}")
    return theta


def check_image_points(points, name="points", allow_empty=False):
    """Coerce ``points`` to a finite float array of shape (n, 2) holding (v, u) pairs."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.shape[0] == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        if arr.size == 0 and allow_empty:
            return arr.reshape(0, 2)
        raise InvalidInputError(f"{name} must have shape (n, 2), got {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise EmptyCorrespondenceError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite coordinates")
    return arr


def check_matrix3(m, name="matrix"):
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise InvalidInputError(f"{name} must be 3x3, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr
