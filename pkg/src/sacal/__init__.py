"""Closed-form self-calibration of a pan-tilt camera from known small rotations."""

from .correspondences import Correspondence, CorrespondenceSet
from .estimator import ActiveCalibration
from .estimators import (
    CalibrationResult,
    calibrate,
    estimate_fu,
    estimate_fv,
    estimate_principal_point,
    pp_coefficients,
    pp_residual,
)
from .exceptions import (
    DegenerateConfigurationError,
    DegenerateRotationError,
    EstimationFailedError,
    InvalidInputError,
    SACError,
    WrongMotionError,
)
from .geometry import (
    ImageGeometry,
    Intrinsics,
    RotationSpec,
    compose_rotation,
    intrinsic_matrix,
    project_point,
    rotation_homography,
    rotation_pan,
    rotation_tilt,
    transposed_elements,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveCalibration",
    "CalibrationResult",
    "Correspondence",
    "CorrespondenceSet",
    "DegenerateConfigurationError",
    "DegenerateRotationError",
    "EstimationFailedError",
    "ImageGeometry",
    "Intrinsics",
    "InvalidInputError",
    "RotationSpec",
    "SACError",
    "WrongMotionError",
    "calibrate",
    "compose_rotation",
    "estimate_fu",
    "estimate_fv",
    "estimate_principal_point",
    "intrinsic_matrix",
    "pp_coefficients",
    "pp_residual",
    "project_point",
    "rotation_homography",
    "rotation_pan",
    "rotation_tilt",
    "transposed_elements",
]
