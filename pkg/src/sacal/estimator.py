"""scikit-learn style front end to the calibration pipeline."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .correspondences import CorrespondenceSet
from .estimators import (
    AGGREGATES,
    ANGLE_FLOOR,
    SELECTIONS,
    CalibrationResult,
    calibrate,
    estimate_principal_point,
    sensitivity_warnings,
)
from .exceptions import InvalidInputError
from .geometry import Intrinsics, compose_rotation, project_points, rotation_homography
from .validation import check_image_points, check_positive


class ActiveCalibration(BaseEstimator):
    """Estimate pinhole intrinsics from pan, tilt and pan+tilt correspondence sets.

    Parameters
    ----------
    focal_aggregate : {"mean", "median"}
        How per-match focal lengths are combined.
    focal_selection : {"all", "nearest-center"}
        Use every match for the focal lengths, or only the one closest to
        the image centre.
    focal_lengths : tuple of (f_v, f_u) or None
        If given, the focal stages are skipped and ``fit`` only needs the
        pan+tilt pair.
    angle_floor : float
        Rotations smaller than this (radians) are rejected as degenerate.

    Attributes
    ----------
    intrinsics_ : Intrinsics
    result_ : CalibrationResult
    camera_matrix_ : ndarray of shape (3, 3)
    """

    def __init__(self, focal_aggregate="mean", focal_selection="all", focal_lengths=None, angle_floor=ANGLE_FLOOR):
        self.focal_aggregate = focal_aggregate
        self.focal_selection = focal_selection
        self.focal_lengths = focal_lengths
        self.angle_floor = angle_floor

    def _validate_params(self):
        if self.focal_aggregate not in AGGREGATES:
            raise InvalidInputError(f"focal_aggregate must be one of {AGGREGATES}")
        if self.focal_selection not in SELECTIONS:
            raise InvalidInputError(f"focal_selection must be one of {SELECTIONS}")
        check_positive(self.angle_floor, "angle_floor")

    def fit(self, pan_pair=None, tilt_pair=None, pantilt_pair=None):
        self._validate_params()
        if not isinstance(pantilt_pair, CorrespondenceSet):
            raise InvalidInputError("pantilt_pair must be a CorrespondenceSet")
        if self.focal_lengths is None:
            result = calibrate(
                pan_pair,
                tilt_pair,
                pantilt_pair,
                aggregate=self.focal_aggregate,
                selection=self.focal_selection,
                angle_floor=self.angle_floor,
            )
        else:
            f_v, f_u = (check_positive(f, "focal length") for f in self.focal_lengths)
            pp = estimate_principal_point(pantilt_pair, f_v, f_u, angle_floor=self.angle_floor)
            result = CalibrationResult(
                intrinsics=Intrinsics(f_v, f_u, pp.v_0, pp.u_0),
                fv_points_used=0,
                fu_points_used=0,
                pp_points_used=pp.n_points,
                pp_residual_norm=pp.residual_norm,
                pp_condition_estimate=pp.condition_estimate,
                delta_v=pp.delta_v,
                delta_u=pp.delta_u,
                warnings=sensitivity_warnings(("pan-tilt pair", pantilt_pair.rotation)),
            )
        self.result_ = result
        self.intrinsics_ = result.intrinsics
        self.camera_matrix_ = result.intrinsics.matrix
        return self

    def predict(self, X, rotation):
        """Where reference points ``X`` (n, 2) land after ``rotation`` under the fitted camera."""
        check_is_fitted(self, "intrinsics_")
        X = check_image_points(X, "X")
        h = rotation_homography(self.intrinsics_, compose_rotation(rotation))
        return project_points(h, X)

    def score(self, pair):
        """Negative RMS reprojection error (px) on a correspondence set; higher is better."""
        pred = self.predict(pair.ref, pair.rotation)
        return -float(np.sqrt(np.mean(np.sum((pred - pair.moved) ** 2, axis=1))))
