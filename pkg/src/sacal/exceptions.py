"""Exception hierarchy used across the package."""


class SACError(Exception):
    """Base class for all calibration errors.

    ``stage`` is filled in by :func:`sacal.estimators.calibrate` when an error
    escapes one of the pipeline stages (``"fv"``, ``"fu"`` or ``"pp"``).
    """

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[stage {self.stage}] {msg}"
        return msg


class InvalidInputError(SACError, ValueError):
    pass


class EmptyCorrespondenceError(InvalidInputError):
    pass


class ParseError(InvalidInputError):
    """Malformed correspondence or config file."""


class DegenerateRotationError(SACError):
    """Rotation too small (or zero) for the requested estimate."""


class WrongMotionError(SACError):
    """Declared rotation does not match the motion a stage requires."""


class EstimationFailedError(SACError):
    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class DegenerateConfigurationError(SACError):
    """Rank-deficient principal-point system."""


class PointAtInfinityError(SACError):
    pass
