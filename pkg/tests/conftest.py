import math

import numpy as np
import pytest

from sacal.geometry import ImageGeometry, Intrinsics, RotationSpec
from sacal.simulator import GroundTruthCamera, generate_scene

TABLE1_K = Intrinsics(772.55, 772.55, 314.0, 244.0)


@pytest.fixture
def cam():
    return GroundTruthCamera()


@pytest.fixture
def centered_cam():
    """Principal point exactly at the centre of a 640x480 image."""
    return GroundTruthCamera(Intrinsics(772.55, 772.55, 320.0, 240.0), ImageGeometry(640, 480))


@pytest.fixture
def scene():
    return generate_scene(500, seed=7)


def deg(pan=0.0, tilt=0.0):
    return RotationSpec(math.radians(pan), math.radians(tilt))


def rng(seed=0):
    return np.random.default_rng(seed)
