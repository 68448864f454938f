"""Matched points between a reference image and an image taken after a known rotation."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError
from .geometry import ImageGeometry, RotationSpec
from .validation import check_image_points


@dataclass(frozen=True)
class Correspondence:
    """One match: ``ref = (v, u)`` in the reference view, ``moved = (v', u')`` after rotation."""

    ref: tuple
    moved: tuple

    def __post_init__(self):
        ref = check_image_points(self.ref, "ref")[0]
        moved = check_image_points(self.moved, "moved")[0]
        object.__setattr__(self, "ref", (float(ref[0]), float(ref[1])))
        object.__setattr__(self, "moved", (float(moved[0]), float(moved[1])))


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    """All matches for one image pair, stored as (n, 2) arrays of (v, u)."""

    rotation: RotationSpec
    ref: np.ndarray
    moved: np.ndarray
    image: ImageGeometry = field(default_factory=lambda: ImageGeometry(640, 480))

    def __post_init__(self):
        if not isinstance(self.rotation, RotationSpec):
            raise InvalidInputError("rotation must be a RotationSpec")
        if not isinstance(self.image, ImageGeometry):
            raise InvalidInputError("image must be an ImageGeometry")
        ref = check_image_points(self.ref, "ref").copy()
        moved = check_image_points(self.moved, "moved").copy()
        if ref.shape != moved.shape:
            raise InvalidInputError(
                f"ref and moved must have the same shape, got {ref.shape} and {moved.shape}"
            )
        ref.flags.writeable = False
        moved.flags.writeable = False
        object.__setattr__(self, "ref", ref)
        object.__setattr__(self, "moved", moved)

    @classmethod
    def from_points(cls, rotation, points, image):
        points = list(points)
        ref = [c.ref for c in points]
        moved = [c.moved for c in points]
        return cls(rotation, np.array(ref, dtype=float), np.array(moved, dtype=float), image)

    def __len__(self):
        return self.ref.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CorrespondenceSet):
            return NotImplemented
        return (
            self.rotation == other.rotation
            and self.image == other.image
            and np.array_equal(self.ref, other.ref)
            and np.array_equal(self.moved, other.moved)
        )

    __hash__ = None

    @property
    def points(self):
        return [Correspondence(tuple(r), tuple(m)) for r, m in zip(self.ref, self.moved)]

    def subset(self, indices):
        indices = np.atleast_1d(np.asarray(indices, dtype=int))
        return CorrespondenceSet(self.rotation, self.ref[indices], self.moved[indices], self.image)

    def with_rotation(self, rotation):
        """Same matches, different declared rotation (used for angular-uncertainty studies)."""
        return CorrespondenceSet(rotation, self.ref, self.moved, self.image)

    def nearest_center_index(self):
        """Index of the reference point closest to the image centre; ties go to the lowest index."""
        d2 = (self.ref[:, 0] - self.image.c_v) ** 2 + (self.ref[:, 1] - self.image.c_u) ** 2
        return int(np.argmin(d2))
