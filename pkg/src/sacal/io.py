"""JSON file formats for correspondences, ground truth and calibration results.

Correspondence file::

    {
      "image": {"width": 640, "height": 480},
      "rotation": {"pan_deg": -0.5, "tilt_deg": 0.0},
      "points": [{"v": 1.0, "u": 2.0, "v_prime": 3.0, "u_prime": 4.0}, ...]
    }

Angles are degrees in files and radians everywhere else.
"""

from dataclasses import asdict
import json
import math
from pathlib import Path

import numpy as np

from .correspondences import CorrespondenceSet
from .exceptions import InvalidInputError, ParseError
from .geometry import ImageGeometry, RotationSpec


def _dump(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _load(path):
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from None


def _number(obj, key, where, path):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{path}: missing field {where}.{key}")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ParseError(f"{path}: field {where}.{key} must be a finite number, got {val!r}")
    return float(val)


def correspondences_to_dict(pair):
    return {
        "image": {"width": pair.image.width, "height": pair.image.height},
        "rotation": {"pan_deg": pair.rotation.pan_deg, "tilt_deg": pair.rotation.tilt_deg},
        "points": [
            {"v": float(r[0]), "u": float(r[1]), "v_prime": float(m[0]), "u_prime": float(m[1])}
            for r, m in zip(pair.ref, pair.moved)
        ],
    }


def correspondences_from_dict(doc, path="<memory>"):
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    for key in ("image", "rotation", "points"):
        if key not in doc:
            raise ParseError(f"{path}: missing field {key}")
    width = _number(doc["image"], "width", "image", path)
    height = _number(doc["image"], "height", "image", path)
    if width <= 0 or height <= 0:
        raise ParseError(f"{path}: image width/height must be positive")
    pan = _number(doc["rotation"], "pan_deg", "rotation", path)
    tilt = _number(doc["rotation"], "tilt_deg", "rotation", path)
    points = doc["points"]
    if not isinstance(points, list) or not points:
        raise ParseError(f"{path}: points must be a non-empty list")
    ref, moved = [], []
    for i, p in enumerate(points):
        where = f"points[{i}]"
        ref.append((_number(p, "v", where, path), _number(p, "u", where, path)))
        moved.append((_number(p, "v_prime", where, path), _number(p, "u_prime", where, path)))
    try:
        rot = RotationSpec.from_degrees(pan, tilt)
    except InvalidInputError as err:
        raise ParseError(f"{path}: rotation: {err}") from None
    return CorrespondenceSet(rot, np.array(ref), np.array(moved), ImageGeometry(width, height))


def write_correspondences(pair, path):
    _dump(correspondences_to_dict(pair), path)


def read_correspondences(path):
    return correspondences_from_dict(_load(path), path)


def write_ground_truth(path, camera, rotations, noise, seed, n_points, scene):
    doc = {
        "intrinsics": asdict(camera.intrinsics),
        "image": asdict(camera.image),
        "rotations": {
            name: {"pan_deg": r.pan_deg, "tilt_deg": r.tilt_deg} for name, r in rotations.items()
        },
        "noise": {
            "sigma_pixel": noise.sigma_pixel,
            "angle_error_pan_deg": math.degrees(noise.angle_error_pan),
            "angle_error_tilt_deg": math.degrees(noise.angle_error_tilt),
        },
        "seed": int(seed),
        "n_points": int(n_points),
        "scene": scene,
    }
    _dump(doc, path)


def read_ground_truth(path):
    return _load(path)


def write_result(result, path):
    _dump(result.to_dict(), path)
