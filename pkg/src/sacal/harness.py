"""Simulated experiments: focal sweeps, principal-point grids, Monte Carlo and noise studies.

Every study returns an :class:`ExperimentReport` whose records map one-to-one
onto CSV rows (see :mod:`sacal.report`). Aggregates are always computed from
the records by :func:`summarize`, so they can be recomputed from a parsed CSV.
"""

from dataclasses import asdict, dataclass, field, replace
import math

import numpy as np

from .exceptions import (
    DegenerateConfigurationError,
    DegenerateRotationError,
    EmptyCorrespondenceError,
    EstimationFailedError,
    InvalidInputError,
    SACError,
    WrongMotionError,
)
from .estimators import calibrate, estimate_fu, estimate_fv, estimate_principal_point
from .geometry import RotationSpec
from .simulator import (
    DEFAULT_BOUNDS,
    GroundTruthCamera,
    NoiseSpec,
    calibration_triplet,
    generate_scene,
    image_pair,
    quadrant_scene,
    teapot_like_scene,
)

PARAMS = ("fv", "fu", "v0", "u0")
INACCURATE_FOCAL = (771.18, 774.71)

CSV_COLUMNS = (
    "experiment_id",
    "pan_deg",
    "tilt_deg",
    "sigma_pixel",
    "angle_err_deg",
    "fv_est",
    "fu_est",
    "v0_est",
    "u0_est",
    "fv_err",
    "fu_err",
    "v0_err",
    "u0_err",
    "status",
)

_ERROR_KINDS = {
    DegenerateRotationError: "degenerate-rotation",
    WrongMotionError: "wrong-motion",
    EstimationFailedError: "estimation-failed",
    DegenerateConfigurationError: "degenerate-configuration",
    EmptyCorrespondenceError: "empty",
}


def _status(err, stage=None):
    kind = next((v for k, v in _ERROR_KINDS.items() if isinstance(err, k)), "failed")
    stage = stage or err.stage
    return f"{stage}:{kind}" if stage else kind


@dataclass(frozen=True)
class Record:
    experiment_id: str
    pan_deg: float
    tilt_deg: float
    sigma_pixel: float = 0.0
    angle_err_deg: float = 0.0
    fv_est: float = math.nan
    fu_est: float = math.nan
    v0_est: float = math.nan
    u0_est: float = math.nan
    fv_err: float = math.nan
    fu_err: float = math.nan
    v0_err: float = math.nan
    u0_err: float = math.nan
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"

    def as_row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass(frozen=True)
class ExperimentReport:
    experiment_id: str
    kind: str
    records: tuple
    aggregates: dict
    metadata: dict = field(default_factory=dict)

    def column(self, name, ok_only=True):
        rows = [r for r in self.records if r.ok or not ok_only]
        return np.array([getattr(r, name) for r in rows], dtype=float)


@dataclass(frozen=True)
class SweepConfig:
    """Parameters shared by the grid and sweep studies.

    ``focal`` is ``"estimated"``, ``"gt"`` or a fixed ``(f_v, f_u)`` pair.
    ``subsample="quadrants"`` keeps one scene point per image quadrant.
    """

    angle_min: float = -7.5
    angle_max: float = 7.5
    steps: int = 30
    scene: str = "random"
    n_points: int = 500
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    focal: object = "estimated"
    focal_selection: str = "nearest-center"
    focal_aggregate: str = "mean"
    subsample: str | None = None
    camera: GroundTruthCamera = field(default_factory=GroundTruthCamera)
    bounds: tuple = DEFAULT_BOUNDS

    def __post_init__(self):
        if not self.angle_min < self.angle_max:
            raise InvalidInputError("angle_min must be < angle_max")
        if int(self.steps) < 2:
            raise InvalidInputError("steps must be >= 2")
        if self.scene not in ("random", "teapot"):
            raise InvalidInputError(f"scene must be 'random' or 'teapot', got {self.scene!r}")
        if self.subsample not in (None, "quadrants"):
            raise InvalidInputError(f"unknown subsample {self.subsample!r}")
        if isinstance(self.focal, str):
            if self.focal not in ("estimated", "gt"):
                raise InvalidInputError(f"focal must be 'estimated', 'gt' or (f_v, f_u), got {self.focal!r}")
        else:
            fv, fu = (float(x) for x in self.focal)
            if not (fv > 0 and fu > 0):
                raise InvalidInputError("fixed focal lengths must be positive")
            object.__setattr__(self, "focal", (fv, fu))

    def angles(self):
        return np.linspace(self.angle_min, self.angle_max, int(self.steps))

    def build_scene(self):
        if self.scene == "teapot":
            scene = teapot_like_scene()
        else:
            scene = generate_scene(self.n_points, self.bounds, self.seed)
        if self.subsample == "quadrants":
            scene = quadrant_scene(scene, self.camera)
        return scene

    def describe(self):
        d = asdict(self)
        d["noise"] = asdict(self.noise)
        d["camera"] = {
            "intrinsics": asdict(self.camera.intrinsics),
            "image": asdict(self.camera.image),
        }
        return d


def _cell_noise(noise, index):
    seed = int(np.random.SeedSequence([noise.seed, index]).generate_state(1)[0])
    return replace(noise, seed=seed)


def _record_from_estimate(exp_id, gt, pan_deg, tilt_deg, est, status="ok", sigma=0.0, angle_err=0.0):
    est = np.asarray(est, dtype=float)
    err = est - gt.as_array()
    return Record(
        exp_id,
        float(pan_deg),
        float(tilt_deg),
        float(sigma),
        float(angle_err),
        *(float(x) for x in est),
        *(float(x) for x in err),
        status,
    )


def _result_record(exp_id, gt, pan_deg, tilt_deg, fn, sigma=0.0, angle_err=0.0):
    try:
        res = fn()
    except SACError as err:
        return Record(exp_id, float(pan_deg), float(tilt_deg), float(sigma), float(angle_err), status=_status(err))
    return _record_from_estimate(
        exp_id, gt, pan_deg, tilt_deg, res.intrinsics.as_array(), sigma=sigma, angle_err=angle_err
    )


# -- aggregates -----------------------------------------------------------


def _ok(records):
    return [r for r in records if r.ok]


def _errors(records, p):
    return np.array([getattr(r, f"{p}_err") for r in records], dtype=float)


def _summarize_focal_sweep(records):
    out = {"n_records": float(len(records))}
    for p in ("fv", "fu"):
        e = _errors(records, p)
        e = e[np.isfinite(e)]
        out[f"n_ok_{p}"] = float(e.size)
        out[f"mean_abs_err_{p}"] = float(np.mean(np.abs(e))) if e.size else math.nan
        out[f"mse_{p}"] = float(np.mean(e**2)) if e.size else math.nan
    return out


def _summarize_pp_grid(records):
    ok = [r for r in _ok(records) if r.pan_deg != 0.0 and r.tilt_deg != 0.0]
    out = {"n_records": float(len(records)), "n_ok": float(len(ok)), "n_failed": float(len(records) - len(ok))}
    for p in ("v0", "u0"):
        e = _errors(ok, p)
        est = np.array([getattr(r, f"{p}_est") for r in ok], dtype=float)
        out[f"mse_{p}"] = float(np.mean(e**2)) if e.size else math.nan
        out[f"mean_{p}"] = float(np.mean(est)) if e.size else math.nan
        out[f"max_abs_err_{p}"] = float(np.max(np.abs(e))) if e.size else math.nan
    return out


def _summarize_monte_carlo(records):
    ok = _ok(records)
    n = len(ok)
    out = {"n_records": float(len(records)), "n_ok": float(n), "n_failed": float(len(records) - n)}
    out["sd_available"] = 1.0 if n >= 2 else 0.0
    for p in PARAMS:
        est = np.array([getattr(r, f"{p}_est") for r in ok], dtype=float)
        e = _errors(ok, p)
        out[f"mean_{p}"] = float(np.mean(est)) if n else math.nan
        out[f"sd_{p}"] = float(np.std(est, ddof=1)) if n >= 2 else math.nan
        out[f"error_{p}"] = float(abs(np.mean(e))) if n else math.nan
        out[f"mean_abs_err_{p}"] = float(np.mean(np.abs(e))) if n else math.nan
    return out


def _by(records, key):
    groups = {}
    for r in records:
        groups.setdefault(getattr(r, key), []).append(r)
    return groups


def _summarize_angular(records):
    out = {"n_records": float(len(records)), "n_failed": float(sum(not r.ok for r in records))}
    for base, rows in sorted(_by(records, "pan_deg").items()):
        ok = _ok(rows)
        x = np.array([r.angle_err_deg for r in ok], dtype=float)
        for p in PARAMS:
            e = _errors(ok, p)
            key = f"{p}@{base:g}"
            if x.size >= 2 and np.ptp(x) > 0:
                slope = float(np.polyfit(x, e, 1)[0])
            else:
                slope = math.nan
            out[f"slope_{key}"] = slope
            out[f"abs_slope_{key}"] = abs(slope)
    return out


def _summarize_pixel(records):
    out = {"n_records": float(len(records)), "n_failed": float(sum(not r.ok for r in records))}
    for base, rows in sorted(_by(records, "pan_deg").items()):
        for sigma, cell in sorted(_by(rows, "sigma_pixel").items()):
            ok = _ok(cell)
            for p in PARAMS:
                e = _errors(ok, p)
                key = f"{p}@{base:g},{sigma:g}"
                out[f"mean_abs_err_{key}"] = float(np.mean(np.abs(e))) if e.size else math.nan
                out[f"var_err_{key}"] = float(np.var(e, ddof=1)) if e.size >= 2 else math.nan
    return out


_SUMMARIZERS = {
    "focal_sweep": _summarize_focal_sweep,
    "pp_grid": _summarize_pp_grid,
    "monte_carlo": _summarize_monte_carlo,
    "angular_noise": _summarize_angular,
    "pixel_noise": _summarize_pixel,
}


def summarize(kind, records):
    return _SUMMARIZERS[kind](list(records))


def _report(exp_id, kind, records, metadata):
    records = tuple(records)
    return ExperimentReport(exp_id, kind, records, summarize(kind, records), metadata)


# -- studies ----------------------------------------------------------------


def run_focal_sweep(cfg, experiment_id="fig2"):
    """Focal-length error against rotation angle.

    Each grid angle yields one record: ``f_v`` from a pan by that angle and
    ``f_u`` from a tilt by that angle, both on the same scene.
    """
    scene = cfg.build_scene()
    gt = cfg.camera.intrinsics
    records = []
    for i, a in enumerate(cfg.angles()):
        noise = _cell_noise(cfg.noise, i)
        vals = {}
        status = "ok"
        for p, rot, fn in (
            ("fv", RotationSpec.from_degrees(a, 0.0), estimate_fv),
            ("fu", RotationSpec.from_degrees(0.0, a), estimate_fu),
        ):
            try:
                pair = image_pair(scene, cfg.camera, rot, noise)
                vals[p] = fn(pair, aggregate=cfg.focal_aggregate, selection=cfg.focal_selection)
            except SACError as err:
                if status == "ok":
                    status = _status(err, p)
        fv = vals.get("fv", math.nan)
        fu = vals.get("fu", math.nan)
        records.append(
            Record(
                experiment_id,
                float(a),
                float(a),
                cfg.noise.sigma_pixel,
                0.0,
                fv_est=fv,
                fu_est=fu,
                fv_err=fv - gt.f_v,
                fu_err=fu - gt.f_u,
                status=status,
            )
        )
    return _report(experiment_id, "focal_sweep", records, {"config": cfg.describe()})


def _focal_for_cell(cfg, scene, pan_deg, tilt_deg, noise):
    if cfg.focal == "gt":
        k = cfg.camera.intrinsics
        return k.f_v, k.f_u
    if cfg.focal == "estimated":
        opts = dict(aggregate=cfg.focal_aggregate, selection=cfg.focal_selection)
        try:
            fv = estimate_fv(image_pair(scene, cfg.camera, RotationSpec.from_degrees(pan_deg, 0.0), noise), **opts)
        except SACError as err:
            err.stage = "fv"
            raise
        try:
            fu = estimate_fu(image_pair(scene, cfg.camera, RotationSpec.from_degrees(0.0, tilt_deg), noise), **opts)
        except SACError as err:
            err.stage = "fu"
            raise
        return fv, fu
    return cfg.focal


def run_pp_grid(cfg, experiment_id="fig3"):
    """Principal point over the full pan x tilt grid with the configured focal lengths."""
    scene = cfg.build_scene()
    gt = cfg.camera.intrinsics
    angles = cfg.angles()
    records = []
    for i, p in enumerate(angles):
        for j, t in enumerate(angles):
            noise = _cell_noise(cfg.noise, i * len(angles) + j)
            try:
                fv, fu = _focal_for_cell(cfg, scene, p, t, noise)
                pair = image_pair(scene, cfg.camera, RotationSpec.from_degrees(p, t), noise)
                pp = estimate_principal_point(pair, fv, fu)
            except SACError as err:
                records.append(Record(experiment_id, float(p), float(t), cfg.noise.sigma_pixel, status=_status(err, err.stage or "pp")))
                continue
            records.append(
                _record_from_estimate(experiment_id, gt, p, t, (fv, fu, pp.v_0, pp.u_0), sigma=cfg.noise.sigma_pixel)
            )
    meta = {"config": cfg.describe(), "n_scene_points": len(scene)}
    return _report(experiment_id, "pp_grid", records, meta)


def run_monte_carlo(
    angles,
    runs,
    points_per_run,
    seed=0,
    camera=None,
    selection="nearest-center",
    aggregate="mean",
    noise=None,
    bounds=DEFAULT_BOUNDS,
    experiment_id="table1",
):
    """Full calibration on ``runs`` fresh random scenes at one pan/tilt setting.

    The pan pair rotates by ``angles.pan``, the tilt pair by ``angles.tilt``
    and the third pair by both.
    """
    runs = int(runs)
    if runs < 1:
        raise InvalidInputError("runs must be >= 1")
    camera = camera or GroundTruthCamera()
    noise = noise or NoiseSpec()
    pan = RotationSpec(angles.pan, 0.0)
    tilt = RotationSpec(0.0, angles.tilt)
    seeds = np.random.SeedSequence(seed).generate_state(runs)
    records = []
    for k, s in enumerate(seeds):
        scene = generate_scene(points_per_run, bounds, int(s))

        def run():
            trip = calibration_triplet(scene, camera, pan, tilt, angles, _cell_noise(noise, k))
            return calibrate(*trip, aggregate=aggregate, selection=selection)

        records.append(
            _result_record(experiment_id, camera.intrinsics, angles.pan_deg, angles.tilt_deg, run, sigma=noise.sigma_pixel)
        )
    meta = {
        "seed": seed,
        "runs": runs,
        "points_per_run": int(points_per_run),
        "pan_deg": angles.pan_deg,
        "tilt_deg": angles.tilt_deg,
        "selection": selection,
        "aggregate": aggregate,
    }
    return _report(experiment_id, "monte_carlo", records, meta)


def _base_rotations(b):
    return (
        RotationSpec.from_degrees(b, 0.0),
        RotationSpec.from_degrees(0.0, b),
        RotationSpec.from_degrees(b, b),
    )


def run_angular_noise_study(base_cfg, angle_errors, base_angles=None, experiment_id="angular-noise"):
    """Re-estimate fixed correspondences with contaminated nominal angles.

    For each base angle ``b`` the three pairs are rendered once with the true
    rotations (pan ``b``, tilt ``b``, pan+tilt ``(b, b)``). Each angle error
    ``e`` (degrees) is then added to every rotated axis of the declared
    rotations before calibrating.
    """
    angle_errors = [float(e) for e in angle_errors]
    if not angle_errors:
        raise InvalidInputError("angle_errors must not be empty")
    bases = base_cfg.angles() if base_angles is None else np.asarray(base_angles, dtype=float)
    scene = base_cfg.build_scene()
    cam = base_cfg.camera
    records = []
    for i, b in enumerate(bases):
        rots = _base_rotations(b)
        try:
            trip = calibration_triplet(scene, cam, *rots, noise=_cell_noise(base_cfg.noise, i))
        except SACError as err:
            records.extend(
                Record(experiment_id, float(b), float(b), base_cfg.noise.sigma_pixel, e, status=_status(err))
                for e in angle_errors
            )
            continue
        for e in angle_errors:
            d = math.radians(e)

            def run():
                declared = [
                    pair.with_rotation(
                        RotationSpec(
                            pair.rotation.pan + (d if pair.rotation.pan != 0.0 else 0.0),
                            pair.rotation.tilt + (d if pair.rotation.tilt != 0.0 else 0.0),
                        )
                    )
                    for pair in trip
                ]
                return calibrate(*declared, aggregate=base_cfg.focal_aggregate, selection=base_cfg.focal_selection)

            records.append(_result_record(experiment_id, cam.intrinsics, b, b, run, sigma=base_cfg.noise.sigma_pixel, angle_err=e))
    meta = {"config": base_cfg.describe(), "angle_errors_deg": angle_errors, "base_angles_deg": [float(b) for b in bases]}
    return _report(experiment_id, "angular_noise", records, meta)


def run_pixel_noise_study(base_cfg, sigmas, base_angles=None, n_seeds=20, experiment_id="pixel-noise"):
    """Calibrate under Gaussian pixel noise for each ``sigma`` and base angle.

    Seed ``k`` uses the same underlying normal draws for every sigma, so the
    error curves over sigma are directly comparable.
    """
    sigmas = [float(s) for s in sigmas]
    if not sigmas or min(sigmas) < 0:
        raise InvalidInputError("sigmas must be a non-empty list of non-negative values")
    bases = base_cfg.angles() if base_angles is None else np.asarray(base_angles, dtype=float)
    scene = base_cfg.build_scene()
    cam = base_cfg.camera
    records = []
    for b in bases:
        rots = _base_rotations(b)
        for sigma in sigmas:
            for k in range(int(n_seeds)):
                noise = replace(_cell_noise(base_cfg.noise, k), sigma_pixel=sigma)

                def run():
                    trip = calibration_triplet(scene, cam, *rots, noise=noise)
                    return calibrate(*trip, aggregate=base_cfg.focal_aggregate, selection=base_cfg.focal_selection)

                records.append(_result_record(experiment_id, cam.intrinsics, b, b, run, sigma=sigma))
    meta = {
        "config": base_cfg.describe(),
        "sigmas": sigmas,
        "base_angles_deg": [float(b) for b in bases],
        "n_seeds": int(n_seeds),
        "sigma_out_of_range": any(s > 3.0 for s in sigmas),
    }
    return _report(experiment_id, "pixel_noise", records, meta)
