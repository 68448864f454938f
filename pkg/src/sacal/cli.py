"""Command-line interface: ``sacal calibrate | simulate | experiment``.

Exit codes: 0 success, 2 usage, 3 parse error, 4 precondition (wrong motion,
invalid input), 5 degenerate rotation/configuration, 6 I/O, 7 estimation
failed.
"""

import argparse
import math
import os
from pathlib import Path
import sys

from . import io as sio
from .estimators import AGGREGATES, SELECTIONS, calibrate
from .exceptions import (
    DegenerateConfigurationError,
    DegenerateRotationError,
    EstimationFailedError,
    InvalidInputError,
    ParseError,
    SACError,
    WrongMotionError,
)
from .geometry import ImageGeometry, Intrinsics, RotationSpec
from .harness import (
    INACCURATE_FOCAL,
    SweepConfig,
    run_angular_noise_study,
    run_focal_sweep,
    run_monte_carlo,
    run_pixel_noise_study,
    run_pp_grid,
)
from .report import ReportIOError, emit_report
from .simulator import GroundTruthCamera, NoiseSpec, calibration_triplet, generate_scene, teapot_like_scene

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_PRECONDITION = 4
EXIT_DEGENERATE = 5
EXIT_IO = 6
EXIT_ESTIMATION = 7

OUTPUT_ENV = "SACAL_OUTPUT_DIR"
EXPERIMENTS = ("fig2", "fig3", "fig4", "table1", "angular-noise", "pixel-noise")


def _default_out():
    return os.environ.get(OUTPUT_ENV, "sacal-out")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _focal(text):
    if text in ("gt", "estimated"):
        return text
    try:
        fv, fu = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("--focal must be gt, estimated or FV:FU") from None
    if fv <= 0 or fu <= 0:
        raise argparse.ArgumentTypeError("focal lengths must be positive")
    return (fv, fu)


def _exit_code(err):
    if isinstance(err, ParseError):
        return EXIT_PARSE
    if isinstance(err, (WrongMotionError, InvalidInputError)):
        return EXIT_PRECONDITION
    if isinstance(err, (DegenerateRotationError, DegenerateConfigurationError)):
        return EXIT_DEGENERATE
    if isinstance(err, EstimationFailedError):
        return EXIT_ESTIMATION
    return EXIT_PRECONDITION


# -- calibrate --------------------------------------------------------------------


def _check_motion(pair, path, role):
    rot = pair.rotation
    ok = {
        "pan": rot.pan != 0.0 and rot.tilt == 0.0,
        "tilt": rot.tilt != 0.0 and rot.pan == 0.0,
        "pantilt": rot.pan != 0.0 and rot.tilt != 0.0,
    }[role]
    if not ok:
        need = {"pan": "pan != 0 and tilt == 0", "tilt": "tilt != 0 and pan == 0", "pantilt": "pan != 0 and tilt != 0"}[role]
        raise WrongMotionError(
            f"{path}: {role} file needs {need}, got pan_deg={rot.pan_deg:g}, tilt_deg={rot.tilt_deg:g}"
        )


def cmd_calibrate(args):
    pairs = []
    for role, path in (("pan", args.pan_file), ("tilt", args.tilt_file), ("pantilt", args.pantilt_file)):
        pair = sio.read_correspondences(path)
        _check_motion(pair, path, role)
        pairs.append(pair)
    result = calibrate(*pairs, aggregate=args.aggregate, selection=args.select)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    k = result.intrinsics
    print(f"f_v = {k.f_v:.4f} px  ({result.fv_points_used} point(s))")
    print(f"f_u = {k.f_u:.4f} px  ({result.fu_points_used} point(s))")
    print(f"v_0 = {k.v_0:.4f} px")
    print(f"u_0 = {k.u_0:.4f} px  ({result.pp_points_used} point(s))")
    print(f"delta = ({result.delta_v:.4f}, {result.delta_u:.4f}) px")
    print(f"pp residual norm = {result.pp_residual_norm:.6g} px, condition ~ {result.pp_condition_estimate:.4g}")
    out = Path(args.output) if args.output else Path(args.out) / "calibration.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    sio.write_result(result, out)
    print(f"wrote {out}")
    return EXIT_OK


# -- simulate ---------------------------------------------------------------------


def _camera(args):
    return GroundTruthCamera(
        Intrinsics(args.fv, args.fu, args.v0, args.u0), ImageGeometry(args.width, args.height)
    )


def cmd_simulate(args):
    print(f"seed: {args.seed}")
    cam = _camera(args)
    noise = NoiseSpec(
        args.sigma, math.radians(args.angle_error_pan), math.radians(args.angle_error_tilt), args.seed
    )
    pt_pan = args.pan if args.pt_pan is None else args.pt_pan
    pt_tilt = args.tilt if args.pt_tilt is None else args.pt_tilt
    rotations = {
        "pan": RotationSpec.from_degrees(args.pan, 0.0),
        "tilt": RotationSpec.from_degrees(0.0, args.tilt),
        "pantilt": RotationSpec.from_degrees(pt_pan, pt_tilt),
    }
    scene = teapot_like_scene() if args.scene == "teapot" else generate_scene(args.points, seed=args.seed)
    trip = calibration_triplet(scene, cam, *rotations.values(), noise=noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, pair in zip(rotations, trip):
        sio.write_correspondences(pair, out / f"{name}.json")
        print(f"wrote {out / f'{name}.json'} ({len(pair)} points)")
    sio.write_ground_truth(out / "ground_truth.json", cam, rotations, noise, args.seed, len(scene), args.scene)
    print(f"wrote {out / 'ground_truth.json'}")
    return EXIT_OK


# -- experiment -------------------------------------------------------------------


def _sweep_cfg(args, **defaults):
    cfg = dict(defaults)
    for key, attr in (
        ("angle_min", "angle_min"),
        ("angle_max", "angle_max"),
        ("steps", "steps"),
        ("scene", "scene"),
        ("n_points", "points"),
        ("focal", "focal"),
        ("focal_selection", "select"),
    ):
        val = getattr(args, attr)
        if val is not None:
            cfg[key] = val
    cfg["seed"] = args.seed
    if args.sigma:
        cfg["noise"] = NoiseSpec(args.sigma, seed=args.seed)
    return SweepConfig(**cfg)


def _print_table1(report):
    a = report.aggregates
    gt = GroundTruthCamera().intrinsics
    print(f"{'':8s}{'f_v':>10s}{'f_u':>10s}{'v_0':>10s}{'u_0':>10s}")
    print(f"{'GT':8s}{gt.f_v:10.2f}{gt.f_u:10.2f}{gt.v_0:10.2f}{gt.u_0:10.2f}")
    for row in ("mean", "sd", "error"):
        vals = "".join(f"{a[f'{row}_{p}']:10.3f}" for p in ("fv", "fu", "v0", "u0"))
        print(f"{row.capitalize() if row != 'sd' else 'SD':8s}{vals}")
    print(f"runs ok: {int(a['n_ok'])}, failed: {int(a['n_failed'])}")


def cmd_experiment(args):
    print(f"seed: {args.seed}")
    name = args.name
    if name == "fig2":
        report = run_focal_sweep(_sweep_cfg(args, angle_min=0.5, angle_max=7.5, steps=15), experiment_id="fig2")
        first, last = report.records[0], report.records[-1]
        print(f"f_v error: {first.fv_err:.4f} px at {first.pan_deg:g} deg, {last.fv_err:.4f} px at {last.pan_deg:g} deg")
        print(f"f_u error: {first.fu_err:.4f} px at {first.tilt_deg:g} deg, {last.fu_err:.4f} px at {last.tilt_deg:g} deg")
    elif name in ("fig3", "fig4"):
        if name == "fig3":
            cfg = _sweep_cfg(args, focal="gt")
        else:
            cfg = _sweep_cfg(args, scene="teapot", subsample="quadrants", focal=INACCURATE_FOCAL)
        report = run_pp_grid(cfg, experiment_id=name)
        a = report.aggregates
        print(f"focal lengths: {cfg.focal}")
        print(f"MSE(v_0) = {a['mse_v0']:.4f} px, MSE(u_0) = {a['mse_u0']:.4f} px over {int(a['n_ok'])} cells")
    elif name == "table1":
        rot = RotationSpec.from_degrees(args.pan, args.tilt)
        report = run_monte_carlo(
            rot,
            args.runs,
            args.points or 500,
            seed=args.seed,
            selection=args.select or "nearest-center",
            noise=NoiseSpec(args.sigma, seed=args.seed),
            experiment_id="table1",
        )
        _print_table1(report)
    elif name == "angular-noise":
        cfg = _sweep_cfg(args, scene="teapot")
        errors = args.angle_errors or [round(-0.5 + 0.1 * i, 10) for i in range(11)]
        report = run_angular_noise_study(cfg, errors, base_angles=args.base_angles or [0.5, 1.0, 2.5, 5.0, 7.5])
        for base in report.metadata["base_angles_deg"]:
            a = report.aggregates
            print(
                f"base {base:g} deg: |d f_v/d err| = {a[f'abs_slope_fv@{base:g}']:.3f} px/deg, "
                f"|d f_u/d err| = {a[f'abs_slope_fu@{base:g}']:.3f} px/deg"
            )
    elif name == "pixel-noise":
        cfg = _sweep_cfg(args, scene="teapot")
        sigmas = args.sigmas or [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        if any(s > 3.0 for s in sigmas):
            print("warning: sigma values above 3 px are outside the studied range", file=sys.stderr)
        report = run_pixel_noise_study(
            cfg, sigmas, base_angles=args.base_angles or [0.5, 1.0, 2.5, 5.0, 7.5], n_seeds=args.seeds
        )
        a = report.aggregates
        for base in report.metadata["base_angles_deg"]:
            cells = ", ".join(f"{s:g}px: {a[f'mean_abs_err_fv@{base:g},{s:g}']:.2f}" for s in sigmas)
            print(f"base {base:g} deg mean |f_v error| by sigma: {cells}")
    else:  # argparse restricts choices; kept for direct callers
        raise InvalidInputError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    out = Path(args.out)
    written = emit_report(report, "csv", out) + emit_report(report, "svg", out)
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="sacal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate from three correspondence files")
    p.add_argument("pan_file")
    p.add_argument("tilt_file")
    p.add_argument("pantilt_file")
    p.add_argument("--aggregate", choices=AGGREGATES, default="mean")
    p.add_argument("--select", choices=SELECTIONS, default="all", help="points used for the focal lengths")
    p.add_argument("--output", help="result JSON path (default: <out>/calibration.json)")
    p.add_argument("--out", default=_default_out(), help=f"output directory (env {OUTPUT_ENV})")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="write synthetic correspondence files")
    p.add_argument("--out", default=_default_out(), help=f"output directory (env {OUTPUT_ENV})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pan", type=float, default=-0.5, help="pan of the pan pair (deg)")
    p.add_argument("--tilt", type=float, default=0.5, help="tilt of the tilt pair (deg)")
    p.add_argument("--pt-pan", type=float, default=None, help="pan of the pan+tilt pair (deg)")
    p.add_argument("--pt-tilt", type=float, default=None, help="tilt of the pan+tilt pair (deg)")
    p.add_argument("--sigma", type=float, default=0.0, help="pixel noise std (px)")
    p.add_argument("--angle-error-pan", type=float, default=0.0, help="deg")
    p.add_argument("--angle-error-tilt", type=float, default=0.0, help="deg")
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--scene", choices=("random", "teapot"), default="random")
    p.add_argument("--fv", type=float, default=772.55)
    p.add_argument("--fu", type=float, default=772.55)
    p.add_argument("--v0", type=float, default=314.0)
    p.add_argument("--u0", type=float, default=244.0)
    p.add_argument("--width", type=float, default=640)
    p.add_argument("--height", type=float, default=480)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run one of the simulated studies")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--out", default=_default_out(), help=f"output directory (env {OUTPUT_ENV})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--focal", type=_focal, default=None, help="gt | estimated | FV:FU")
    p.add_argument("--select", choices=SELECTIONS, default=None)
    p.add_argument("--scene", choices=("random", "teapot"), default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--angle-min", type=float, default=None)
    p.add_argument("--angle-max", type=float, default=None)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--runs", type=int, default=1000, help="table1 Monte Carlo runs")
    p.add_argument("--pan", type=float, default=-0.5, help="table1 pan (deg)")
    p.add_argument("--tilt", type=float, default=0.5, help="table1 tilt (deg)")
    p.add_argument("--sigmas", type=_floats, default=None)
    p.add_argument("--angle-errors", type=_floats, default=None)
    p.add_argument("--base-angles", type=_floats, default=None)
    p.add_argument("--seeds", type=int, default=20, help="pixel-noise seeds per cell")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SACError as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code(err)
    except (OSError, ReportIOError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
