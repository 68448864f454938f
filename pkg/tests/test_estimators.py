import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sacal.correspondences import CorrespondenceSet
from sacal.estimators import (
    calibrate,
    estimate_fu,
    estimate_fv,
    estimate_principal_point,
    per_point_fu,
    per_point_fv,
    pp_coefficients,
    pp_residual,
    pp_system,
    solve_least_squares,
)
from sacal.exceptions import (
    DegenerateConfigurationError,
    DegenerateRotationError,
    EmptyCorrespondenceError,
    EstimationFailedError,
    InvalidInputError,
    WrongMotionError,
)
from sacal.geometry import ImageGeometry, Intrinsics, RotationSpec, compose_rotation, transposed_elements
from sacal.simulator import GroundTruthCamera, NoiseSpec, calibration_triplet, generate_scene, image_pair

from conftest import deg

IMG = ImageGeometry(640, 480)


# --- symbolic oracle -------------------------------------------------------


def _symbolic_residuals():
    """Projective constraints of K R^T K^-1 written with v0 = c_v + dv, u0 = c_u + du."""
    v, u, vp, up, cv, cu, dv, du = sp.symbols("v u vp up cv cu dv du", real=True)
    fv, fu = sp.symbols("fv fu", positive=True)
    r = sp.Matrix(3, 3, sp.symbols("r0:9", real=True))
    v0, u0 = cv + dv, cu + du
    kinv = sp.Matrix([[1 / fv, 0, -v0 / fv], [0, -1 / fu, u0 / fu], [0, 0, 1]])
    y = r.T * kinv * sp.Matrix([v, u, 1])
    res_v = -((vp - v0) * y[2] - fv * y[0])
    res_u = -((u0 - up) * y[2] - fu * y[1])
    args = (v, u, vp, up, cv, cu, dv, du, fv, fu, *r)
    return sp.lambdify(args, [sp.expand(res_v), sp.expand(res_u)], "numpy")


_ORACLE = _symbolic_residuals()


def test_symbolic_kinv_is_inverse():
    fv, fu, v0, u0 = sp.symbols("fv fu v0 u0", positive=True)
    k = sp.Matrix([[fv, 0, v0], [0, -fu, u0], [0, 0, 1]])
    kinv = sp.Matrix([[1 / fv, 0, -v0 / fv], [0, -1 / fu, u0 / fu], [0, 0, 1]])
    assert sp.simplify(k * kinv - sp.eye(3)) == sp.zeros(3)


@settings(max_examples=150, deadline=None)
@given(
    st.floats(-0.13, 0.13),
    st.floats(-0.13, 0.13),
    st.floats(600, 1200),
    st.floats(600, 1200),
    st.floats(-20, 20),
    st.floats(-20, 20),
    st.integers(0, 2**31),
)
def test_residual_matches_symbolic_expansion(pan, tilt, fv, fu, dv, du, seed):
    g = np.random.default_rng(seed)
    ref = g.uniform([0, 0], [640, 480], (8, 2))
    moved = g.uniform([0, 0], [640, 480], (8, 2))
    r = transposed_elements(compose_rotation(RotationSpec(pan, tilt)))
    coeffs = pp_coefficients(ref, r, fv, fu, IMG)
    got_v, got_u = pp_residual(moved, dv, du, coeffs, IMG)
    want_v, want_u = _ORACLE(
        ref[:, 0], ref[:, 1], moved[:, 0], moved[:, 1], 320.0, 240.0, dv, du, fv, fu, *r.ravel()
    )
    np.testing.assert_allclose(got_v, want_v, atol=1e-7, rtol=1e-9)
    np.testing.assert_allclose(got_u, want_u, atol=1e-7, rtol=1e-9)


def test_linear_system_is_residual_without_quadratic_terms():
    pair = image_pair(generate_scene(30, seed=3), GroundTruthCamera(), deg(1.2, -0.8))
    m, b = pp_system(pair, 772.55, 772.55)
    r = transposed_elements(compose_rotation(pair.rotation))
    c = pp_coefficients(pair.ref, r, 772.55, 772.55, IMG)
    x = np.array([2.5, -1.75])
    res_v, res_u = pp_residual(pair.moved, x[0], x[1], c, IMG)
    quad_v = c.G * x[0] ** 2 + c.H * x[0] * x[1]
    quad_u = -c.H * x[1] ** 2 - c.G * x[0] * x[1]
    np.testing.assert_allclose(m @ x - b, np.concatenate([res_v - quad_v, res_u - quad_u]), atol=1e-9)


def test_residual_vanishes_at_truth_and_broadcasts():
    cam = GroundTruthCamera()
    pair = image_pair(generate_scene(40, seed=1), cam, deg(2.0, 1.5))
    r = transposed_elements(compose_rotation(pair.rotation))
    c = pp_coefficients(pair.ref, r, 772.55, 772.55, IMG)
    res_v, res_u = pp_residual(pair.moved, -6.0, 4.0, c, IMG)
    assert np.max(np.abs(res_v)) < 1e-8 and np.max(np.abs(res_u)) < 1e-8
    grid = np.linspace(-5, 5, 7)[:, None]
    gv, gu = pp_residual(pair.moved, grid, 0.0, c, IMG)
    assert gv.shape == (7, len(pair)) and gu.shape == (7, len(pair))


def test_quadratic_terms_are_small_at_typical_shift():
    pair = image_pair(generate_scene(200, seed=2), GroundTruthCamera(), deg(5.0, 5.0))
    r = transposed_elements(compose_rotation(pair.rotation))
    c = pp_coefficients(pair.ref, r, 772.55, 772.55, IMG)
    dv, du = -6.0, 4.0
    quad = np.abs(c.G * dv**2 + c.H * dv * du)
    assert quad.max() < 1e-3 * 36  # |G|, |H| ~ sin(5 deg)/f


# --- focal lengths --------------------------------------------------------


def _pair(rot, ref, moved):
    return CorrespondenceSet(rot, np.asarray(ref, float), np.asarray(moved, float), IMG)


def test_fv_single_point_recovers_focal_at_center():
    th = math.radians(2.5)
    # a point on the image centre row maps exactly when v0 = c_v
    v_moved = 320.0 + 772.55 * math.tan(th)
    f = estimate_fv(_pair(RotationSpec(th, 0.0), [[320.0, 240.0]], [[v_moved, 240.0]]))
    assert f == pytest.approx(772.55 * math.tan(th) / math.sin(th), rel=1e-12)
    assert f == pytest.approx(772.55, abs=0.8)


def test_fu_single_point_recovers_focal_at_center():
    th = math.radians(-1.5)
    u_moved = 240.0 - 772.55 * math.tan(-th)
    f = estimate_fu(_pair(RotationSpec(0.0, th), [[320.0, 240.0]], [[320.0, u_moved]]))
    assert f == pytest.approx(772.55, abs=0.5)


def test_fv_noise_free_center_camera(centered_cam):
    # single-point bias is about f * (1/cos - 1), 0.12 px at 1 deg
    pair = image_pair(generate_scene(300, seed=4), centered_cam, deg(pan=1.0))
    assert estimate_fv(pair, selection="nearest-center") == pytest.approx(772.55, abs=0.5)
    pair = image_pair(generate_scene(300, seed=4), centered_cam, deg(tilt=-1.0))
    assert estimate_fu(pair, selection="nearest-center") == pytest.approx(772.55, abs=0.5)


@settings(max_examples=60)
@given(st.floats(0.01, 0.13), st.integers(0, 2**31))
def test_fv_is_affine_in_moved_coordinate(th, seed):
    g = np.random.default_rng(seed)
    ref = g.uniform([0, 0], [640, 480], (6, 2))
    moved = g.uniform([0, 0], [640, 480], (6, 2))
    rot = RotationSpec(th, 0.0)
    base = per_point_fv(_pair(rot, ref, moved))
    r = transposed_elements(compose_rotation(rot))
    shifted = moved + [[1.0, 0.0]]
    np.testing.assert_allclose(per_point_fv(_pair(rot, ref, shifted)) - base, 1.0 / r[2, 0], rtol=1e-9)
    shifted = ref + [[1.0, 0.0]]
    np.testing.assert_allclose(
        per_point_fv(_pair(rot, shifted, moved)) - base, -r[0, 0] / r[2, 0], rtol=1e-9
    )


@settings(max_examples=60)
@given(st.floats(0.01, 0.13), st.integers(0, 2**31))
def test_fu_is_affine_in_moved_coordinate(th, seed):
    g = np.random.default_rng(seed)
    ref = g.uniform([0, 0], [640, 480], (6, 2))
    moved = g.uniform([0, 0], [640, 480], (6, 2))
    rot = RotationSpec(0.0, th)
    base = per_point_fu(_pair(rot, ref, moved))
    r = transposed_elements(compose_rotation(rot))
    shifted = moved + [[0.0, 1.0]]
    np.testing.assert_allclose(per_point_fu(_pair(rot, ref, shifted)) - base, -1.0 / r[2, 1], rtol=1e-9)


@given(st.integers(0, 2**31), st.integers(1, 40))
def test_averaging_equals_mean_of_single_point_estimates(seed, n):
    g = np.random.default_rng(seed)
    ref = g.uniform([0, 0], [640, 480], (n, 2))
    moved = ref + [[772.55 * math.tan(0.05), 0.0]] + g.normal(0, 0.5, (n, 2))
    pair = _pair(RotationSpec(0.05, 0.0), ref, moved)
    singles = [estimate_fv(pair.subset([i])) for i in range(n)]
    assert estimate_fv(pair) == pytest.approx(np.mean(singles), rel=1e-12)
    assert estimate_fv(pair, aggregate="median") == pytest.approx(np.median(singles), rel=1e-12)


def test_nearest_center_uses_one_point():
    pair = image_pair(generate_scene(100, seed=5), GroundTruthCamera(), deg(pan=1.0))
    idx = pair.nearest_center_index()
    assert estimate_fv(pair, selection="nearest-center") == pytest.approx(estimate_fv(pair.subset([idx])))


def test_focal_wrong_motion():
    pair = _pair(deg(1.0, 1.0), [[300.0, 200.0]], [[310.0, 190.0]])
    with pytest.raises(WrongMotionError):
        estimate_fv(pair)
    with pytest.raises(WrongMotionError):
        estimate_fu(pair)


def test_focal_zero_angle_is_degenerate():
    with pytest.raises(DegenerateRotationError):
        estimate_fv(_pair(RotationSpec(), [[300.0, 200.0]], [[300.0, 200.0]]))
    with pytest.raises(DegenerateRotationError):
        estimate_fu(_pair(RotationSpec(), [[300.0, 200.0]], [[300.0, 200.0]]))
    with pytest.raises(DegenerateRotationError):
        estimate_fv(_pair(deg(pan=0.005), [[300.0, 200.0]], [[300.0, 200.0]]))


def test_focal_non_positive_estimate():
    # moved point lies on the wrong side for a positive pan
    pair = _pair(deg(pan=1.0), [[320.0, 240.0]], [[300.0, 240.0]])
    with pytest.raises(EstimationFailedError) as info:
        estimate_fv(pair)
    assert info.value.value < 0


def test_empty_set_rejected():
    with pytest.raises(EmptyCorrespondenceError):
        _pair(deg(pan=1.0), np.empty((0, 2)), np.empty((0, 2)))


@pytest.mark.parametrize("kw", [dict(aggregate="mode"), dict(selection="best")])
def test_bad_options(kw):
    with pytest.raises(InvalidInputError):
        estimate_fv(_pair(deg(pan=1.0), [[320.0, 240.0]], [[330.0, 240.0]]), **kw)


def test_focal_error_grows_with_tilt_angle(centered_cam):
    # with an off-centre principal point two signed bias terms can cancel,
    # so monotonicity is only checked for a centred camera
    scene = generate_scene(500, seed=11)
    errs = []
    for a in (0.5, 2.0, 4.0, 7.5):
        pair = image_pair(scene, centered_cam, deg(tilt=a))
        errs.append(abs(estimate_fu(pair, selection="nearest-center") - 772.55))
    assert errs == sorted(errs)


# --- least squares and principal point ------------------------------------


@given(
    st.floats(-5, 5).filter(lambda x: abs(x) > 0.1),
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(-5, 5).filter(lambda x: abs(x) > 0.1),
    st.floats(-100, 100),
    st.floats(-100, 100),
)
def test_square_system_matches_cramer(a, b, c, d, e, f):
    det = a * d - b * c
    if abs(det) < 1e-3:
        return
    x, res, cond = solve_least_squares([[a, b], [c, d]], [e, f])
    want = [(e * d - b * f) / det, (a * f - e * c) / det]
    np.testing.assert_allclose(x, want, atol=1e-10, rtol=1e-10)
    assert res < 1e-8 * (1 + abs(e) + abs(f))
    assert cond >= 1.0


def test_single_point_pp_system_matches_closed_form():
    pair = image_pair(generate_scene(50, seed=8), GroundTruthCamera(), deg(3.0, -2.0)).subset([0])
    m, b = pp_system(pair, 772.55, 772.55)
    assert m.shape == (2, 2)
    x, _, _ = solve_least_squares(m, b)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    want = [(b[0] * m[1, 1] - m[0, 1] * b[1]) / det, (m[0, 0] * b[1] - b[0] * m[1, 0]) / det]
    np.testing.assert_allclose(x, want, atol=1e-10)


def test_rank_deficient_system():
    with pytest.raises(DegenerateConfigurationError):
        solve_least_squares([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]], [1.0, 2.0, 3.0])


def test_pp_center_camera_gives_zero_shift(centered_cam):
    pair = image_pair(generate_scene(200, seed=9), centered_cam, deg(2.0, 2.0))
    est = estimate_principal_point(pair, 772.55, 772.55)
    assert abs(est.delta_v) < 1e-6 and abs(est.delta_u) < 1e-6
    assert est.n_points == len(pair)


def _quadratic_ratio(pair, x):
    m, _ = pp_system(pair, 772.55, 772.55)
    r = transposed_elements(compose_rotation(pair.rotation))
    c = pp_coefficients(pair.ref, r, 772.55, 772.55, IMG)
    n = len(pair)
    quad = np.concatenate(
        [np.full(n, c.G * x[0] ** 2 + c.H * x[0] * x[1]), np.full(n, -c.H * x[1] ** 2 - c.G * x[0] * x[1])]
    )
    return np.linalg.norm(quad) / np.linalg.norm(m @ x)


@pytest.mark.parametrize("angles", [(0.5, 0.5), (1.0, -2.5), (2.5, 2.5), (-2.5, 1.0)])
def test_pp_linearization_at_default_offset(angles):
    pair = image_pair(generate_scene(500, seed=10), GroundTruthCamera(), deg(*angles))
    est = estimate_principal_point(pair, 772.55, 772.55)
    x = np.array([est.delta_v, est.delta_u])
    assert _quadratic_ratio(pair, x) < 0.03
    np.testing.assert_allclose(x, [-6.0, 4.0], atol=0.05)


@pytest.mark.parametrize("offset", [(20.0, -20.0), (-20.0, 20.0), (20.0, 20.0)])
@pytest.mark.parametrize("angles", [(0.5, 0.5), (1.0, -2.5), (2.5, 2.5), (-2.5, 1.0)])
def test_pp_linearization_at_large_offset(offset, angles):
    k = Intrinsics(772.55, 772.55, 320.0 + offset[0], 240.0 + offset[1])
    pair = image_pair(generate_scene(500, seed=10), GroundTruthCamera(k), deg(*angles))
    est = estimate_principal_point(pair, 772.55, 772.55)
    x = np.array([est.delta_v, est.delta_u])
    # quadratic terms reach ~10% of the linear ones here; the shift stays within a pixel
    assert _quadratic_ratio(pair, x) < 0.12
    np.testing.assert_allclose(x, offset, atol=1.0)


def test_pp_requires_both_axes():
    pair = _pair(deg(pan=1.0), [[300.0, 200.0], [10.0, 20.0]], [[310.0, 200.0], [20.0, 20.0]])
    with pytest.raises(DegenerateRotationError):
        estimate_principal_point(pair, 772.55, 772.55)


# --- full pipeline --------------------------------------------------------


def test_calibrate_noise_free():
    triplet = calibration_triplet(
        generate_scene(500, seed=12), GroundTruthCamera(), deg(pan=-0.5), deg(tilt=0.5), deg(-0.5, 0.5)
    )
    res = calibrate(*triplet, selection="nearest-center")
    k = res.intrinsics
    assert k.f_v == pytest.approx(772.55, abs=1.0)
    assert k.f_u == pytest.approx(772.55, abs=1.0)
    assert k.v_0 == pytest.approx(314.0, abs=0.5)
    assert k.u_0 == pytest.approx(244.0, abs=0.5)
    assert res.fv_points_used == 1 and res.pp_points_used == len(triplet[2])
    assert len(res.warnings) == 4
    d = res.to_dict()
    assert set(d) >= {"intrinsics", "warnings"}


def test_calibrate_tags_failing_stage():
    scene = generate_scene(100, seed=13)
    cam = GroundTruthCamera()
    pan, tilt, pt = calibration_triplet(scene, cam, deg(pan=2), deg(tilt=2), deg(2, 2))
    with pytest.raises(WrongMotionError) as info:
        calibrate(pt, tilt, pt)
    assert info.value.stage == "fv"
    assert str(info.value).startswith("[stage fv]")
    with pytest.raises(WrongMotionError) as info:
        calibrate(pan, pan, pt)
    assert info.value.stage == "fu"
    with pytest.raises(DegenerateRotationError) as info:
        calibrate(pan, tilt, tilt)
    assert info.value.stage == "pp"


def test_calibrate_rejects_mixed_images():
    scene = generate_scene(100, seed=13)
    pan, tilt, pt = calibration_triplet(scene, GroundTruthCamera(), deg(pan=2), deg(tilt=2), deg(2, 2))
    other = CorrespondenceSet(pt.rotation, pt.ref, pt.moved, ImageGeometry(800, 600))
    with pytest.raises(InvalidInputError):
        calibrate(pan, tilt, other)


def test_calibrate_pixel_noise_is_finite():
    triplet = calibration_triplet(
        generate_scene(500, seed=14),
        GroundTruthCamera(),
        deg(pan=5),
        deg(tilt=5),
        deg(5, 5),
        NoiseSpec(sigma_pixel=0.5, seed=1),
    )
    k = calibrate(*triplet).intrinsics
    assert np.all(np.isfinite(k.as_array()))
    assert isinstance(k, Intrinsics)
