import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latticetact.errors import CalibrationError, InvalidInputError
from latticetact.estimator import (
    EstimatorCalibration,
    calibrate,
    calibrate_arrays,
    calibration_sweep,
    contact_arc,
    estimate_displacement,
    fit_through_origin,
    weighted_sums,
)
from latticetact.model import TipDisplacement, synth_tip_pressures

finite = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
pvec = arrays(np.float64, 7, elements=finite)

# weight matrix written out by hand from the three weighted sums
S = math.sqrt(3) / 2
W = np.array([
    [0, -S, -S, 0, S, S, 0],
    [1, 0.5, -0.5, -1, -0.5, 0.5, 0],
    [-1 / 6] * 6 + [1],
])


def test_weights_example_channels_5_6():
    wx, wy, wz = weighted_sums([0, 0, 0, 0, 1, 1, 0])
    assert wx == pytest.approx(math.sqrt(3))
    assert wy == pytest.approx(0.0, abs=1e-15)
    assert wz == pytest.approx(-1 / 3)


def test_weights_example_channels_1_4():
    assert weighted_sums([1, 0, 0, -1, 0, 0, 0]) == pytest.approx((0.0, 2.0, 0.0))


@pytest.mark.parametrize("i", range(7))
def test_weights_unit_vectors(i):
    e = np.zeros(7)
    e[i] = 1.0
    assert np.allclose(weighted_sums(e), W[:, i], atol=1e-15)


def test_weight_rows_sum_to_zero():
    assert np.allclose(W.sum(axis=1), 0.0, atol=1e-15)


@given(pvec)
def test_weights_match_matrix(p):
    assert np.allclose(weighted_sums(p), W @ p, rtol=1e-12, atol=1e-9)


@given(pvec, finite)
@settings(max_examples=300)
def test_common_mode_rejection(p, c):
    a = np.array(weighted_sums(p))
    b = np.array(weighted_sums(p + c))
    assert np.allclose(a, b, rtol=0, atol=1e-12 * max(1.0, abs(c), np.abs(p).max()))


def test_constant_vector_is_rejected():
    for c in (0.0, 1.0, -3.5, 101325.0):
        assert np.allclose(weighted_sums(np.full(7, c)), 0.0, rtol=0, atol=1e-12 * max(1.0, c))


def test_non_finite_rejected():
    with pytest.raises(InvalidInputError):
        weighted_sums([0, 0, 0, math.nan, 0, 0, 0])
    with pytest.raises(InvalidInputError):
        weighted_sums([0, 0, 0])


@given(pvec, pvec, st.floats(-10, 10))
def test_estimate_linear(p, q, k):
    cal = EstimatorCalibration(0.02, 0.03, 0.04)
    a = estimate_displacement(np.stack([p, q, k * p, p + q]), cal)
    assert np.allclose(a[2], k * a[0], atol=1e-9 * (1 + np.abs(a).max()))
    assert np.allclose(a[3], a[0] + a[1], atol=1e-9 * (1 + np.abs(a).max()))


def test_estimate_zero():
    est = estimate_displacement(np.zeros(7), EstimatorCalibration(1, 1, 1))
    assert est == TipDisplacement(0.0, 0.0, 0.0)


def test_fitted_roundtrip_dx5(params, cal):
    est = estimate_displacement(synth_tip_pressures(params, TipDisplacement(dx=5.0)), cal)
    assert est.dx == pytest.approx(5.0, abs=1e-6)
    assert est.dy == pytest.approx(0.0, abs=1e-9)
    assert est.dz == pytest.approx(0.0, abs=1e-9)


def test_fitted_alphas_match_forward_gains(params, cal):
    # oracle: wx = 3 * bend_gain * dx, wz = -(axial - coupling) * dz
    assert cal.alpha_x == pytest.approx(1 / (3 * params.bend_gain))
    assert cal.alpha_y == pytest.approx(1 / (3 * params.bend_gain))
    assert cal.alpha_z == pytest.approx(1 / (params.axial_gain - params.axial_coupling))


def test_rotation_under_channel_shift(rng):
    cal = EstimatorCalibration(0.05, 0.05, 0.02)
    c, s = math.cos(math.pi / 3), math.sin(math.pi / 3)
    for _ in range(100):
        p = rng.normal(size=7) * 50
        q = p.copy()
        q[:6] = np.roll(p[:6], 1)
        a = estimate_displacement(p, cal)
        b = estimate_displacement(q, cal)
        assert b.dx == pytest.approx(c * a.dx - s * a.dy, abs=1e-9)
        assert b.dy == pytest.approx(s * a.dx + c * a.dy, abs=1e-9)
        assert b.dz == pytest.approx(a.dz, abs=1e-12)


def test_fit_through_origin_exact():
    w = np.linspace(-3, 3, 13)
    alpha, r2 = fit_through_origin(w, 2.0 * w)
    assert alpha == pytest.approx(2.0)
    assert r2 == pytest.approx(1.0)


def test_fit_degenerate():
    with pytest.raises(CalibrationError):
        fit_through_origin(np.zeros(5), np.ones(5))


def test_calibrate_degenerate_axis_named(params):
    disp = np.zeros((10, 3))
    disp[:, 0] = np.linspace(-5, 5, 10)
    disp[:, 2] = -np.linspace(0, 2, 10)
    with pytest.raises(CalibrationError, match="axis y"):
        calibrate_arrays(synth_tip_pressures(params, disp), disp)


def test_calibrate_pairs(params):
    disp, _ = calibration_sweep(params, n=11)
    samples = [(p, TipDisplacement.from_array(d)) for p, d in zip(synth_tip_pressures(params, disp), disp)]
    cal = calibrate(samples)
    assert cal.r2["x"] == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(CalibrationError):
        calibrate(samples[:1])


def test_sweep_r2_noiseless(params, cal):
    assert all(cal.r2[a] == pytest.approx(1.0, abs=1e-9) for a in "xyz")


def test_beyond_linear_range_r2_drops(params):
    disp, _ = calibration_sweep(params, xy_range=30.0)
    cal = calibrate_arrays(synth_tip_pressures(params, disp), disp)
    assert cal.r2["x"] < 0.999
    assert cal.r2["z"] == pytest.approx(1.0, abs=1e-9)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-3, 0))
@settings(max_examples=200)
def test_roundtrip_within_linear_range(params, cal, x, y, z):
    if math.hypot(x, y) > 10:
        return
    est = estimate_displacement(synth_tip_pressures(params, [x, y, z]), cal).as_array()
    truth = np.array([x, y, z])
    assert np.all(np.abs(est - truth) <= 0.01 * np.abs(truth) + 1e-9)


def test_calibration_file_roundtrip(tmp_path, cal):
    path = tmp_path / "cal.txt"
    cal.save(path)
    text = path.read_text()
    assert "r2_x" in text
    assert EstimatorCalibration.load(path) == cal
    path.write_text("alpha_x = 1\nalpha_y = 1\n")
    with pytest.raises(CalibrationError, match="alpha_z"):
        EstimatorCalibration.load(path)


def test_calibration_rejects_nonpositive():
    with pytest.raises(CalibrationError):
        EstimatorCalibration(0.0, 1.0, 1.0)


def test_contact_arc_examples():
    assert contact_arc((0.0, 0.0, 0.0)) is None
    assert contact_arc((1.0, 0.0, 0.0)).center_angle == pytest.approx(math.pi / 2)
    assert contact_arc((1.0, 1.0, 0.0)).center_angle == pytest.approx(math.pi / 4)
    assert contact_arc((0.0, 1.0, 0.0)).center_angle == pytest.approx(0.0)
    arc = contact_arc(TipDisplacement(0.0, -2.0, 0.0), lattice_radius=16, thickness=1.5)
    assert arc.radius == pytest.approx(17.5)
    assert arc.span == pytest.approx(math.radians(60))
    assert contact_arc((0.3, 0.3, 0.0), threshold=0.5) is None
