import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from perception_entropy.entropy_core import (
    AP_MAX,
    AP_MIN,
    CAMERA_CURVE,
    LIDAR_CURVE,
    ApCurve,
    ApSample,
    DegenerateFitError,
    ap_array,
    ap_from_measurement,
    box_surface_area,
    entropy_array,
    fit_ap_curve,
    gaussian_entropy,
    normalize_measurement,
    sigma_array,
    sigma_from_ap,
    voxel_entropy,
)

# reference values evaluated at 50 significant digits with mpmath
ONE_PLUS_LN_2PI = 2.83787706640934548
H_SIGMA_999 = 16.6513866237064525
SIGMA_AP_MAX = 0.001001001001001001
SIGMA_LIDAR_M1 = 0.517450682852807284
H_LIDAR_M1 = 1.52019495197136463
H_UPPER_CLAMP = -10.9756324909

measurements = st.floats(0.0, 1e9, allow_nan=False)
positive = st.floats(1e-6, 1e6)
curves = st.builds(ApCurve, st.floats(1e-3, 2.0), st.floats(-2.0, 2.0))


def test_ap_examples():
    assert ap_from_measurement(1, LIDAR_CURVE) == 0.659
    assert ap_from_measurement(0, LIDAR_CURVE) == AP_MIN
    assert ap_from_measurement(0, CAMERA_CURVE) == AP_MIN
    assert ap_from_measurement(math.e, LIDAR_CURVE) == pytest.approx(0.811, abs=1e-15)


def test_ap_rejects_negative_measurement():
    with pytest.raises(ValueError):
        ap_from_measurement(-1, LIDAR_CURVE)


def test_sigma_examples():
    assert sigma_from_ap(0.5) == 1.0
    assert sigma_from_ap(0.999) == pytest.approx(SIGMA_AP_MAX, rel=1e-12)
    assert sigma_from_ap(0.001) == pytest.approx(999.0, rel=1e-14)
    for bad in (0.0, -0.2):
        with pytest.raises(ValueError):
            sigma_from_ap(bad)


def test_gaussian_entropy_examples():
    assert gaussian_entropy(1.0) == pytest.approx(ONE_PLUS_LN_2PI, abs=1e-15)
    assert gaussian_entropy(999.0) == pytest.approx(H_SIGMA_999, abs=1e-13)
    assert gaussian_entropy(math.exp(-ONE_PLUS_LN_2PI / 2)) == pytest.approx(0.0, abs=1e-14)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            gaussian_entropy(bad)


def test_voxel_entropy_examples():
    assert sigma_from_ap(ap_from_measurement(1, LIDAR_CURVE)) == pytest.approx(SIGMA_LIDAR_M1, rel=1e-14)
    assert voxel_entropy(1, LIDAR_CURVE) == pytest.approx(H_LIDAR_M1, abs=1e-13)
    assert voxel_entropy(0, CAMERA_CURVE) == pytest.approx(H_SIGMA_999, abs=1e-13)
    # the upper clamp lands at 2 ln(1/999) + 1 + ln 2pi
    assert voxel_entropy(1e12, LIDAR_CURVE) == pytest.approx(H_UPPER_CLAMP, abs=1e-9)
    assert voxel_entropy(1e12, LIDAR_CURVE) == pytest.approx(-2 * math.log(999) + ONE_PLUS_LN_2PI, abs=1e-12)


def test_normalize_examples():
    assert normalize_measurement(100, 0.06, 0.06) == 100
    assert normalize_measurement(1200, 6.0, 0.06) == pytest.approx(12.0, rel=1e-15)
    assert normalize_measurement(0, 3.0) == 0
    for a_obj, a_vox in ((0.0, 0.06), (1.0, 0.0), (-1.0, 0.06)):
        with pytest.raises(ValueError):
            normalize_measurement(5, a_obj, a_vox)


def test_box_surface_area():
    assert box_surface_area((0.1, 0.1, 0.1)) == pytest.approx(0.06)
    assert box_surface_area((4.0, 2.0, 1.5)) == pytest.approx(2 * (8 + 3 + 6))


def test_curve_validation():
    with pytest.raises(ValueError):
        ApCurve(0.0, 0.5)
    with pytest.raises(ValueError):
        ApCurve(0.1, 0.5, 0.5, 0.4)
    with pytest.raises(ValueError):
        ApCurve(0.1, 0.5, 0.0, 0.9)
    c = ApCurve(0.1, 0.2, 0.01, 0.9)
    assert ApCurve.from_dict(c.to_dict()) == c


def test_sample_validation():
    with pytest.raises(ValueError):
        ApSample(0.0, 0.5)
    with pytest.raises(ValueError):
        ApSample(1.0, 1.5)


# ---------------------------------------------------------------- regression

def test_fit_noiseless_examples():
    samples = [ApSample(1, 0.659), ApSample(math.e, 0.811), ApSample(math.e**2, 0.963)]
    c = fit_ap_curve(samples)
    assert c.a == pytest.approx(0.152, abs=1e-12)
    assert c.b == pytest.approx(0.659, abs=1e-12)


@pytest.mark.parametrize("samples", [
    [ApSample(1, 0.3), ApSample(math.e, 0.3)],
    [ApSample(2, 0.3), ApSample(2, 0.5)],
    [ApSample(2, 0.3)],
    [],
    [ApSample(1, 0.8), ApSample(10, 0.2)],
])
def test_fit_degenerate(samples):
    with pytest.raises(DegenerateFitError, match="degenerate fit"):
        fit_ap_curve(samples)


def test_fit_matches_numpy_polyfit_on_noisy_data():
    rng = np.random.default_rng(42)
    m = np.exp(rng.uniform(-3, 3, 50))
    ap = 0.055 * np.log(m) + 0.155 + rng.uniform(-0.01, 0.01, 50)
    c = fit_ap_curve(ApSample(float(x), float(y)) for x, y in zip(m, ap))
    a_ref, b_ref = np.polyfit(np.log(m), ap, 1)
    assert c.a == pytest.approx(a_ref, abs=1e-12)
    assert c.b == pytest.approx(b_ref, abs=1e-12)
    assert abs(c.a - 0.055) <= 0.005 and abs(c.b - 0.155) <= 0.005


@given(st.floats(0.01, 1.0), st.floats(-0.5, 0.5),
       st.lists(st.floats(-5, 5), min_size=2, max_size=20, unique=True))
def test_fit_recovers_collinear_points(a, b, logs):
    assume(max(logs) - min(logs) > 1e-3)
    samples = [ApSample(math.exp(x), a * x + b) for x in logs if 0 <= a * x + b <= 1]
    assume(len({s.m_norm for s in samples}) >= 2)
    assume(max(math.log(s.m_norm) for s in samples) - min(math.log(s.m_norm) for s in samples) > 0.1)
    c = fit_ap_curve(samples)
    assert c.a == pytest.approx(a, abs=1e-12)
    assert c.b == pytest.approx(b, abs=1e-12)


# ---------------------------------------------------------------- properties

@given(measurements, measurements, curves)
def test_voxel_entropy_non_increasing(m1, m2, curve):
    lo, hi = sorted((m1, m2))
    assert voxel_entropy(hi, curve) <= voxel_entropy(lo, curve)


# ln m range over which the LiDAR curve stays strictly inside the clamp
UNCLAMPED_LN_M = st.floats((AP_MIN - 0.659) / 0.152 + 1e-6, (AP_MAX - 0.659) / 0.152 - 1e-6)


@given(UNCLAMPED_LN_M, UNCLAMPED_LN_M)
def test_voxel_entropy_strict_where_unclamped(x1, x2):
    assume(abs(x1 - x2) > 1e-9)
    lo, hi = sorted((math.exp(x1), math.exp(x2)))
    assert voxel_entropy(hi, LIDAR_CURVE) < voxel_entropy(lo, LIDAR_CURVE)


@given(measurements, curves)
def test_composition_is_bit_identical(m, curve):
    chain = gaussian_entropy(sigma_from_ap(ap_from_measurement(m, curve)))
    assert voxel_entropy(m, curve) == chain


@given(measurements, curves)
def test_sigma_range(m, curve):
    s = sigma_from_ap(ap_from_measurement(m, curve))
    assert 1 / 0.999 - 1 - 1e-15 <= s <= 999 + 1e-9


@given(positive, positive)
def test_log_scaling_law(k, sigma):
    d = gaussian_entropy(k * sigma) - gaussian_entropy(sigma)
    assert d == pytest.approx(2 * math.log(k), abs=1e-9)


@given(st.lists(measurements, min_size=1, max_size=30), curves)
def test_vectorized_chain_matches_scalar(ms, curve):
    h = entropy_array(sigma_array(ap_array(ms, curve)))
    ref = [voxel_entropy(m, curve) for m in ms]
    assert np.allclose(h, ref, rtol=0, atol=1e-12)
