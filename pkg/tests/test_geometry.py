import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsscatter.geometry import (
    ConvexCurve,
    CurveError,
    SpectralPoint,
    boundary_eval,
    contains,
    find_poles,
)

BUILTINS = [ConvexCurve.disk(1.0), ConvexCurve.disk(2.5), ConvexCurve.ellipse(2.0, 1.0), ConvexCurve.ellipse(1.0, 3.0)]
WOBBLY = ConvexCurve.fourier({0: 0.1 + 0.05j, 1: 1.0, -2: 0.05, 3: 0.01j})
ALL = BUILTINS + [WOBBLY]
angles = st.floats(0.0, 2 * np.pi, allow_nan=False)
moduli = st.floats(0.5, 500.0, allow_nan=False)


def test_disk_derivatives_at_zero():
    assert np.allclose(boundary_eval(ConvexCurve.disk(), 0.0, 1), [1, 1j], atol=1e-15)


def test_disk_derivatives_at_quarter_turn():
    assert np.allclose(boundary_eval(ConvexCurve.disk(), np.pi / 2, 2), [1j, -1, -1j], atol=1e-15)


def test_ellipse_value_at_zero():
    assert boundary_eval(ConvexCurve.ellipse(2, 1), 0.0, 0) == [2]


def test_order_above_four_rejected():
    with pytest.raises(ValueError):
        boundary_eval(ConvexCurve.disk(), 0.0, 5)


@pytest.mark.parametrize("z,expected", [(0, True), (2, False), (1.0, True), (1 + 1e-13, True), (1 + 1e-9, False)])
def test_disk_membership(z, expected):
    assert contains(ConvexCurve.disk(), z) is expected


def test_ellipse_membership():
    assert contains(ConvexCurve.ellipse(2, 1), 1.5) is True
    assert contains(ConvexCurve.ellipse(2, 1), 1.5j) is False


def test_fourier_membership_matches_winding_number():
    rng = np.random.default_rng(3)
    z = rng.uniform(-1.3, 1.3, 400) + 1j * rng.uniform(-1.3, 1.3, 400)
    t = np.linspace(0, 2 * np.pi, 4001)
    g = WOBBLY(t)
    winding = np.array([np.round(np.sum(np.diff(np.unwrap(np.angle(g - p)))) / (2 * np.pi)) for p in z])
    assert np.array_equal(contains(WOBBLY, z), winding == 1)


def test_non_convex_fourier_rejected():
    with pytest.raises(CurveError):
        ConvexCurve.fourier({1: 1.0, -2: 0.3})


def test_clockwise_curve_rejected():
    with pytest.raises(CurveError):
        ConvexCurve.fourier({-1: 1.0})


def test_config_round_trip():
    for c in ALL:
        assert ConvexCurve.from_config(c.to_config()) == c


@pytest.mark.parametrize("curve", ALL, ids=lambda c: c.mode)
def test_closed_and_periodic(curve):
    assert np.allclose(curve.derivatives(0.0, 4), curve.derivatives(curve.period, 4), atol=1e-12)


@pytest.mark.parametrize("curve", ALL, ids=lambda c: c.mode)
@settings(max_examples=64, deadline=None)
@given(t=angles)
def test_curvature_positive_and_regular(curve, t):
    assert curve.curvature(t) > 0
    assert abs(curve.derivatives(t, 1)[1]) > 0


def test_fourier_derivatives_match_spectral_differentiation():
    n = 64
    t = 2 * np.pi * np.arange(n) / n
    samples = WOBBLY(t)
    freqs = np.fft.fftfreq(n, 1.0 / n)
    spec = np.fft.fft(samples)
    exact = WOBBLY.derivatives(t, 4)
    for m in range(1, 5):
        ref = np.fft.ifft(spec * (1j * freqs) ** m)
        assert np.max(np.abs(exact[m] - ref)) <= 1e-8 * np.max(np.abs(ref))


@settings(max_examples=50, deadline=None)
@given(m=moduli, th=angles)
def test_spectral_point_invariants(m, th):
    k = SpectralPoint.polar(m, th)
    assert abs(abs(k.omega) - 2) <= 1e-12
    assert abs(k.h * k.modulus - 1) <= 1e-12
    assert abs(k.modulus * np.exp(1j * k.theta) - k.k) <= 1e-12 * m


def _wrap(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


@settings(max_examples=40, deadline=None)
@given(m=moduli, th=angles)
def test_disk_poles_follow_the_argument_of_k(m, th):
    p = find_poles(ConvexCurve.disk(), SpectralPoint.polar(m, th))
    assert abs(_wrap(p.t_plus - (-np.pi / 2 - th))) <= 1e-10
    assert abs(_wrap(p.t_minus - (np.pi / 2 - th))) <= 1e-10


def test_disk_poles_for_real_k():
    p = find_poles(ConvexCurve.disk(), 3.0)
    assert abs(_wrap(p.t_plus + np.pi / 2)) < 1e-12
    assert abs(_wrap(p.t_minus - np.pi / 2)) < 1e-12
    assert abs(p.w_plus + 1j) < 1e-12 and abs(p.w_minus - 1j) < 1e-12


def test_ellipse_poles_at_unit_k_are_where_cos_vanishes():
    p = find_poles(ConvexCurve.ellipse(2, 1), 1.0)
    assert sorted([p.t_plus, p.t_minus]) == pytest.approx([np.pi / 2, 3 * np.pi / 2], abs=1e-12)


@pytest.mark.parametrize("curve", ALL, ids=lambda c: c.mode)
@settings(max_examples=30, deadline=None)
@given(m=moduli, th=angles)
def test_pole_residual_and_normal_direction(curve, m, th):
    k = SpectralPoint.polar(m, th)
    p = find_poles(curve, k)
    assert abs(_wrap(p.t_plus - p.t_minus)) > 1e-6
    for sign, t in (("+", p.t_plus), ("-", p.t_minus)):
        d1 = curve.derivatives(t, 1)[1]
        assert abs(np.imag(k.k * d1)) / (k.modulus * abs(d1)) <= 1e-12
        normal = 1j * d1 / abs(d1)  # interior normal of a positively oriented curve
        c = normal / k.omega
        assert abs(c.imag) <= 1e-9 * abs(c)
        assert np.sign(c.real) == (1 if sign == "+" else -1)


@settings(max_examples=30, deadline=None)
@given(m=moduli, th=angles, alpha=angles)
def test_disk_pole_rotation_covariance(m, th, alpha):
    d = ConvexCurve.disk()
    p0 = find_poles(d, SpectralPoint.polar(m, th))
    p1 = find_poles(d, SpectralPoint.polar(m, th).k * np.exp(1j * alpha))
    assert abs(_wrap(p1.t_plus - (p0.t_plus - alpha))) <= 1e-10
    assert abs(_wrap(p1.t_minus - (p0.t_minus - alpha))) <= 1e-10
