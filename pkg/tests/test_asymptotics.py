import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsscatter.asymptotics import (
    AsymptoticConfig,
    HybridInfeasibleError,
    correction_term,
    d_omega_at,
    leading_exact,
    leading_term,
    phase_at_poles,
    reflection_asymptotic,
    reflection_disk_closed_form,
    reflection_full,
    reflection_hybrid,
)
from dsscatter.geometry import ConvexCurve, SpectralPoint, find_poles
from dsscatter.reflection import ReflectionRecord

from oracles import bessel_j1, disk_reflection_expansion, ellipse_cauchy, ellipse_domain_integral

DISK = ConvexCurve.disk()
ELLIPSE = ConvexCurve.ellipse(2.0, 1.0)


def bessel_leading(m):
    return 2 * bessel_j1(2 * m) / m


@pytest.mark.parametrize("m", [10.0, 25.0, 90.0])
def test_disk_leading_term_two_term_formula(m):
    th = 2 * m - np.pi / 4
    expected = 2 / np.sqrt(np.pi * m**3) * (np.sin(th) + 3 / (16 * m) * np.cos(th))
    assert leading_term(DISK, m) == pytest.approx(expected, rel=1e-12, abs=1e-16)


def test_disk_leading_term_error_order():
    scaled = [abs(leading_term(DISK, m) - bessel_leading(m)) * m**3.5 for m in (10.0, 20.0, 40.0, 80.0)]
    assert max(scaled) <= 0.1


def test_exact_leading_term_is_bessel():
    for m in (1.0, 5.0, 17.3):
        assert abs(leading_exact(DISK, m) - bessel_leading(m)) <= 1e-13


def test_ellipse_leading_term_error_order():
    ks = (10.0, 20.0, 40.0, 80.0)
    scaled = [abs(leading_term(ELLIPSE, k) - 2 / np.pi * ellipse_domain_integral(k, 2, 1)) * k**3.5 for k in ks]
    assert max(scaled) <= 1.0
    assert max(scaled) / min(scaled) < 20


@settings(max_examples=20, deadline=None)
@given(m=st.floats(5.0, 300.0))
def test_real_k_on_symmetric_domain_gives_real_leading_term(m):
    for curve in (DISK, ELLIPSE):
        v = leading_term(curve, m)
        assert abs(v.imag) <= 1e-12 * abs(v) + 1e-18


def test_phase_at_disk_poles():
    ph = phase_at_poles(DISK, 7.0)
    assert ph["+"] == pytest.approx(14j)
    assert ph["-"] == pytest.approx(-14j)


@pytest.mark.parametrize("m", [8.0, 50.0, 333.0])
def test_disk_correction_closed_form(m):
    th = 2 * m - np.pi / 4
    assert correction_term(DISK, m, "closed_form_disk") == pytest.approx(-np.cos(th) / (np.sqrt(np.pi) * m**2.5), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(m=st.floats(5.0, 400.0), th=st.floats(-np.pi, np.pi))
def test_disk_reflection_depends_only_on_modulus(m, th):
    a = reflection_asymptotic(DISK, m).R
    b = reflection_asymptotic(DISK, SpectralPoint.polar(m, th)).R
    assert abs(a - b) <= 1e-12 * m**-1.5


@pytest.mark.parametrize("m", [50.0, 100.0, 200.0, 400.0])
def test_asymptotic_agrees_with_closed_form(m):
    diff = abs(reflection_asymptotic(DISK, m).R - reflection_disk_closed_form(m).R)
    assert diff * m**2.5 <= 0.05


def test_disk_reflection_is_real():
    for m in (20.0, 150.0):
        assert abs(reflection_asymptotic(DISK, m).R.imag) <= 1e-3 * m**-3 * np.log(m)


def test_correction_switch():
    off = AsymptoticConfig(include_correction=False)
    for curve in (DISK, ELLIPSE):
        assert reflection_asymptotic(curve, 30.0, off).R == np.conj(leading_term(curve, 30.0))


def test_full_method_uses_exact_leading_term():
    rec = reflection_full(DISK, 12.0)
    assert rec.method == "asymptotic_full"
    assert rec.R == pytest.approx(bessel_leading(12.0) + correction_term(DISK, 12.0), rel=1e-12)


def test_ellipse_correction_order():
    scaled = [abs(correction_term(ELLIPSE, m, "oracle")) * m**2.5 for m in (50.0, 100.0, 200.0)]
    assert max(scaled) <= 2.0


def test_d_omega_sources_agree_on_ellipse():
    t = find_poles(ELLIPSE, 40.0 * np.exp(0.5j)).t_plus
    exact = ellipse_cauchy(ELLIPSE(t), 2, 1)
    assert abs(d_omega_at(ELLIPSE, t, "oracle") - exact) <= 1e-10
    assert abs(d_omega_at(ELLIPSE, t, "grid") - exact) <= 2e-2


def test_closed_form_source_needs_disk():
    with pytest.raises(ValueError):
        correction_term(ELLIPSE, 30.0, "closed_form_disk")
    with pytest.raises(ValueError):
        AsymptoticConfig(d_omega_source="magic")
    with pytest.raises(ValueError):
        AsymptoticConfig(k_threshold=0)


def test_small_k_rejected():
    with pytest.raises(ValueError):
        reflection_asymptotic(DISK, 0.5)


def test_closed_form_phase_zero():
    m = np.pi / 8
    expected = -(2 / np.sqrt(np.pi * m**3)) * (5 / (16 * m))
    assert reflection_disk_closed_form(m).R == pytest.approx(expected, rel=1e-14)


def test_closed_form_at_hundred():
    expected = 2 / np.sqrt(np.pi * 1e6) * (np.sin(200 - np.pi / 4) - 5 / 1600 * np.cos(200 - np.pi / 4))
    rec = reflection_disk_closed_form(100.0)
    assert rec.R.real == expected and rec.method == "closed_form_disk"
    assert rec.R == pytest.approx(disk_reflection_expansion(100.0), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(m=st.floats(100.0, 1e6))
def test_closed_form_envelope(m):
    assert abs(reflection_disk_closed_form(m).R) * m**1.5 <= 2 / np.sqrt(np.pi) * (1 + 1 / m)


def _fake_numeric(calls):
    def backend(curve, k, sigma):
        calls.append(k)
        return ReflectionRecord(complex(k), 0.0123, "numeric", 1e-6)

    return backend


def test_hybrid_above_threshold_skips_numeric():
    calls = []
    rec = reflection_hybrid(DISK, 100.0, AsymptoticConfig(k_threshold=50), _fake_numeric(calls))
    assert calls == [] and rec.method == "hybrid" and rec.delegate == "asymptotic_spa"


def test_hybrid_below_threshold_is_numeric():
    calls = []
    rec = reflection_hybrid(DISK, 25.0, AsymptoticConfig(k_threshold=50), _fake_numeric(calls))
    assert calls == [25.0] and rec.delegate == "numeric" and rec.R == 0.0123


def test_hybrid_at_threshold_computes_both(caplog):
    calls, details = [], {}
    with caplog.at_level("INFO"):
        rec = reflection_hybrid(DISK, 50.0, AsymptoticConfig(k_threshold=50), _fake_numeric(calls), details=details)
    assert calls == [50.0] and rec.delegate == "asymptotic_spa"
    assert details["discrepancy"] == pytest.approx(abs(rec.R - 0.0123))
    assert "discrepancy" in caplog.text


def test_hybrid_infeasible_numeric_branch_advises_threshold():
    cfg = AsymptoticConfig(k_threshold=500.0, grid_budget=256)
    with pytest.raises(HybridInfeasibleError, match="Lower k_threshold"):
        reflection_hybrid(DISK, 400.0, cfg)


def test_hybrid_real_numeric_at_threshold_agrees_for_disk():
    details = {}
    reflection_hybrid(DISK, 16.0, AsymptoticConfig(k_threshold=16.0), details=details)
    assert details["discrepancy"] * 16**2.5 <= 0.05


@pytest.mark.slow
def test_correction_matches_full_solve_on_rotated_ellipse():
    from dsscatter.dirac_solver import DiracProblem, solve_cgo
    from dsscatter.reflection import reflection_numeric

    curve = ConvexCurve.ellipse(1.5, 1.0)
    k = 12 * np.exp(0.5j)
    p = DiracProblem(curve, k, 1, 1024, 3.0)
    rn = reflection_numeric(p, solve_cgo(p, tol=1e-12)).R
    lead_gap = abs(rn - np.conj(leading_exact(curve, k)))
    full_gap = abs(rn - reflection_full(curve, k).R)
    assert full_gap * 12**2.5 <= 0.05
    assert full_gap <= 0.2 * lead_gap


@settings(max_examples=25, deadline=None)
@given(st.floats(10.0, 80.0), st.floats(0.0, 2 * np.pi), st.sampled_from([DISK, ELLIPSE]))
def test_pole_contributions_swap_under_conjugated_k(m, th, curve):
    from dsscatter.asymptotics import build_jets
    from dsscatter.stationary_phase import spa_two_term

    k = m * np.exp(1j * th)
    jk, jkbar = build_jets(curve, k), build_jets(curve, np.conj(k))
    assert spa_two_term(jkbar["+"]) == pytest.approx(-np.conj(spa_two_term(jk["-"])), rel=1e-9, abs=1e-12)
