import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsscatter.asymptotics import reflection_disk_closed_form
from dsscatter.cauchy_transform import ComplexGrid
from dsscatter.dirac_solver import CgoSolution, DiracProblem, solve_cgo
from dsscatter.geometry import ConvexCurve
from dsscatter.reflection import (
    ReflectionRecord,
    born_reflection,
    evolve_reflection,
    read_records,
    reflection_numeric,
    reset_time,
    write_records,
)

from conftest import disk_solution
from oracles import bessel_j1, ellipse_domain_integral

DISK = ConvexCurve.disk()
records = st.builds(
    ReflectionRecord,
    k=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
    R=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
    method=st.just("numeric"),
    error_estimate=st.floats(0, 1),
)


def unit_phi(problem):
    n, L = problem.n, problem.L
    return CgoSolution(problem.ones(), ComplexGrid.zeros(n, L), 0, 0.0, problem.k.k, problem.sigma)


def test_zero_potential_gives_zero():
    p = DiracProblem(None, 3.0, 1, potential=ComplexGrid.zeros(64, 4.0))
    rec = reflection_numeric(p, solve_cgo(p))
    assert rec.R == 0 and rec.method == "numeric"


@pytest.mark.parametrize("k", [4.0, 6.0 * np.exp(1.1j)])
def test_unit_phi_gives_leading_term(k):
    p = DiracProblem(DISK, k, 1, 256, 4.0)
    R = reflection_numeric(p, unit_phi(p)).R
    m = abs(k)
    assert R == born_reflection(DISK, k)
    assert abs(R - 2 * bessel_j1(2 * m) / m) <= 1e-12


def test_unit_phi_grid_sum_converges_to_leading_term():
    errs = []
    for n in (256, 512):
        p = DiracProblem(DISK, 4.0, 1, n, 2.0)
        errs.append(abs(reflection_numeric(p, unit_phi(p), born="grid").R - 2 * bessel_j1(8.0) / 4.0))
    assert errs[1] <= 5e-5
    assert errs[1] <= errs[0] / 3


def test_ellipse_leading_term_from_boundary():
    k = 3.0 + 2.0j
    assert abs(born_reflection(ConvexCurve.ellipse(2, 1), k) - 2 / np.pi * ellipse_domain_integral(k, 2, 1)) <= 1e-12


def test_disk_numeric_matches_closed_form():
    problem, sol = disk_solution(16.0)
    rec = reflection_numeric(problem, sol)
    assert abs(rec.R - reflection_disk_closed_form(16.0).R) * 16**2.5 <= 0.05
    assert abs(rec.R.imag) <= 1e-12


def test_rotated_disk_gives_same_value():
    a = reflection_numeric(*disk_solution(8.0)).R
    b = reflection_numeric(*disk_solution(8.0, theta=0.7)).R
    assert abs(a - b) <= 1e-4 * abs(a)


def test_mismatched_solution_rejected():
    p = DiracProblem(DISK, 3.0, 1, 128, 4.0)
    q = DiracProblem(DISK, 3.5, 1, 128, 4.0)
    with pytest.raises(ValueError, match="not produced"):
        reflection_numeric(p, solve_cgo(q))


def test_richardson_estimate_tracks_grid_error():
    p = DiracProblem(DISK, 8.0, 1, 256, 2.0)
    rec = reflection_numeric(p, solve_cgo(p), richardson=True)
    fine = reflection_numeric(*disk_solution(8.0)).R
    assert rec.error_estimate > 0
    assert 0.2 <= abs(rec.R - fine) / rec.error_estimate <= 5


def test_richardson_skipped_when_coarse_grid_too_coarse():
    p = DiracProblem(DISK, 8.0, 1, 128, 2.0)
    rec = reflection_numeric(p, solve_cgo(p), richardson=True)
    assert rec.error_estimate == solve_cgo(p).residual_norm


def test_evolve_identity_at_zero_time():
    r = ReflectionRecord(2.0 + 1j, 0.3 - 0.1j, "numeric", 1e-6)
    assert evolve_reflection(r, 0.0).R == r.R


def test_evolve_diagonal_k_is_static():
    r = ReflectionRecord(1 + 1j, 0.3 - 0.1j, "numeric", 0.0)
    assert evolve_reflection(r, 123.4).R == r.R


def test_evolve_negation_case():
    r = ReflectionRecord(2.0, 0.25 + 0.5j, "numeric", 0.0)
    out = evolve_reflection(r, np.pi / 16)
    assert abs(out.R + r.R) <= 4 * np.finfo(float).eps * abs(r.R)
    assert out.time == np.pi / 16


@settings(max_examples=100, deadline=None)
@given(rec=records, t=st.floats(-100, 100))
def test_evolution_preserves_modulus(rec, t):
    assert abs(abs(evolve_reflection(rec, t).R) - abs(rec.R)) <= 4 * np.finfo(float).eps * abs(rec.R)


@settings(max_examples=50, deadline=None)
@given(rec=records, t1=st.floats(-10, 10), t2=st.floats(-10, 10))
def test_evolution_group_property(rec, t1, t2):
    two = evolve_reflection(reset_time(evolve_reflection(rec, t1)), t2)
    one = evolve_reflection(rec, t1 + t2)
    phase = 4 * abs(np.real(rec.k**2)) * (abs(t1) + abs(t2))
    assert abs(two.R - one.R) <= 1e-15 * (1 + phase) * abs(rec.R) * 8


def test_evolving_twice_requires_reset():
    r = evolve_reflection(ReflectionRecord(2.0, 1.0, "numeric", 0.0), 1.0)
    with pytest.raises(ValueError):
        evolve_reflection(r, 1.0)


def test_record_validation():
    with pytest.raises(ValueError):
        ReflectionRecord(1.0, 1.0, "guess", 0.0)
    with pytest.raises(ValueError):
        ReflectionRecord(1.0, 1.0, "numeric", -1.0)
    with pytest.raises(ValueError):
        ReflectionRecord(1.0, 1.0, "hybrid", 0.0)


@settings(max_examples=30, deadline=None)
@given(recs=st.lists(records, max_size=5))
def test_csv_round_trip(tmp_path_factory, recs):
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    write_records(path, recs)
    assert read_records(path) == recs


def test_csv_keeps_hybrid_delegate(tmp_path):
    rec = ReflectionRecord(60.0, 1e-3, "hybrid", 1e-7, delegate="asymptotic_spa")
    write_records(tmp_path / "h.csv", [rec])
    assert read_records(tmp_path / "h.csv") == [rec]


def test_csv_malformed_row_named(tmp_path):
    rec = ReflectionRecord(2.0, 1.0, "numeric", 0.0)
    write_records(tmp_path / "r.csv", [rec, dataclasses.replace(rec, k=3.0)])
    text = (tmp_path / "r.csv").read_text().replace("3,0,1,0", "x,0,1,0")
    (tmp_path / "r.csv").write_text(text)
    with pytest.raises(ValueError, match=":3:"):
        read_records(tmp_path / "r.csv")
