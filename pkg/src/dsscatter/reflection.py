"""Reflection coefficient from a CGO solution, and its time evolution.

``conj(R) = (2 sigma / pi) int exp(kz - conj(kz)) conj(q) phi1 dA``.  R is
stored unconjugated; the only conjugation happens in reflection_numeric.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from dsscatter.dirac_solver import CgoSolution, DiracProblem, NyquistError, auto_grid, solve_cgo
from dsscatter.geometry import ConvexCurve, SpectralPoint
from dsscatter.stationary_phase import oscillatory_quadrature

log = logging.getLogger(__name__)

METHODS = ("numeric", "asymptotic_full", "asymptotic_spa", "closed_form_disk", "hybrid")
CSV_FIELDS = ["k_re", "k_im", "R_re", "R_im", "method", "error_estimate", "time"]


@dataclass(frozen=True)
class ReflectionRecord:
    k: complex
    R: complex
    method: str
    error_estimate: float
    time: float = 0.0
    delegate: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.error_estimate >= 0:
            raise ValueError(f"error_estimate must be >= 0, got {self.error_estimate}")
        if self.method == "hybrid" and self.delegate not in METHODS[:-1]:
            raise ValueError(f"hybrid records need a delegate method, got {self.delegate!r}")

    def to_row(self) -> dict:
        return {
            "k_re": f"{self.k.real:.17g}",
            "k_im": f"{self.k.imag:.17g}",
            "R_re": f"{self.R.real:.17g}",
            "R_im": f"{self.R.imag:.17g}",
            "method": self.method if self.delegate is None else f"{self.method}:{self.delegate}",
            "error_estimate": f"{self.error_estimate:.17g}",
            "time": f"{self.time:.17g}",
        }

    @classmethod
    def from_row(cls, row: dict) -> "ReflectionRecord":
        method, _, delegate = row["method"].partition(":")
        return cls(
            k=complex(float(row["k_re"]), float(row["k_im"])),
            R=complex(float(row["R_re"]), float(row["R_im"])),
            method=method,
            error_estimate=float(row["error_estimate"]),
            time=float(row.get("time") or 0.0),
            delegate=delegate or None,
        )


def write_records(path, records: Iterable[ReflectionRecord], extra: Optional[list[dict]] = None) -> None:
    records = list(records)
    extra_keys = sorted({key for e in (extra or []) for key in e})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS + extra_keys)
        w.writeheader()
        for i, rec in enumerate(records):
            row = rec.to_row()
            if extra:
                row.update({key: _fmt(v) for key, v in extra[i].items()})
            w.writerow(row)


def _fmt(v):
    return f"{v:.17g}" if isinstance(v, float) else v


def read_records(path) -> list[ReflectionRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [f for f in CSV_FIELDS if f not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(ReflectionRecord.from_row(row))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from exc
        return out


def boundary_nodes(curve: ConvexCurve, k_modulus: float) -> int:
    """Even node count resolving exp(2i Im(k gamma)) gamma' on the boundary."""
    band = 2.0 * k_modulus * curve.max_speed + 4.0 * max((abs(m) for m, _ in curve.coeffs), default=1) + 64
    n = 64
    while n < 2 * band:
        n *= 2
    return n


def born_integral(curve: ConvexCurve, k) -> complex:
    """``int_Omega exp(kz - conj(kz)) dA`` as a boundary integral.

    Stokes' theorem turns it into ``(i / (2 conj k)) oint exp(k gamma - conj(k gamma)) gamma' dt``.
    """
    kk = SpectralPoint.of(k).k
    quad_n = boundary_nodes(curve, abs(kk))

    def phase(t):
        return -2j * np.imag(kk * curve(t))

    def amp(t):
        return curve.derivatives(t, 1)[1]

    return (1j / (2.0 * np.conj(kk))) * oscillatory_quadrature(phase, amp, curve.period, quad_n, 1e-11)


def born_reflection(curve: ConvexCurve, k, sigma: int = 1) -> complex:
    """R with phi1 replaced by 1, for q the indicator of the domain."""
    return complex(np.conj((2.0 * sigma / np.pi) * born_integral(curve, k)))


def _conj_R(problem: DiracProblem, cgo: CgoSolution, born: str) -> complex:
    e = problem.phase
    qbar = np.conj(problem.q)
    d2 = problem.spacing**2
    if born == "boundary" and isinstance(problem.potential, str):
        lead = born_integral(problem.curve, problem.k)
        rest = np.sum(e * qbar * (cgo.phi1.values - 1.0)) * d2
        return (2.0 * problem.sigma / np.pi) * (lead + rest)
    return (2.0 * problem.sigma / np.pi) * np.sum(e * qbar * cgo.phi1.values) * d2


def reflection_numeric(
    problem: DiracProblem,
    cgo: CgoSolution,
    richardson: bool = False,
    born: str = "boundary",
    tol: float = 1e-10,
) -> ReflectionRecord:
    """R(k) from the CGO solution of ``problem``.

    For indicator potentials the phi1 = 1 part is integrated exactly on the
    boundary (``born="boundary"``); ``born="grid"`` keeps the plain grid sum.
    With ``richardson`` the problem is re-solved at n/2 and the error is
    estimated as |R_n - R_{n/2}| / 3; otherwise it is the solver residual.
    """
    if born not in ("boundary", "grid"):
        raise ValueError(f"born must be 'boundary' or 'grid', got {born!r}")
    if cgo.fingerprint() != problem.fingerprint():
        raise ValueError(f"CGO solution {cgo.fingerprint()} was not produced from problem {problem.fingerprint()}")
    R = complex(np.conj(_conj_R(problem, cgo, born)))
    err = float(cgo.residual_norm)
    if richardson:
        try:
            coarse = dataclasses.replace(problem, n=problem.n // 2)
            cc = solve_cgo(coarse, tol=tol)
            Rc = complex(np.conj(_conj_R(coarse, cc, born)))
            err = abs(R - Rc) / 3.0
        except NyquistError as exc:
            log.warning("Richardson estimate skipped: %s", exc)
    return ReflectionRecord(problem.k.k, R, "numeric", err)


def compute_numeric(
    curve: ConvexCurve,
    k,
    sigma: int = 1,
    n: Optional[int] = None,
    L: Optional[float] = None,
    tol: float = 1e-10,
    richardson: bool = False,
    budget: int = 2048,
) -> ReflectionRecord:
    """Build the problem (automatic grid when n is None), solve, and evaluate R."""
    if n is None:
        n, L = auto_grid(curve, k, budget=budget, L=L)
    problem = DiracProblem(curve, k, sigma, n, L)
    return reflection_numeric(problem, solve_cgo(problem, tol=tol), richardson=richardson, tol=tol)


def evolve_reflection(record: ReflectionRecord, t: float) -> ReflectionRecord:
    """Multiply by exp(4 i t Re(k^2)); only records at time 0 are accepted."""
    if record.time != 0:
        raise ValueError(f"record is at time {record.time}; evolve from time 0")
    factor = np.exp(4j * t * np.real(record.k * record.k))
    return dataclasses.replace(record, R=complex(record.R * factor), time=float(t))


def reset_time(record: ReflectionRecord) -> ReflectionRecord:
    """Relabel an evolved record as time 0 so it can be evolved again."""
    return dataclasses.replace(record, time=0.0)


__all__ = [
    "CSV_FIELDS",
    "METHODS",
    "ReflectionRecord",
    "born_integral",
    "born_reflection",
    "compute_numeric",
    "evolve_reflection",
    "read_records",
    "reflection_numeric",
    "reset_time",
    "write_records",
]
