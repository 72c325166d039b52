"""Large-|k| formulas for the reflection coefficient and the hybrid evaluator.

Along the boundary the phase is ``Phi(t) = -(k gamma - conj(k gamma))`` and
the amplitude is ``a(t) = gamma'(t)``.  The leading term is the domain
integral ``(2/pi) int_Omega exp(kz - conj(kz)) dA``, reduced by Stokes'
theorem to a boundary integral and then evaluated by two-term stationary
phase at the two poles.  The next correction needs the solid Cauchy
transform of the domain at the poles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from dsscatter.cauchy_transform import ComplexGrid, solid_cauchy_disk, solid_cauchy_grid, solid_cauchy_oracle_boundary
from dsscatter.dirac_solver import BOX_FACTOR, GridBudgetError, indicator_coverage
from dsscatter.geometry import ConvexCurve, SpectralPoint, find_poles
from dsscatter.reflection import ReflectionRecord, born_integral, compute_numeric
from dsscatter.stationary_phase import SQRT_2PI, PhaseJet, branch_root, spa_two_term

log = logging.getLogger(__name__)

# error_estimate = C_REPORT |k|^-3 max(ln|k|, 1); calibrated on the unit disk (scripts/calibrate_error.py)
C_REPORT = 0.02
D_OMEGA_SOURCES = ("closed_form_disk", "oracle", "grid", "auto")
GRID_SOURCE_N = 1024


@dataclass(frozen=True)
class AsymptoticConfig:
    k_threshold: float = 50.0
    include_correction: bool = True
    d_omega_source: str = "auto"
    grid_budget: int = 2048

    def __post_init__(self):
        if not self.k_threshold > 0:
            raise ValueError(f"k_threshold must be positive, got {self.k_threshold}")
        if self.d_omega_source not in D_OMEGA_SOURCES:
            raise ValueError(f"d_omega_source must be one of {D_OMEGA_SOURCES}, got {self.d_omega_source!r}")

    def source_for(self, curve: ConvexCurve) -> str:
        if self.d_omega_source != "auto":
            return self.d_omega_source
        return "closed_form_disk" if curve.mode == "disk" else "oracle"


def build_jets(curve: ConvexCurve, k) -> dict[str, PhaseJet]:
    """Phase/amplitude jets at the poles w_+ and w_-."""
    kk = SpectralPoint.of(k).k
    poles = find_poles(curve, kk)
    jets = {}
    for sign in ("+", "-"):
        t0 = poles.t(sign)
        g = curve.derivatives(t0, 4)
        phi = [-2j * np.imag(kk * g[m]) for m in range(5)]
        jets[sign] = PhaseJet(t0, *phi, g[1], g[2], g[3], pole_sign=sign)
    return jets


def phase_at_poles(curve: ConvexCurve, k) -> dict[str, complex]:
    """Phi(t_+-); the expansion assumes these do not vanish, so callers can report it."""
    return {s: j.Phi for s, j in build_jets(curve, k).items()}


def leading_term(curve: ConvexCurve, k) -> complex:
    """Two-term stationary-phase value of (2/pi) int_Omega exp(kz - conj(kz)) dA."""
    kk = SpectralPoint.of(k).k
    total = sum(spa_two_term(j) for j in build_jets(curve, kk).values())
    return complex((2.0 / np.pi) * (1j / (2.0 * np.conj(kk))) * total)


def leading_exact(curve: ConvexCurve, k) -> complex:
    """The same domain integral by spectrally accurate boundary quadrature."""
    return complex((2.0 / np.pi) * born_integral(curve, k))


@lru_cache(maxsize=8)
def _grid_d_omega(curve: ConvexCurve, n: int) -> ComplexGrid:
    L = BOX_FACTOR * curve.circumradius
    mask = ComplexGrid(n, L, indicator_coverage(curve, n, L).astype(complex))
    return solid_cauchy_grid(mask)


def d_omega_at(curve: ConvexCurve, t0: float, source: str) -> complex:
    """D_Omega at the boundary point gamma(t0) from the chosen source."""
    if source == "closed_form_disk":
        if curve.mode != "disk":
            raise ValueError(f"closed_form_disk D_Omega is only available for disks, not {curve.mode}")
        return complex(solid_cauchy_disk(curve(t0), curve.radius))
    if source == "oracle":
        return solid_cauchy_oracle_boundary(curve, t0)
    if source == "grid":
        return complex(_grid_d_omega(curve, GRID_SOURCE_N).sample(curve(t0)))
    raise ValueError(f"unknown d_omega_source {source!r}")


def correction_term(curve: ConvexCurve, k, d_omega_source: str = "auto") -> complex:
    """The O(|k|^-5/2) contribution of AB(1) to conj(R).

    Each pole contributes ``exp(-Phi) Phi''^(-1/2) (conj(D) conj(a) - D a)``
    with D the solid Cauchy transform at the pole, and the sum is scaled by
    ``sqrt(2 pi) / (4 pi i |k|^2)``.
    """
    kk = SpectralPoint.of(k).k
    source = AsymptoticConfig(d_omega_source=d_omega_source).source_for(curve)
    total = 0j
    for jet in build_jets(curve, kk).values():
        s = branch_root(jet.d2Phi, jet.pole_sign)
        D = d_omega_at(curve, jet.t0, source)
        a = jet.a0
        total += np.exp(-jet.Phi) / s * (np.conj(D) * np.conj(a) - D * a)
    return complex(SQRT_2PI / (4j * np.pi * abs(kk) ** 2) * total)


def error_model(k_modulus: float) -> float:
    return C_REPORT * k_modulus**-3 * max(np.log(k_modulus), 1.0)


def _assemble(curve, k, config, sigma, lead) -> complex:
    conj_R = sigma * lead
    if config.include_correction:
        conj_R += correction_term(curve, k, config.source_for(curve))
    return complex(np.conj(conj_R))


def reflection_asymptotic(
    curve: ConvexCurve, k, config: AsymptoticConfig = AsymptoticConfig(), sigma: int = 1
) -> ReflectionRecord:
    """R from the full two-term stationary-phase expansion."""
    kk = SpectralPoint.of(k)
    if kk.modulus < 1:
        raise ValueError(f"asymptotic formulas need |k| >= 1, got {kk.modulus}")
    R = _assemble(curve, kk.k, config, sigma, leading_term(curve, kk.k))
    return ReflectionRecord(kk.k, R, "asymptotic_spa", error_model(kk.modulus))


def reflection_full(
    curve: ConvexCurve, k, config: AsymptoticConfig = AsymptoticConfig(), sigma: int = 1
) -> ReflectionRecord:
    """R with the leading domain integral computed exactly plus the asymptotic correction."""
    kk = SpectralPoint.of(k)
    if kk.modulus < 1:
        raise ValueError(f"asymptotic formulas need |k| >= 1, got {kk.modulus}")
    R = _assemble(curve, kk.k, config, sigma, leading_exact(curve, kk.k))
    return ReflectionRecord(kk.k, R, "asymptotic_full", error_model(kk.modulus))


def disk_closed_form_value(abs_k: float) -> float:
    th = 2.0 * abs_k - np.pi / 4
    return 2.0 / np.sqrt(np.pi * abs_k**3) * (np.sin(th) - 5.0 / (16.0 * abs_k) * np.cos(th))


def reflection_disk_closed_form(abs_k) -> ReflectionRecord:
    """Unit-disk large-|k| formula; a complex argument is used through its modulus."""
    k = complex(abs_k)
    m = abs(k)
    if not m > 0:
        raise ValueError(f"|k| must be positive, got {abs_k}")
    return ReflectionRecord(k, complex(disk_closed_form_value(m)), "closed_form_disk", error_model(max(m, 1.0)))


class HybridInfeasibleError(RuntimeError):
    """The numeric branch of the hybrid evaluator cannot be run within the grid budget."""


def reflection_hybrid(
    curve: ConvexCurve,
    k,
    config: AsymptoticConfig = AsymptoticConfig(),
    numeric_backend: Optional[Callable] = None,
    sigma: int = 1,
    details: Optional[dict] = None,
) -> ReflectionRecord:
    """Numeric below ``k_threshold``, asymptotic at or above it.

    At the threshold both are evaluated and the discrepancy is logged (and
    stored in ``details`` when a dict is passed).  ``numeric_backend`` is a
    callable ``(curve, k, sigma) -> ReflectionRecord``.
    """
    kk = SpectralPoint.of(k)
    thr = config.k_threshold
    at_threshold = abs(kk.modulus - thr) <= 1e-12 * thr
    if numeric_backend is None:
        def numeric_backend(c, kv, s):
            return compute_numeric(c, kv, s, budget=config.grid_budget)

    numeric = None
    if kk.modulus < thr or at_threshold:
        try:
            numeric = numeric_backend(curve, kk.k, sigma)
        except GridBudgetError as exc:
            L = BOX_FACTOR * curve.circumradius
            k_max = np.pi * config.grid_budget / (16.0 * L)
            raise HybridInfeasibleError(
                f"numeric branch infeasible at |k|={kk.modulus:.4g}: {exc}. "
                f"Lower k_threshold to at most {k_max:.4g} or raise grid_budget"
            ) from exc
    if kk.modulus < thr and not at_threshold:
        rec = numeric
    else:
        rec = reflection_asymptotic(curve, kk.k, config, sigma)
        if numeric is not None:
            gap = abs(rec.R - numeric.R)
            log.info("hybrid threshold |k|=%g: numeric/asymptotic discrepancy %.3e", kk.modulus, gap)
            if details is not None:
                details.update(numeric=numeric.R, asymptotic=rec.R, discrepancy=gap)
    if details is not None:
        details.setdefault("delegate", rec.method)
    return ReflectionRecord(rec.k, rec.R, "hybrid", rec.error_estimate, rec.time, delegate=rec.method)
