"""Two-term stationary phase for ``J = int exp(-Phi(t)) a(t) dt``.

The engine works on derivative jets at a single non-degenerate critical
point; summing over critical points is left to the caller.  For the
boundary integrals of this package Phi is purely imaginary on the real
line, and the square root of Phi'' is taken as the limit of roots of
numbers with positive real part, which is the principal branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)
IMAGINARY_TOL = 1e-8
CRITICAL_TOL = 1e-10


class BranchError(ValueError):
    """Degenerate or inconsistent second derivative at a critical point."""


class UnderResolvedError(RuntimeError):
    """Trapezoid rule failed its doubling check."""

    def __init__(self, message, value, estimate):
        super().__init__(message)
        self.value = value
        self.estimate = estimate


@dataclass(frozen=True)
class PhaseJet:
    """Phase and amplitude derivatives at a critical point ``t0``.

    ``pole_sign`` is ``"+"`` or ``"-"`` for the boundary poles w_+/w_-, or
    ``None`` for a phase with positive real curvature (plain Laplace case).
    """

    t0: float
    Phi: complex
    dPhi: complex
    d2Phi: complex
    d3Phi: complex
    d4Phi: complex
    a0: complex
    a1: complex
    a2: complex
    pole_sign: Optional[str] = None

    def __post_init__(self):
        if self.pole_sign not in ("+", "-", None):
            raise ValueError(f"pole_sign must be '+', '-' or None, got {self.pole_sign!r}")
        if self.d2Phi == 0:
            raise BranchError(f"degenerate critical point at t0={self.t0}: Phi''=0")
        if abs(self.dPhi) > CRITICAL_TOL * abs(self.d2Phi):
            raise ValueError(
                f"t0={self.t0} is not a critical point: |Phi'|={abs(self.dPhi):.3e}, |Phi''|={abs(self.d2Phi):.3e}"
            )


def branch_root(d2Phi: complex, pole_sign: Optional[str] = None) -> complex:
    """Square root of Phi'' on the branch with positive real part.

    At the pole w_+ one has Phi'' = -i|U''| and the root is
    ``exp(-i pi/4) |U''|^(1/2)``; at w_- Phi'' = +i|U''| and the root is
    ``exp(+i pi/4) |U''|^(1/2)``.  A sign of Im Phi'' that does not match
    ``pole_sign`` is reported as an error, as is a non-negligible real part.
    """
    d2Phi = complex(d2Phi)
    mag = abs(d2Phi)
    if mag == 0 or not np.isfinite(mag):
        raise BranchError(f"degenerate second derivative {d2Phi!r} at pole {pole_sign}")
    if pole_sign is None:
        if d2Phi.real < 0 and abs(d2Phi.imag) <= IMAGINARY_TOL * mag:
            raise BranchError(f"phase {d2Phi!r} grows away from the critical point")
        return complex(np.sqrt(d2Phi))
    if pole_sign not in ("+", "-"):
        raise ValueError(f"pole_sign must be '+', '-' or None, got {pole_sign!r}")
    if abs(d2Phi.real) > IMAGINARY_TOL * mag:
        raise BranchError(f"Phi''={d2Phi!r} at pole w{pole_sign} is not purely imaginary")
    expected = -1.0 if pole_sign == "+" else 1.0
    if np.sign(d2Phi.imag) != expected:
        raise BranchError(
            f"Phi''={d2Phi!r} at pole w{pole_sign}: expected Im Phi'' {'< 0' if expected < 0 else '> 0'}"
        )
    return complex(np.sqrt(d2Phi))


def spa_two_term(jet: PhaseJet) -> complex:
    """Contribution of one critical point, including the first correction."""
    s = branch_root(jet.d2Phi, jet.pole_sign)
    s2 = s * s
    s3 = s2 * s
    s5 = s3 * s2
    s7 = s5 * s2
    bracket = (
        jet.a0 / s
        + 0.5 * jet.a2 / s3
        - (jet.a0 * jet.d4Phi / 8.0 + jet.a1 * jet.d3Phi / 2.0) / s5
        + (5.0 / 24.0) * jet.a0 * jet.d3Phi**2 / s7
    )
    return complex(SQRT_2PI * np.exp(-jet.Phi) * bracket)


def leading_spa(jet: PhaseJet) -> complex:
    """First term only, ``sqrt(2 pi) a exp(-Phi) Phi''^(-1/2)``."""
    s = branch_root(jet.d2Phi, jet.pole_sign)
    return complex(SQRT_2PI * np.exp(-jet.Phi) * jet.a0 / s)


def oscillatory_quadrature(
    phase: Callable,
    amplitude: Callable,
    period: float = 2.0 * np.pi,
    quad_n: int = 4096,
    rtol: float = 1e-10,
) -> complex:
    """Trapezoid rule for ``int_0^period exp(-phase(t)) amplitude(t) dt``.

    The integrand must be smooth and periodic.  The result is compared with
    the rule on every second node; disagreement above ``rtol`` times the
    integral of ``|integrand|`` raises UnderResolvedError.
    """
    if quad_n < 4 or quad_n % 2:
        raise ValueError(f"quad_n must be an even integer >= 4, got {quad_n}")
    t = np.arange(quad_n) * (period / quad_n)
    f = np.exp(-np.asarray(phase(t), dtype=complex)) * np.asarray(amplitude(t), dtype=complex)
    f = np.broadcast_to(f, t.shape)
    fine = f.mean() * period
    coarse = f[::2].mean() * period
    scale = np.abs(f).mean() * period
    err = abs(fine - coarse)
    if err > rtol * max(scale, np.finfo(float).tiny):
        raise UnderResolvedError(
            f"trapezoid rule with {quad_n} nodes not converged: doubling difference {err:.3e}",
            complex(fine),
            err,
        )
    return complex(fine)
