"""CGO solutions of the d-bar Dirac system by Neumann series on a grid.

With ``e(z) = exp(kz - conj(kz))`` the operators are

    A u = dbar^{-1}( q conj(e) u / 2 ),      B u = sigma * d^{-1}( conj(q) e u / 2 ),

so that ``B u = sigma * conj(A conj(u))`` and the system reads
``phi1 = 1 + A phi2``, ``phi2 = B phi1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from dsscatter.cauchy_transform import (
    ComplexGrid,
    check_margin,
    dbar_inverse_array,
    del_inverse_array,
    grid_points,
)
from dsscatter.geometry import ConvexCurve, SpectralPoint, contains

log = logging.getLogger(__name__)

NYQUIST_SAFETY = 4.0
BOX_FACTOR = 4.0
DIVERGENCE_RATIO = 0.9
SUPERSAMPLE = 32
_COVERAGE_CHUNK = 2048


class NyquistError(ValueError):
    """Grid too coarse for the oscillation of exp(kz - conj(kz))."""


class GridBudgetError(ValueError):
    """No admissible grid fits inside the size budget."""


class NeumannDivergenceError(RuntimeError):
    """Series terms do not contract on this grid."""

    def __init__(self, message, term_norms):
        super().__init__(message)
        self.term_norms = term_norms


class MaxTermsError(RuntimeError):
    """Series still above tolerance after ``max_terms`` terms."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def max_spacing(k_modulus: float) -> float:
    """Largest admissible spacing: pi / (2 |k| safety)."""
    return np.pi / (2.0 * k_modulus * NYQUIST_SAFETY)


def auto_grid(curve: ConvexCurve, k, budget: int = 2048, L: Optional[float] = None) -> tuple[int, float]:
    """Smallest power-of-two n >= 16 meeting the Nyquist bound on the box [-L, L)^2."""
    km = SpectralPoint.of(k).modulus
    if L is None:
        L = BOX_FACTOR * curve.circumradius
    n = 16
    while 2.0 * L / n > max_spacing(km):
        n *= 2
    if n > budget:
        k_max = np.pi * budget / (4.0 * NYQUIST_SAFETY * L)
        raise GridBudgetError(
            f"|k|={km:.4g} needs n={n} on L={L:.4g}, above the budget {budget}; "
            f"largest resolvable |k| at this budget is {k_max:.4g}"
        )
    return n, float(L)


def indicator_coverage(curve: ConvexCurve, n: int, L: float, supersample: int = SUPERSAMPLE) -> np.ndarray:
    """Fraction of each grid cell covered by the domain.

    Cells whose corners and centre disagree on membership, together with
    their neighbours, are supersampled on a ``supersample^2`` lattice; the
    rest take their centre's membership.
    """
    d = 2.0 * L / n
    z = grid_points(n, float(L))
    centre_in = np.asarray(contains(curve, z), dtype=bool)
    xc = -L - d / 2 + d * np.arange(n + 1)
    corner_in = np.asarray(contains(curve, xc[:, None] + 1j * xc[None, :]), dtype=bool)
    quad = np.stack([corner_in[:-1, :-1], corner_in[1:, :-1], corner_in[:-1, 1:], corner_in[1:, 1:]])
    cut = (quad.any(axis=0) & ~quad.all(axis=0)) | (quad.all(axis=0) != centre_in)
    cut = ndimage.binary_dilation(cut, structure=np.ones((3, 3), dtype=bool))
    q = centre_in.astype(float)
    idx = np.flatnonzero(cut)
    o = d * ((np.arange(supersample) + 0.5) / supersample - 0.5)
    offsets = (o[:, None] + 1j * o[None, :]).ravel()
    zf = z.ravel()
    qf = q.ravel()
    for start in range(0, idx.size, _COVERAGE_CHUNK):
        part = idx[start : start + _COVERAGE_CHUNK]
        sub = zf[part][:, None] + offsets[None, :]
        qf[part] = np.asarray(contains(curve, sub), dtype=float).mean(axis=1)
    return qf.reshape(n, n)


def indicator_centre(curve: ConvexCurve, n: int, L: float) -> np.ndarray:
    return np.asarray(contains(curve, grid_points(n, float(L))), dtype=float)


@dataclass
class DiracProblem:
    """Grid discretisation of the Dirac system at one spectral point.

    ``potential`` is ``"indicator"`` (q = 1 on the domain) or a ComplexGrid of
    samples.  Indicator samples are cell-coverage fractions by default;
    ``indicator_sampling="centre"`` uses plain centre membership instead.
    """

    curve: Optional[ConvexCurve]
    k: Union[complex, SpectralPoint]
    sigma: int = 1
    n: Optional[int] = None
    L: Optional[float] = None
    potential: Union[str, ComplexGrid] = "indicator"
    indicator_sampling: str = "coverage"
    supersample: int = SUPERSAMPLE

    def __post_init__(self):
        self.k = SpectralPoint.of(self.k)
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        if isinstance(self.potential, ComplexGrid):
            if self.n is None:
                self.n = self.potential.n
            if self.L is None:
                self.L = self.potential.L
            if (self.potential.n, self.potential.L) != (self.n, float(self.L)):
                raise ValueError("sampled potential does not match the grid (n, L)")
        elif self.potential == "indicator":
            if self.curve is None:
                raise ValueError("indicator potential needs a curve")
            if self.indicator_sampling not in ("coverage", "centre", "center"):
                raise ValueError(f"unknown indicator_sampling {self.indicator_sampling!r}")
        else:
            raise ValueError(f"potential must be 'indicator' or a ComplexGrid, got {self.potential!r}")
        if self.L is None:
            self.L = BOX_FACTOR * self.curve.circumradius
        self.L = float(self.L)
        if self.n is None:
            raise ValueError("grid size n is required (see auto_grid)")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")
        spacing = 2.0 * self.L / self.n
        if spacing > max_spacing(self.k.modulus) * (1 + 1e-12):
            need = auto_grid(self.curve, self.k, budget=1 << 30, L=self.L)[0] if self.curve else None
            raise NyquistError(
                f"spacing {spacing:.4g} exceeds pi/(8|k|) = {max_spacing(self.k.modulus):.4g} at |k|={self.k.modulus:.4g}"
                + (f"; use n >= {need}" if need else "")
            )
        if self.sigma == -1:
            log.warning("sigma=-1 is an unvalidated regime for k=%s", self.k.k)

    @property
    def unvalidated(self) -> bool:
        return self.sigma == -1

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def z(self) -> np.ndarray:
        return grid_points(self.n, self.L)

    def grid(self, values) -> ComplexGrid:
        return ComplexGrid(self.n, self.L, values)

    def ones(self) -> ComplexGrid:
        return self.grid(np.ones((self.n, self.n), dtype=complex))

    @cached_property
    def q(self) -> np.ndarray:
        if isinstance(self.potential, ComplexGrid):
            q = np.array(self.potential.values, dtype=complex)
        elif self.indicator_sampling == "coverage":
            q = indicator_coverage(self.curve, self.n, self.L, self.supersample).astype(complex)
        else:
            q = indicator_centre(self.curve, self.n, self.L).astype(complex)
        check_margin(q, self.n, self.L)
        q.setflags(write=False)
        return q

    @cached_property
    def weight(self) -> np.ndarray:
        """Quadrature weights of L^2(Omega): coverage for indicators, support mask otherwise."""
        if isinstance(self.potential, ComplexGrid):
            return (self.q != 0).astype(float)
        return self.q.real.copy()

    @cached_property
    def phase(self) -> np.ndarray:
        """exp(kz - conj(kz)) = exp(2i Im(kz))."""
        return np.exp(2j * np.imag(self.k.k * self.z))

    @cached_property
    def _a_mult(self) -> np.ndarray:
        return 0.5 * self.q * np.conj(self.phase)

    @cached_property
    def _b_mult(self) -> np.ndarray:
        return 0.5 * np.conj(self.q) * self.phase

    @property
    def is_zero(self) -> bool:
        return not np.any(self.q)

    def fingerprint(self) -> tuple:
        return (self.k.k, self.sigma, self.n, self.L)

    def norm(self, u) -> float:
        v = u.values if isinstance(u, ComplexGrid) else u
        return float(np.sqrt(np.sum(np.abs(v) ** 2 * self.weight)) * self.spacing)


def _check_grid(u: ComplexGrid, problem: DiracProblem):
    if (u.n, u.L) != (problem.n, problem.L):
        raise ValueError(f"grid (n={u.n}, L={u.L}) does not match problem (n={problem.n}, L={problem.L})")


def apply_A(u: ComplexGrid, problem: DiracProblem) -> ComplexGrid:
    _check_grid(u, problem)
    return problem.grid(dbar_inverse_array(problem._a_mult * u.values, problem.L))


def apply_B(u: ComplexGrid, problem: DiracProblem) -> ComplexGrid:
    _check_grid(u, problem)
    return problem.grid(problem.sigma * del_inverse_array(problem._b_mult * u.values, problem.L))


@dataclass
class CgoSolution:
    phi1: ComplexGrid
    phi2: ComplexGrid
    neumann_terms_used: int
    residual_norm: float
    k: complex = 0j
    sigma: int = 1
    term_norms: tuple = field(default_factory=tuple)

    def fingerprint(self) -> tuple:
        return (complex(self.k), self.sigma, self.phi1.n, self.phi1.L)


def solve_cgo(problem: DiracProblem, tol: float = 1e-10, max_terms: int = 60) -> CgoSolution:
    """Sum phi1 = 1 + sum (AB)^v 1 and phi2 = sum (BA)^v B 1.

    Stops once the L^2(Omega) norm of the latest (AB)^v 1 term is at most
    ``tol``; phi2 then includes B of that term, so ``phi2 = B phi1`` holds
    exactly and the residual of ``phi1 = 1 + A phi2`` is the next term.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_terms < 1:
        raise ValueError(f"max_terms must be >= 1, got {max_terms}")
    n, L = problem.n, problem.L
    if problem.is_zero:
        return CgoSolution(
            problem.ones(), problem.grid(np.zeros((n, n), complex)), 0, 0.0, problem.k.k, problem.sigma
        )
    t = np.ones((n, n), dtype=complex)
    phi1 = t.copy()
    phi2 = np.zeros((n, n), dtype=complex)
    norms: list[float] = []
    for nu in range(1, max_terms + 1):
        b = problem.sigma * del_inverse_array(problem._b_mult * t, L)
        phi2 += b
        t = dbar_inverse_array(problem._a_mult * b, L)
        phi1 += t
        norms.append(problem.norm(t))
        if len(norms) >= 2 and norms[-2] > 0 and norms[-1] / norms[-2] >= DIVERGENCE_RATIO:
            raise NeumannDivergenceError(
                f"Neumann terms stopped contracting at term {nu} (ratio {norms[-1] / norms[-2]:.3f}) "
                f"for |k|={problem.k.modulus:.4g}; use a larger |k| or a finer grid",
                tuple(norms),
            )
        if norms[-1] <= tol:
            phi2 += problem.sigma * del_inverse_array(problem._b_mult * t, L)
            return CgoSolution(
                problem.grid(phi1), problem.grid(phi2), nu, norms[-1], problem.k.k, problem.sigma, tuple(norms)
            )
    partial = CgoSolution(problem.grid(phi1), problem.grid(phi2), max_terms, norms[-1], problem.k.k, problem.sigma, tuple(norms))
    raise MaxTermsError(
        f"Neumann series above tol={tol:.1e} after {max_terms} terms (last term norm {norms[-1]:.3e})", partial
    )


def cgo_residual(problem: DiracProblem, sol: CgoSolution) -> float:
    """L^2(Omega) residual of phi1 = 1 + A phi2 plus that of phi2 = B phi1."""
    r1 = sol.phi1.values - 1.0 - apply_A(sol.phi2, problem).values
    r2 = sol.phi2.values - apply_B(sol.phi1, problem).values
    return problem.norm(r1) + problem.norm(r2)


def ab_norm_probe(problem: DiracProblem) -> float:
    """||AB(1_Omega)||_{L^2(Omega)}."""
    if problem.is_zero:
        return 0.0
    one = problem.grid((problem.q != 0).astype(complex))
    return problem.norm(apply_A(apply_B(one, problem), problem))


def series_term_norms(problem: DiracProblem, terms: int = 3) -> list[float]:
    """Norms of (AB)^v(1) for v = 1..terms."""
    u = problem.ones()
    out = []
    for _ in range(terms):
        u = apply_A(apply_B(u, problem), problem)
        out.append(problem.norm(u))
    return out
