"""Solid Cauchy transform and grid inverses of the d-bar and d operators.

Grids are uniform n x n samples at ``z = (-L + i*D) + 1j*(-L + j*D)`` with
``D = 2L/n``; the first array index runs along x.  Inverting d-bar is a
linear (zero-padded) convolution with ``1/(pi z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from dsscatter.geometry import TWO_PI, ConvexCurve, contains

MARGIN_FRACTION = 0.25
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


class MarginError(ValueError):
    """Grid data reaches too close to the edge of the box."""


class OracleConvergenceError(RuntimeError):
    """The quadrature oracle could not reach the requested tolerance."""

    def __init__(self, message, value, estimate):
        super().__init__(message)
        self.value = value
        self.estimate = estimate


@dataclass
class ComplexGrid:
    """n x n complex samples over the box [-L, L)^2."""

    n: int
    L: float
    values: np.ndarray

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box half-width must be positive, got {self.L}")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.n, self.n):
            raise ValueError(f"values must have shape {(self.n, self.n)}, got {self.values.shape}")

    @classmethod
    def zeros(cls, n, L):
        return cls(n, L, np.zeros((n, n), dtype=complex))

    @classmethod
    def from_function(cls, n, L, func):
        return cls(n, L, func(grid_points(n, float(L))))

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def coords(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(self.n)

    @property
    def z(self) -> np.ndarray:
        return grid_points(self.n, float(self.L))

    def like(self, values) -> "ComplexGrid":
        return ComplexGrid(self.n, self.L, values)

    def same_shape(self, other: "ComplexGrid") -> bool:
        return self.n == other.n and self.L == other.L

    def index_of(self, z: complex) -> tuple[int, int]:
        """Indices of the grid node nearest to ``z``."""
        d = self.spacing
        i = int(round((z.real + self.L) / d))
        j = int(round((z.imag + self.L) / d))
        return i, j

    def sample(self, z):
        """Bilinear interpolation at the points ``z``."""
        z = np.asarray(z, dtype=complex)
        d = self.spacing
        x = (z.real + self.L) / d
        y = (z.imag + self.L) / d
        if np.any((x < 0) | (y < 0) | (x > self.n - 1) | (y > self.n - 1)):
            raise ValueError("sample point outside the grid")
        i = np.minimum(np.floor(x).astype(int), self.n - 2)
        j = np.minimum(np.floor(y).astype(int), self.n - 2)
        fx, fy = x - i, y - j
        v = self.values
        out = (
            v[i, j] * (1 - fx) * (1 - fy)
            + v[i + 1, j] * fx * (1 - fy)
            + v[i, j + 1] * (1 - fx) * fy
            + v[i + 1, j + 1] * fx * fy
        )
        return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=3)
def grid_points(n: int, L: float) -> np.ndarray:
    x = -L + (2.0 * L / n) * np.arange(n)
    z = x[:, None] + 1j * x[None, :]
    z.setflags(write=False)
    return z


def check_margin(values: np.ndarray, n: int, L: float):
    nz = np.nonzero(values)
    if len(nz[0]) == 0:
        return
    d = 2.0 * L / n
    limit = (1.0 - MARGIN_FRACTION) * L + 1e-9 * L
    lo = min(nz[0].min(), nz[1].min())
    hi = max(nz[0].max(), nz[1].max())
    reach = max(abs(-L + lo * d), abs(-L + hi * d))
    if reach > limit:
        raise MarginError(
            f"data reaches |x|,|y| = {reach:.4g}; convolution needs support within {limit:.4g} (margin L/4)"
        )


@dataclass(frozen=True)
class CauchyKernelTable:
    """Samples of 1/(pi z) on the doubled lattice, stored as their FFT."""

    n: int
    L: float
    kernel_hat: np.ndarray

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    def kernel_samples(self) -> np.ndarray:
        """Real-space kernel in FFT (wrap-around) order; origin and the unused +-n row are 0."""
        return _kernel_samples(self.n, self.L)


def _kernel_samples(n: int, L: float) -> np.ndarray:
    d = 2.0 * L / n
    m = np.arange(2 * n)
    m = np.where(m < n, m, m - 2 * n).astype(float)
    w = d * (m[:, None] + 1j * m[None, :])
    w[0, 0] = 1.0
    k = 1.0 / (np.pi * w)
    k[0, 0] = 0.0
    # the difference +-n never occurs in an n-point linear convolution
    k[n, :] = 0.0
    k[:, n] = 0.0
    return k


@lru_cache(maxsize=2)
def kernel_table(n: int, L: float) -> CauchyKernelTable:
    khat = sfft.fft2(_kernel_samples(n, float(L)), workers=-1, overwrite_x=True)
    khat.setflags(write=False)
    return CauchyKernelTable(n, float(L), khat)


def dbar_inverse_array(values: np.ndarray, L: float) -> np.ndarray:
    """Convolution with 1/(pi z); no margin check."""
    n = values.shape[0]
    table = kernel_table(n, float(L))
    fh = sfft.fft2(values, s=(2 * n, 2 * n), workers=-1)
    fh *= table.kernel_hat
    out = sfft.ifft2(fh, workers=-1, overwrite_x=True)[:n, :n]
    return out * table.spacing**2


def del_inverse_array(values: np.ndarray, L: float) -> np.ndarray:
    """Convolution with 1/(pi conj(z)), the conjugate mirror of the d-bar inverse."""
    return np.conj(dbar_inverse_array(np.conj(values), L))


def dbar_inverse_grid(f: ComplexGrid) -> ComplexGrid:
    """Solve d-bar u = f with u -> 0 at infinity, for compactly supported f."""
    check_margin(f.values, f.n, f.L)
    return f.like(dbar_inverse_array(f.values, f.L))


def del_inverse_grid(f: ComplexGrid) -> ComplexGrid:
    """Solve d u = f with u -> 0 at infinity, for compactly supported f."""
    check_margin(f.values, f.n, f.L)
    return f.like(del_inverse_array(f.values, f.L))


def solid_cauchy_grid(mask: ComplexGrid) -> ComplexGrid:
    """Grid approximation of D_Omega from indicator (or coverage-fraction) samples."""
    v = mask.values
    if np.any(np.abs(v.imag) > 0) or np.any((v.real < 0) | (v.real > 1)):
        raise ValueError("mask samples must be real and lie in [0, 1]")
    return dbar_inverse_grid(mask)


def indicator_grid(curve: ConvexCurve, n: int, L: float) -> ComplexGrid:
    """Cell-centre membership samples 1_Omega(z)."""
    z = grid_points(n, float(L))
    return ComplexGrid(n, L, contains(curve, z).astype(complex))


def dbar_fd(u: ComplexGrid) -> np.ndarray:
    """Central-difference d-bar = (d_x + i d_y)/2; edges are left as NaN."""
    return _fd(u, 1j)


def del_fd(u: ComplexGrid) -> np.ndarray:
    """Central-difference d = (d_x - i d_y)/2; edges are left as NaN."""
    return _fd(u, -1j)


def _fd(u: ComplexGrid, iy: complex) -> np.ndarray:
    v = u.values
    d = u.spacing
    out = np.full(v.shape, np.nan, dtype=complex)
    dx = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * d)
    dy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * d)
    out[1:-1, 1:-1] = 0.5 * (dx + iy * dy)
    return out


def solid_cauchy_disk(z, radius: float = 1.0):
    """Closed form: conj(z) inside the disk, r^2/z outside."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    z = np.asarray(z, dtype=complex)
    r2 = radius * radius
    inside = np.abs(z) <= radius
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(inside, np.conj(z), r2 / np.where(inside, 1.0, z))
    return complex(out) if out.ndim == 0 else out


def gauss_legendre_01(p: int) -> tuple[np.ndarray, np.ndarray]:
    if p not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(p)
        _GL_CACHE[p] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[p]


def _graded_edges(lo, hi, uniform_panels, focus, min_width):
    """Panel edges on [lo, hi]: uniform panels, refined geometrically toward each focus point."""
    edges = set(np.linspace(lo, hi, uniform_panels + 1).tolist())
    width = (hi - lo) / uniform_panels
    for f in focus:
        h = width / 2
        while h > min_width:
            for e in (f - h, f + h):
                if lo < e < hi:
                    edges.add(e)
            h /= 2
        if lo <= f <= hi:
            edges.add(f)
    return np.array(sorted(edges))


def _panel_rule(edges, p):
    x, w = gauss_legendre_01(p)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (a + (b - a) * x).ravel()
    weights = ((b - a) * w).ravel()
    return nodes, weights


def _closest_parameter(curve: ConvexCurve, z: complex) -> tuple[float, float]:
    t = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
    t0 = t[np.argmin(np.abs(curve(t) - z))]
    for _ in range(50):
        d = curve.derivatives(t0, 2)
        g = np.real(np.conj(d[0] - z) * d[1])
        dg = np.abs(d[1]) ** 2 + np.real(np.conj(d[0] - z) * d[2])
        step = g / dg if dg != 0 else 0.0
        t0 -= step
        if abs(step) < 1e-15:
            break
    return float(t0), float(abs(curve(t0) - z))


def _polar_tensor(curve, center, func, t_lo, t_hi, t_edges, s_edges, p):
    """Tensor Gauss-Legendre over w = c + s (gamma(t) - c) with signed Jacobian."""
    tn, tw = _panel_rule(t_edges, p)
    sn, sw = _panel_rule(s_edges, p)
    d = curve.derivatives(tn, 1)
    rel = d[0] - center
    jac_t = np.imag(np.conj(rel) * d[1])
    w = center + np.multiply.outer(sn, rel)
    vals = func(w) * (sn * sw)[:, None]
    return complex(np.sum(vals.sum(axis=0) * jac_t * tw))


def domain_quadrature(
    curve: ConvexCurve,
    func,
    t_panels: int = 32,
    s_panels: int = 4,
    p: int = 16,
    tol: float = 1e-12,
    max_refine: int = 6,
) -> complex:
    """Integrate a smooth ``func`` over Omega with a polar tensor Gauss-Legendre rule.

    Refines by doubling both panel counts until two successive results agree
    to ``tol`` (relative to ``max(1, |I|)``).
    """
    c = curve.center
    prev = None
    for _ in range(max_refine + 1):
        t_edges = np.linspace(0.0, TWO_PI, t_panels + 1)
        s_edges = np.linspace(0.0, 1.0, s_panels + 1)
        val = _polar_tensor(curve, c, func, 0.0, TWO_PI, t_edges, s_edges, p)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        t_panels *= 2
        s_panels *= 2
    raise OracleConvergenceError("domain quadrature did not converge", prev, abs(val - prev))


def solid_cauchy_oracle(curve: ConvexCurve, z: complex, quad_n: int = 256, tol: float = 1e-10) -> complex:
    """Brute-force quadrature of ``(1/pi) int_Omega dw / (z - w)``.

    For z in the closed domain the polar coordinates are centred at z, so
    the Jacobian cancels the singularity; boundary points integrate over the
    half-plane of inward directions.  For z outside, polar coordinates about
    an interior point are used.  Panels are graded toward the boundary point
    nearest to z.  The rule is refined until a lower-order rule on the same
    panels agrees to ``tol``; otherwise OracleConvergenceError carries the
    last value and error estimate.
    """
    if quad_n < 64:
        raise ValueError(f"quad_n must be >= 64, got {quad_n}")
    z = complex(z)
    t0, dist = _closest_parameter(curve, z)
    scale = curve.circumradius
    on_boundary = dist <= 1e-12 * max(1.0, scale)
    inside = on_boundary or bool(contains(curve, z))

    def kernel(w):
        return 1.0 / (z - w)

    panels = max(quad_n // 16, 4)
    est = np.inf
    val = None
    for _ in range(7):
        min_w = max(dist / 16.0, 1e-13) / max(scale, 1e-300)
        if inside:
            center = z
            if on_boundary:
                lo, hi = t0, t0 + TWO_PI
                t_edges = _graded_edges(lo, hi, panels, [lo, hi], 1e-9)
            else:
                lo, hi = t0 - np.pi, t0 + np.pi
                t_edges = _graded_edges(lo, hi, panels, [t0], min_w)
            s_edges = np.array([0.0, 1.0])
        else:
            center = curve.center
            lo, hi = t0 - np.pi, t0 + np.pi
            t_edges = _graded_edges(lo, hi, panels, [t0], min_w)
            s_edges = _graded_edges(0.0, 1.0, max(panels // 8, 2), [1.0], min_w)
        hi_val = _polar_tensor(curve, center, kernel, lo, hi, t_edges, s_edges, 16) / np.pi
        lo_val = _polar_tensor(curve, center, kernel, lo, hi, t_edges, s_edges, 10) / np.pi
        val = hi_val
        est = abs(hi_val - lo_val)
        if est <= tol * max(1.0, abs(hi_val)):
            return hi_val
        panels *= 2
    raise OracleConvergenceError(
        f"solid Cauchy oracle at z={z!r} reached only {est:.3e} (tol {tol:.1e})", val, est
    )


def solid_cauchy_oracle_boundary(curve: ConvexCurve, t0: float, quad_n: int = 256, tol: float = 1e-10) -> complex:
    """D_Omega at the boundary point gamma(t0), extended continuously from inside."""
    z = complex(curve(t0))
    panels = max(quad_n // 16, 4)
    lo, hi = float(t0), float(t0) + TWO_PI

    def kernel(w):
        return 1.0 / (z - w)

    est = np.inf
    val = None
    for _ in range(7):
        t_edges = _graded_edges(lo, hi, panels, [lo, hi], 1e-9)
        s_edges = np.array([0.0, 1.0])
        hi_val = _polar_tensor(curve, z, kernel, lo, hi, t_edges, s_edges, 16) / np.pi
        lo_val = _polar_tensor(curve, z, kernel, lo, hi, t_edges, s_edges, 10) / np.pi
        val, est = hi_val, abs(hi_val - lo_val)
        if est <= tol * max(1.0, abs(hi_val)):
            return hi_val
        panels *= 2
    raise OracleConvergenceError(f"boundary oracle at t0={t0} reached only {est:.3e}", val, est)
