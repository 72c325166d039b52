"""Strictly convex boundaries, spectral points and stationary-phase poles.

Every curve is parametrized over [0, 2*pi) with positive orientation.  Three
families are built in: centred disks, axis-aligned centred ellipses and
finite Fourier series ``gamma(t) = sum_n c_n exp(i n t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
MAX_ORDER = 4
BOUNDARY_TOL = 1e-12
CONVEXITY_SAMPLES = 1024
POLE_SCAN_POINTS = 256


class CurveError(ValueError):
    """Invalid curve description or a curve that is not strictly convex."""


class PoleSearchError(RuntimeError):
    """The critical points of the boundary phase could not be isolated."""


@dataclass(frozen=True)
class SpectralPoint:
    """The spectral parameter k and the quantities derived from it."""

    k: complex

    def __post_init__(self):
        k = complex(self.k)
        if not np.isfinite(k) or k == 0:
            raise ValueError(f"spectral parameter must be finite and nonzero, got {self.k!r}")
        object.__setattr__(self, "k", k)

    @classmethod
    def of(cls, k: "complex | SpectralPoint") -> "SpectralPoint":
        return k if isinstance(k, SpectralPoint) else cls(complex(k))

    @classmethod
    def polar(cls, modulus: float, theta: float = 0.0) -> "SpectralPoint":
        return cls(modulus * np.exp(1j * theta))

    @property
    def modulus(self) -> float:
        return abs(self.k)

    @property
    def theta(self) -> float:
        return float(np.angle(self.k))

    @property
    def h(self) -> float:
        return 1.0 / abs(self.k)

    @property
    def omega(self) -> complex:
        # kz - conj(kz) = i|k| Re(z conj(omega))
        return 2j * self.k.conjugate() / abs(self.k)


@dataclass(frozen=True)
class ConvexCurve:
    """A smooth, strictly convex, positively oriented closed curve.

    Use the ``disk``, ``ellipse`` and ``fourier`` constructors rather than
    filling the fields by hand.  Fourier curves are checked for regularity
    and strict convexity on construction.
    """

    mode: str
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    coeffs: tuple = ()
    period: float = TWO_PI

    def __post_init__(self):
        if self.mode == "disk":
            if not self.radius > 0:
                raise CurveError(f"disk radius must be positive, got {self.radius}")
        elif self.mode == "ellipse":
            if not (self.a > 0 and self.b > 0):
                raise CurveError(f"ellipse semi-axes must be positive, got a={self.a}, b={self.b}")
        elif self.mode == "fourier":
            if not self.coeffs:
                raise CurveError("fourier curve needs at least one coefficient")
            self._check_fourier()
        else:
            raise CurveError(f"unknown curve mode {self.mode!r}")

    @classmethod
    def disk(cls, radius: float = 1.0) -> "ConvexCurve":
        return cls("disk", radius=float(radius))

    @classmethod
    def ellipse(cls, a: float, b: float) -> "ConvexCurve":
        return cls("ellipse", a=float(a), b=float(b))

    @classmethod
    def fourier(cls, coeffs) -> "ConvexCurve":
        """Build ``sum_n c_n e^{int}`` from a mapping ``{n: c_n}`` or ``[(n, re, im), ...]``."""
        if isinstance(coeffs, dict):
            items = [(int(n), complex(c)) for n, c in coeffs.items()]
        else:
            items = []
            for row in coeffs:
                if len(row) == 3:
                    n, re, im = row
                    items.append((int(n), complex(float(re), float(im))))
                elif len(row) == 2:
                    n, c = row
                    items.append((int(n), complex(c)))
                else:
                    raise CurveError(f"fourier coefficient rows are [n, re, im], got {row!r}")
        merged: dict[int, complex] = {}
        for n, c in items:
            merged[n] = merged.get(n, 0j) + c
        return cls("fourier", coeffs=tuple(sorted(merged.items())))

    @classmethod
    def from_config(cls, spec: dict) -> "ConvexCurve":
        kind = spec.get("type")
        if kind == "disk":
            return cls.disk(spec.get("radius", 1.0))
        if kind == "ellipse":
            return cls.ellipse(spec["a"], spec["b"])
        if kind == "fourier":
            return cls.fourier(spec["coeffs"])
        raise CurveError(f"curve.type must be disk, ellipse or fourier, got {kind!r}")

    def to_config(self) -> dict:
        if self.mode == "disk":
            return {"type": "disk", "radius": self.radius}
        if self.mode == "ellipse":
            return {"type": "ellipse", "a": self.a, "b": self.b}
        return {"type": "fourier", "coeffs": [[n, c.real, c.imag] for n, c in self.coeffs]}

    def _check_fourier(self):
        t = np.linspace(0.0, TWO_PI, CONVEXITY_SAMPLES, endpoint=False)
        d = self.derivatives(t, 2)
        speed = np.abs(d[1])
        if np.min(speed) <= 1e-12 * max(1.0, np.max(speed)):
            raise CurveError("fourier curve is not regular: |gamma'(t)| vanishes")
        kappa = np.imag(np.conj(d[1]) * d[2]) / speed**3
        if np.all(kappa < 0):
            raise CurveError("fourier curve is negatively oriented; reverse the coefficient indices")
        if not np.all(kappa > 0):
            bad = t[np.argmin(kappa)]
            raise CurveError(f"fourier curve is not strictly convex: curvature {kappa.min():.3g} at t={bad:.6f}")

    def derivatives(self, t, order: int = 0) -> np.ndarray:
        """Return ``[gamma, gamma', ..., gamma^(order)]`` stacked along axis 0."""
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")
        t = np.asarray(t, dtype=float)
        out = np.empty((order + 1,) + t.shape, dtype=complex)
        if self.mode == "disk":
            e = self.radius * np.exp(1j * t)
            for m in range(order + 1):
                out[m] = (1j) ** m * e
        elif self.mode == "ellipse":
            for m in range(order + 1):
                shift = t + m * np.pi / 2
                out[m] = self.a * np.cos(shift) + 1j * self.b * np.sin(shift)
        else:
            n = np.array([c[0] for c in self.coeffs], dtype=float)
            c = np.array([c[1] for c in self.coeffs], dtype=complex)
            phase = np.exp(1j * np.multiply.outer(t, n))
            for m in range(order + 1):
                out[m] = phase @ (c * (1j * n) ** m)
        return out

    def __call__(self, t):
        return self.derivatives(t, 0)[0]

    def curvature(self, t) -> np.ndarray:
        d = self.derivatives(t, 2)
        return np.imag(np.conj(d[1]) * d[2]) / np.abs(d[1]) ** 3

    @property
    def center(self) -> complex:
        """An interior point the curve is star-shaped about (the mean boundary point)."""
        if self.mode == "fourier":
            return dict(self.coeffs).get(0, 0j)
        return 0j

    @property
    def circumradius(self) -> float:
        """Largest distance from the origin to the curve."""
        if self.mode == "disk":
            return self.radius
        if self.mode == "ellipse":
            return max(self.a, self.b)
        t = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
        return float(np.max(np.abs(self(t))))

    @property
    def area(self) -> float:
        if self.mode == "disk":
            return np.pi * self.radius**2
        if self.mode == "ellipse":
            return np.pi * self.a * self.b
        # trapezoid is exact for trigonometric polynomials of this degree
        nmax = max(abs(n) for n, _ in self.coeffs)
        t = np.linspace(0.0, TWO_PI, 4 * nmax + 8, endpoint=False)
        d = self.derivatives(t, 1)
        return float(0.5 * np.mean(np.imag(np.conj(d[0]) * d[1])) * TWO_PI)

    @property
    def max_speed(self) -> float:
        t = np.linspace(0.0, TWO_PI, 1024, endpoint=False)
        return float(np.max(np.abs(self.derivatives(t, 1)[1])))


def boundary_eval(curve: ConvexCurve, t: float, order: int) -> list[complex]:
    """Return ``[gamma(t), gamma'(t), ..., gamma^(order)(t)]`` as Python complexes."""
    return [complex(v) for v in curve.derivatives(float(t), order)]


def contains(curve: ConvexCurve, z, tol: float = BOUNDARY_TOL):
    """Membership test for the closed domain; points within ``tol`` of the boundary count as inside."""
    z = np.asarray(z, dtype=complex)
    if curve.mode == "disk":
        inside = np.abs(z) <= curve.radius + tol
    elif curve.mode == "ellipse":
        x, y = z.real, z.imag
        f = (x / curve.a) ** 2 + (y / curve.b) ** 2 - 1.0
        grad = 2.0 * np.sqrt((x / curve.a**2) ** 2 + (y / curve.b**2) ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            near = np.abs(f) <= tol * grad
        inside = (f <= 0) | near
    else:
        inside = _contains_starshaped(curve, z, tol)
    return bool(inside) if inside.ndim == 0 else inside


def _contains_starshaped(curve: ConvexCurve, z: np.ndarray, tol: float) -> np.ndarray:
    # radial test about an interior point; arg(gamma(t) - c) is monotone in t
    c = curve.center
    w = z - c
    alpha = np.angle(w)
    tab_t = np.linspace(0.0, TWO_PI, 4097)
    tab_theta = np.unwrap(np.angle(curve(tab_t) - c))
    theta0 = tab_theta[0]
    target = theta0 + np.mod(alpha - theta0, TWO_PI)
    t = np.interp(target, tab_theta, tab_t)
    rot = np.exp(-1j * alpha)
    for _ in range(8):
        d = curve.derivatives(t, 1)
        g = np.imag(rot * (d[0] - c))
        dg = np.imag(rot * d[1])
        step = g / dg
        t = t - step
        if np.max(np.abs(step), initial=0.0) < 1e-15:
            break
    rb = np.abs(curve(t) - c)
    return np.abs(w) <= rb + tol


@dataclass(frozen=True)
class PolePair:
    """Parameters and positions of the North/South poles w_+(k), w_-(k)."""

    t_plus: float
    t_minus: float
    w_plus: complex
    w_minus: complex

    def t(self, sign: str) -> float:
        return self.t_plus if sign == "+" else self.t_minus


def _pole_function(curve: ConvexCurve, kk: complex):
    # g(t) = Im(k gamma'(t)) / |k| and its derivative
    scale = 1.0 / abs(kk)

    def g(t):
        d = curve.derivatives(t, 2)
        return np.imag(kk * d[1]) * scale, np.imag(kk * d[2]) * scale

    return g


def _newton_bracketed(g, lo: float, hi: float, glo: float, maxiter: int = 100) -> float:
    t = 0.5 * (lo + hi)
    for _ in range(maxiter):
        val, der = g(t)
        val, der = float(val), float(der)
        if val == 0.0:
            return t
        if (val > 0) == (glo > 0):
            lo, glo = t, val
        else:
            hi = t
        step = val / der if der != 0 else np.inf
        candidate = t - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - t) <= 4e-16 * max(1.0, abs(t)):
            return candidate
        t = candidate
    raise PoleSearchError(f"Newton iteration did not converge in bracket [{lo!r}, {hi!r}]")


def find_poles(curve: ConvexCurve, k) -> PolePair:
    """Locate the two critical points of ``t -> Im(k gamma(t))``.

    The pole ``w_+`` is the one where the interior normal is a positive
    multiple of ``omega = 2i conj(k)/|k|``, which is where ``k gamma'(t)`` is
    real and positive.
    """
    kk = SpectralPoint.of(k).k
    g = _pole_function(curve, kk)
    ts = np.linspace(0.0, TWO_PI, POLE_SCAN_POINTS + 1)
    vals = g(ts)[0]
    vals[-1] = vals[0]
    signs = np.sign(vals)
    # exact zeros on the scan grid are nudged to the sign of their right neighbour
    for i in np.flatnonzero(signs == 0):
        signs[i] = signs[(i + 1) % POLE_SCAN_POINTS] or 1.0
    changes = np.flatnonzero(signs[:-1] != signs[1:])
    if len(changes) != 2:
        raise CurveError(
            f"expected exactly two critical points of the boundary phase, found {len(changes)} "
            "sign changes; the curve is not strictly convex"
        )
    roots = []
    for i in changes:
        lo, hi = ts[i], ts[i + 1]
        try:
            roots.append(_newton_bracketed(g, lo, hi, vals[i]))
        except PoleSearchError as exc:
            raise PoleSearchError(f"{exc} (k={kk!r})") from None
    roots = [float(np.mod(r, TWO_PI)) for r in roots]
    tangents = curve.derivatives(np.array(roots), 1)[1]
    re = np.real(kk * tangents)
    if not re[0] * re[1] < 0:
        raise PoleSearchError(f"critical points {roots} are not a North/South pair for k={kk!r}")
    ip = 0 if re[0] > 0 else 1
    t_plus, t_minus = roots[ip], roots[1 - ip]
    return PolePair(t_plus, t_minus, complex(curve(t_plus)), complex(curve(t_minus)))

