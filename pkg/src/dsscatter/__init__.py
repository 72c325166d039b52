"""Numerical and asymptotic scattering for the DS II d-bar Dirac system.

The package computes complex geometric optics (CGO) solutions and the
reflection coefficient R(k) for potentials supported on strictly convex
smooth domains, together with the large-|k| stationary-phase formulas and
a hybrid evaluator that switches between the two regimes.
"""

from dsscatter.geometry import ConvexCurve, PolePair, SpectralPoint, contains, find_poles
from dsscatter.cauchy_transform import ComplexGrid
from dsscatter.dirac_solver import CgoSolution, DiracProblem, solve_cgo
from dsscatter.reflection import ReflectionRecord, evolve_reflection, reflection_numeric
from dsscatter.asymptotics import (
    AsymptoticConfig,
    reflection_asymptotic,
    reflection_disk_closed_form,
    reflection_hybrid,
)

__all__ = [
    "AsymptoticConfig",
    "CgoSolution",
    "ComplexGrid",
    "ConvexCurve",
    "DiracProblem",
    "PolePair",
    "ReflectionRecord",
    "SpectralPoint",
    "contains",
    "evolve_reflection",
    "find_poles",
    "reflection_asymptotic",
    "reflection_disk_closed_form",
    "reflection_hybrid",
    "reflection_numeric",
    "solve_cgo",
]

__version__ = "0.1.0"
