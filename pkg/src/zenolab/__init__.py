"""Numerical lab for the decay statistics seen by a finite-bandwidth detector.

An unstable state with a purely exponential free decay law is monitored
either by repeated projective ("bang-bang") measurements at intervals tau or
by a continuous, unitarity-preserving detector coupling of efficiency sigma.
Both detectors only register decay products with energy inside (-lam, lam).
The package computes click / no-click probabilities for both schemes, their
asymptotes, and the effective decay width, and ships a CLI that writes the
standard comparison datasets as CSV.
"""

from .model import (
    DetectorParams,
    ProbabilityCurve,
    SystemParams,
    Tolerances,
)
from .quadrature import (
    QuadratureError,
    QuadResult,
    SpectralTable,
    fourier_integral,
    integrate_adaptive,
    integrate_semi_infinite,
)

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "DetectorParams",
    "Tolerances",
    "ProbabilityCurve",
    "QuadResult",
    "QuadratureError",
    "SpectralTable",
    "integrate_adaptive",
    "integrate_semi_infinite",
    "fourier_integral",
    "__version__",
]
