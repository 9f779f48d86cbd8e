"""Numerical laboratory for sub-Riemannian geodesics in the Martinet case.

The package integrates normal and abnormal geodesic flows for a catalogue of
normal forms (Martinet, contact/Heisenberg, tangential, Engel, Liu-Sussmann),
evaluates the flat-case closed forms, computes return mappings and traces of
spheres with the Martinet plane, and checks asymptotic laws of those traces.
"""

from srlab.errors import (
    ConfigError,
    DegenerateError,
    DomainError,
    IntegrationError,
    NotFoundError,
    NumericalError,
    SingularMetricError,
)
from srlab.models import GeodesicState, ModelSpec

__all__ = [
    "ConfigError",
    "DegenerateError",
    "DomainError",
    "GeodesicState",
    "IntegrationError",
    "ModelSpec",
    "NotFoundError",
    "NumericalError",
    "SingularMetricError",
]

__version__ = "0.1.0"
