"""Partial-captivity diagnostics for U(1) extensions f(x, s) = (E(x), s + tau(x))
of expanding circle maps."""

__version__ = "0.1.0"

from .circle_map import CircleMap, InvalidMapError, doubling_map
from .cocycle import (
    Coboundary,
    PerturbationFamily,
    TrigRoof,
    coboundary_from,
    constant_roof,
    fourier_family,
    theta,
    trig_roof,
)
from .trig import TrigPoly

__all__ = [
    "CircleMap",
    "Coboundary",
    "InvalidMapError",
    "PerturbationFamily",
    "TrigPoly",
    "TrigRoof",
    "coboundary_from",
    "constant_roof",
    "doubling_map",
    "fourier_family",
    "theta",
    "trig_roof",
]
