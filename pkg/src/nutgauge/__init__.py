"""Multi-Taub-NUT geometry, rescaled anti-self-dual connections and their twistor data."""

from __future__ import annotations

from . import errors, fd, gauge, geometry, harmonic, moduli, twistor
from .geometry import ChartPoint, NutConfiguration
from .harmonic import GreenSpec, HarmonicFunction, Space

__version__ = "0.1.0"

__all__ = [
    "ChartPoint",
    "GreenSpec",
    "HarmonicFunction",
    "NutConfiguration",
    "Space",
    "errors",
    "fd",
    "gauge",
    "geometry",
    "harmonic",
    "moduli",
    "twistor",
]
