"""Exception hierarchy.

Every error carries a module-qualified ``code`` (``"geometry.EvaluationAtNut"``)
so the command line front end can report failures uniformly.
"""

from __future__ import annotations


class NutGaugeError(Exception):
    module = "nutgauge"

    @property
    def code(self) -> str:
        return f"{self.module}.{type(self).__name__}"


# geometry
class GeometryError(NutGaugeError):
    module = "geometry"


class EvaluationAtNut(GeometryError):
    pass


class OnDiracString(GeometryError):
    pass


class DegenerateFrame(GeometryError):
    pass


class StepTooLarge(GeometryError):
    pass


class BudgetExceeded(GeometryError):
    pass


# harmonic
class HarmonicError(NutGaugeError):
    module = "harmonic"


class SourceCoincidence(HarmonicError):
    pass


class PoleProximity(HarmonicError):
    pass


class NoBoundedSolution(HarmonicError):
    pass


class StiffnessFailure(HarmonicError):
    pass


class RealityViolation(NutGaugeError):
    """Conjugate-pair or real-structure condition failed (harmonic or twistor data)."""


# gauge
class GaugeError(NutGaugeError):
    module = "gauge"


class NonConvergentQuadrature(GaugeError):
    pass


class InsufficientRange(GaugeError):
    pass


class StencilCrossesSingularity(GaugeError):
    pass


# twistor
class TwistorError(NutGaugeError):
    module = "twistor"


class DegenerateDirection(TwistorError):
    pass


class ChartMismatch(TwistorError):
    pass


class DivisionRemainderNonzero(TwistorError):
    pass


class NonGenericConfiguration(TwistorError):
    pass


# cli
class ConfigError(NutGaugeError):
    module = "cli"


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class ValidationError(ConfigError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
