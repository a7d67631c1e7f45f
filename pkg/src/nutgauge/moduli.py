"""Unframed moduli of unit-energy rescaled instantons: points (y, lambda) of M_V x (0, +inf].

At lambda = +inf the circle orbit of y is collapsed, so these points are
stored with tau = 0.  Over each base point b in R^3 the fibre of
(y, lambda) -> pi(y) is an open disc (a circle times a collar, pinched at the
centre), except over the NUTs where the circle degenerates and the fibre is
the half-open segment lambda in (0, +inf].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import NUT_TOL, TWO_PI, ChartPoint, NutConfiguration

# dimension counts recorded for reference, not computed
DIMENSION_UNFRAMED = 5
DIMENSION_FRAMED_PER_UNIT = 8


@dataclass(frozen=True)
class ModuliPoint:
    y: ChartPoint
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not lam > 0:
            raise ValueError("lambda must be positive or +inf")
        y = self.y if isinstance(self.y, ChartPoint) else ChartPoint(np.asarray(self.y[1:]), self.y[0])
        if math.isinf(lam):
            y = ChartPoint(y.x, 0.0)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "y", y)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.lam)

    def to_dict(self) -> dict:
        return {"x": self.y.x.tolist(), "tau": self.y.tau, "lambda": None if self.infinite else self.lam}


def _same_base(x1, x2, tol: float) -> bool:
    return float(np.linalg.norm(np.asarray(x1) - np.asarray(x2))) <= tol


def _same_angle(t1: float, t2: float, tol: float) -> bool:
    d = (t1 - t2 + np.pi) % TWO_PI - np.pi
    return abs(d) <= tol


def is_nut(x, config: NutConfiguration, tol: float = NUT_TOL) -> bool:
    if config.s == 0:
        return False
    return bool(np.min(np.linalg.norm(config.points - np.asarray(x), axis=1)) <= tol)


def are_equivalent(m1: ModuliPoint, m2: ModuliPoint, config: NutConfiguration, tol: float = 1e-12) -> bool:
    """Gauge equivalence: equal points, or both at lambda = +inf over the same base point.

    Over a NUT the circle fibre is a single point, so the angle is
    irrelevant there for every lambda.
    """
    if m1.infinite != m2.infinite:
        return False
    if not _same_base(m1.y.x, m2.y.x, tol):
        return False
    if m1.infinite:
        return True
    if abs(m1.lam - m2.lam) > tol * max(1.0, m1.lam):
        return False
    return is_nut(m1.y.x, config) or _same_angle(m1.y.tau, m2.y.tau, tol)


def fibration(m: ModuliPoint, config: NutConfiguration | None = None) -> np.ndarray:
    """Projection of the moduli point to R^3."""
    return np.array(m.y.x, dtype=float)


class FiberKind(str, enum.Enum):
    GENERIC = "Generic"
    SINGULAR = "Singular"


def collar_chart(lam, tau):
    """(tau, lambda) -> (mu cos tau, mu sin tau), mu = 1/(1 + lambda); lambda = +inf is the centre."""
    lam = np.asarray(lam, dtype=float)
    mu = np.where(np.isinf(lam), 0.0, 1.0 / (1.0 + np.where(np.isinf(lam), 0.0, lam)))
    return np.stack([mu * np.cos(tau), mu * np.sin(tau)], axis=-1)


def collar_chart_inverse(u):
    """Inverse of collar_chart away from the centre; the centre maps to (inf, 0)."""
    u = np.asarray(u, dtype=float)
    mu = np.hypot(u[..., 0], u[..., 1])
    with np.errstate(divide="ignore"):
        lam = np.where(mu > 0, 1.0 / np.where(mu > 0, mu, 1.0) - 1.0, np.inf)
    tau = np.where(mu > 0, np.arctan2(u[..., 1], u[..., 0]) % TWO_PI, 0.0)
    return lam, tau


def segment_chart(lam):
    """Singular fibre chart lambda -> mu = 1/(1 + lambda) in [0, 1), closed at lambda = +inf."""
    lam = np.asarray(lam, dtype=float)
    return np.where(np.isinf(lam), 0.0, 1.0 / (1.0 + np.where(np.isinf(lam), 0.0, lam)))


@dataclass(frozen=True)
class FiberReport:
    kind: FiberKind
    nut_index: int | None = None
    tags: tuple = ()

    def chart(self, lam, tau=0.0):
        if self.kind is FiberKind.SINGULAR:
            return segment_chart(lam)
        return collar_chart(lam, tau)


def fiber_type(base, config: NutConfiguration, tol: float = NUT_TOL) -> FiberReport:
    base = np.asarray(base, dtype=float)
    if config.s:
        d = np.linalg.norm(config.points - base, axis=1)
        j = int(np.argmin(d))
        if d[j] <= tol:
            return FiberReport(FiberKind.SINGULAR, j, ("cone over CP^2 at lambda = +inf",))
    return FiberReport(FiberKind.GENERIC)


def point_chart(m: ModuliPoint, config: NutConfiguration):
    return fiber_type(m.y.x, config).chart(m.lam, m.y.tau)


def is_reducible(m: ModuliPoint, config: NutConfiguration) -> bool:
    return m.infinite and is_nut(m.y.x, config)


def singular_fiber_count(config: NutConfiguration, bases=None) -> int:
    """Number of distinct singular fibres over the NUTs and any extra ``bases``."""
    cand = list(config.points) if config.s else []
    if bases is not None:
        cand += list(np.atleast_2d(bases))
    found = set()
    for b in cand:
        rep = fiber_type(b, config)
        if rep.kind is FiberKind.SINGULAR:
            found.add(rep.nut_index)
    return len(found)


def sample(config: NutConfiguration, n: int, rng: np.random.Generator, p_inf: float = 0.2, p_nut: float = 0.1,
           scale: float = 3.0) -> list[ModuliPoint]:
    """Random moduli points; some at lambda = +inf, some over NUTs."""
    out = []
    for _ in range(n):
        if config.s and rng.random() < p_nut:
            x = config.points[rng.integers(config.s)].copy()
        else:
            x = rng.normal(size=3) * scale
        lam = math.inf if rng.random() < p_inf else float(np.exp(rng.normal(0.0, 2.0)))
        out.append(ModuliPoint(ChartPoint(x, rng.uniform(0, TWO_PI)), lam))
    return out
