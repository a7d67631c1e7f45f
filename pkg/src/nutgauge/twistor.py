"""Real twistor lines and gluing matrices on the singular model xy = prod_j (z - p_j).

Points of R^3 correspond to real sections z([a:b]) = alpha a^2 + 2 beta ab - conj(alpha) b^2
of O(2) through alpha = x1 + i x2, beta = x3.  Sections of H^s (x, y, and the
line components xi, upsilon) are evaluated homogeneously at a representative
(a, b); the exponential twist eta^c is taken in the U_b trivialization unless
stated otherwise.

The real structure on H^k is r(s)(a, b) = conj(s(-conj(b), conj(a))), and the
one on the surface is tau_c(x, y, z) = ((-1)^s r(y), r(x), -r(z)).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .errors import (
    ChartMismatch,
    DegenerateDirection,
    DivisionRemainderNonzero,
    NonGenericConfiguration,
    RealityViolation,
)

DIRECTION_TOL = 1e-12
CHART_TOL = 1e-12


@dataclass(frozen=True)
class QuadraticSection:
    """z([a:b]) = alpha a^2 + 2 beta ab - conj(alpha) b^2."""

    alpha: complex
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def from_point(cls, x) -> "QuadraticSection":
        x = np.asarray(x, dtype=float)
        return cls(complex(x[0], x[1]), x[2])

    @property
    def point(self) -> np.ndarray:
        return np.array([self.alpha.real, self.alpha.imag, self.beta])

    @property
    def coefficients(self) -> tuple[complex, complex, complex]:
        """Coefficients of a^2, ab, b^2."""
        return self.alpha, 2.0 * self.beta, -self.alpha.conjugate()

    def is_real(self, tol: float = 0.0) -> bool:
        c2, c1, c0 = self.coefficients
        return abs(c0 + c2.conjugate()) <= tol and abs(complex(c1).imag) <= tol

    def __call__(self, a, b):
        return self.alpha * a * a + 2.0 * self.beta * a * b - self.alpha.conjugate() * b * b

    def affine(self, t):
        """Value in the U_b chart, t = a/b."""
        return self(t, 1.0)

    def __sub__(self, other: "QuadraticSection") -> "QuadraticSection":
        return QuadraticSection(self.alpha - other.alpha, self.beta - other.beta)

    def to_dict(self) -> dict:
        return {"alpha": [self.alpha.real, self.alpha.imag], "beta": self.beta}


def antipodal(a, b):
    """The antipodal map of CP^1 on homogeneous coordinates."""
    return -np.conj(b), np.conj(a)


def real_structure(section, k: int):
    """r on sections of H^k given as callables (a, b) -> value."""
    return lambda a, b: np.conj(section(-np.conj(b), np.conj(a)))


def normalize(a, b):
    n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    return a / n, b / n


# ---------------------------------------------------------------------------
# surface and roots


def surface_eval(p_list: Sequence[QuadraticSection], x, y, z, a, b):
    """Residual xy - prod_j (z - p_j([a:b]))."""
    out = x * y
    prod = 1.0
    for p in p_list:
        prod = prod * (z - p(a, b))
    return out - prod


def circle_action(x, y, z, theta: float):
    e = cmath.exp(1j * theta)
    return x * e, y / e, z


def roots(zeta: QuadraticSection, p: QuadraticSection) -> tuple[complex, complex]:
    """Affine roots (rho, sigma) of zeta - p in t = a/b, square root taken non-negative."""
    d = zeta - p
    if abs(d.alpha) <= DIRECTION_TOL * max(1.0, abs(d.beta)):
        raise DegenerateDirection("alpha coincides with alpha_j: zeta - p_j has a root at infinity")
    R = math.hypot(d.beta, abs(d.alpha))
    return (-d.beta - R) / d.alpha, (-d.beta + R) / d.alpha


def reality_modulus(zeta: QuadraticSection, nuts: Sequence[QuadraticSection], printed: bool = False) -> float:
    """|A|^2 forced by tau_c-invariance: prod_j (R_j - delta_j).

    With ``printed`` the alternative prod_j (delta_j + R_j) is returned; that
    value is |B|^2 for the same line.
    """
    out = 1.0
    for p in nuts:
        d = zeta - p
        R = math.hypot(d.beta, abs(d.alpha))
        out *= (d.beta + R) if printed else (R - d.beta)
    return out


def leading_coefficient(zeta: QuadraticSection, nuts: Sequence[QuadraticSection]) -> complex:
    out = 1.0 + 0j
    for p in nuts:
        out *= zeta.alpha - p.alpha
    return out


# ---------------------------------------------------------------------------
# eta^c


def transition(z_b, a, b, c: float = 1.0):
    """g(z, [a:b]) = exp(-c z b/a) with z the fibre coordinate over U_b."""
    if abs(a) <= CHART_TOL:
        raise ChartMismatch("transition needs a != 0")
    return np.exp(-c * z_b * b / a)


def eta_section(zeta: QuadraticSection, c: float, a, b, chart: str = "U_b"):
    """The nowhere vanishing section eta^c of L^c along zeta, in the chart U_a or U_b."""
    if chart == "U_b":
        if abs(b) <= CHART_TOL:
            raise ChartMismatch("U_b needs b != 0")
        return np.exp(c * (zeta.alpha * (a / b) + zeta.beta))
    if chart == "U_a":
        if abs(a) <= CHART_TOL:
            raise ChartMismatch("U_a needs a != 0")
        return np.exp(c * (zeta.alpha.conjugate() * (b / a) - zeta.beta))
    raise ChartMismatch(f"unknown chart {chart!r}")


# ---------------------------------------------------------------------------
# real lines


@dataclass(frozen=True)
class RealTwistorSection:
    zeta: QuadraticSection
    A: complex
    nuts: tuple = ()
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "A", complex(self.A))
        object.__setattr__(self, "nuts", tuple(self.nuts))
        for p in self.nuts:
            roots(self.zeta, p)  # genericity
        if self.A == 0:
            raise RealityViolation("A must be nonzero")

    @classmethod
    def from_phase(cls, zeta: QuadraticSection, nuts, phase: float, c: float = 1.0) -> "RealTwistorSection":
        """The real section over zeta with arg A = phase."""
        mod = math.sqrt(reality_modulus(zeta, nuts))
        return cls(zeta, mod * cmath.exp(1j * phase), tuple(nuts), c)

    @classmethod
    def from_point(cls, x, nuts_points, phase: float = 0.0, c: float = 1.0) -> "RealTwistorSection":
        nuts = tuple(QuadraticSection.from_point(q) for q in np.atleast_2d(nuts_points))
        return cls.from_phase(QuadraticSection.from_point(x), nuts, phase, c)

    @property
    def s(self) -> int:
        return len(self.nuts)

    @property
    def B(self) -> complex:
        return leading_coefficient(self.zeta, self.nuts) / self.A

    def rotate(self, tau: float) -> "RealTwistorSection":
        return RealTwistorSection(self.zeta, self.A * cmath.exp(1j * tau), self.nuts, self.c)

    def reality_defect(self) -> float:
        """Relative gap between |A|^2 and the modulus forced by the real structure."""
        m = reality_modulus(self.zeta, self.nuts)
        return abs(abs(self.A) ** 2 - m) / m

    def check_reality(self, tol: float = 1e-10) -> None:
        if self.reality_defect() > tol:
            raise RealityViolation(f"|A|^2 misses the reality constraint by {self.reality_defect():.2e}")

    def to_dict(self) -> dict:
        return {
            "alpha": [self.zeta.alpha.real, self.zeta.alpha.imag],
            "beta": self.zeta.beta,
            "A": [self.A.real, self.A.imag],
            "nuts": [p.point.tolist() for p in self.nuts],
            "c": self.c,
        }


@dataclass(frozen=True)
class LinePolynomials:
    """xi = A eta^c prod (a - rho_j b), upsilon = B eta^-c prod (a - sigma_j b), zeta."""

    xi: np.ndarray        # homogeneous coefficients of a^s, a^{s-1} b, ..., b^s
    upsilon: np.ndarray
    zeta: QuadraticSection
    A: complex
    B: complex
    rho: np.ndarray
    sigma: np.ndarray
    nuts: tuple
    c: float = 1.0

    @property
    def s(self) -> int:
        return len(self.rho)

    @staticmethod
    def _homog(coeffs, a, b):
        s = len(coeffs) - 1
        return sum(cf * a ** (s - k) * b**k for k, cf in enumerate(coeffs))

    def xi_at(self, a, b, chart: str = "U_b"):
        return self.A * eta_section(self.zeta, self.c, a, b, chart) * self._homog(self.xi, a, b)

    def upsilon_at(self, a, b, chart: str = "U_b"):
        return self.B * eta_section(self.zeta, -self.c, a, b, chart) * self._homog(self.upsilon, a, b)

    def zeta_at(self, a, b):
        return self.zeta(a, b)

    def factorization_residual(self, a, b) -> float:
        """|xi upsilon - prod (zeta - p_j)| relative to the larger term."""
        lhs = self.xi_at(a, b) * self.upsilon_at(a, b)
        rhs = np.prod([self.zeta(a, b) - p(a, b) for p in self.nuts])
        return abs(lhs - rhs) / max(abs(rhs), abs(lhs), 1e-300)


def real_line(section: RealTwistorSection, c: float | None = None, swap=()) -> LinePolynomials:
    """Factorize zeta - p_j and assign rho_j to xi, sigma_j to upsilon.

    ``swap`` lists indices j whose roots are exchanged (the Galois relabeling);
    the modulus of A is then adjusted by the factor (delta_j + R_j)/(R_j - delta_j)
    with the phase kept.  Swapping an even number of pairs gives another
    tau_c-invariant line over the same zeta; an odd number flips the sign of
    the modulus forced by reality, so that line is real only for the opposite
    sign convention of r.
    """
    section.check_reality()
    c = section.c if c is None else c
    rho, sigma = [], []
    A = section.A
    for j, p in enumerate(section.nuts):
        r_, s_ = roots(section.zeta, p)
        if j in swap:
            d = section.zeta - p
            R = math.hypot(d.beta, abs(d.alpha))
            A *= math.sqrt((d.beta + R) / (R - d.beta))
            r_, s_ = s_, r_
        rho.append(r_)
        sigma.append(s_)
    rho, sigma = np.array(rho, dtype=complex), np.array(sigma, dtype=complex)
    B = leading_coefficient(section.zeta, section.nuts) / A
    return LinePolynomials(np.poly(rho) if len(rho) else np.ones(1), np.poly(sigma) if len(sigma) else np.ones(1),
                           section.zeta, A, B, rho, sigma, section.nuts, c)


def tau_c_defect(line: LinePolynomials, a, b) -> float:
    """Pointwise defect of tau_c-invariance of the line at [a:b] (a, b nonzero).

    Checks xi = (-1)^s r(upsilon), upsilon = r(xi), zeta = -r(zeta) where the
    values at the antipodal point are taken in the U_a trivialization of L^{+-c}.
    """
    a, b = normalize(a, b)
    s = line.s
    a2, b2 = antipodal(a, b)
    r_ups = np.conj(line.upsilon_at(a2, b2, "U_a"))
    r_xi = np.conj(line.xi_at(a2, b2, "U_a"))
    r_zeta = np.conj(line.zeta(a2, b2))
    xi, ups, z = line.xi_at(a, b), line.upsilon_at(a, b), line.zeta(a, b)
    scale = max(abs(xi), abs(ups), abs(z), 1e-300)
    return max(abs(xi - (-1) ** s * r_ups), abs(ups - r_xi), abs(z + r_zeta)) / scale


# ---------------------------------------------------------------------------
# theta and the gluing matrix


@dataclass(frozen=True)
class GluingData:
    M: np.ndarray
    theta: complex
    f: complex
    g: complex
    h: complex
    xi: complex
    upsilon: complex

    def identity_residuals(self, x, y) -> tuple[float, float]:
        """Residuals of f = (-x/u) g + (theta/u) h and h = (-h/u) g + (y/u) h."""
        u = self.upsilon
        r1 = abs(self.f - (-x / u * self.g + self.theta / u * self.h))
        r2 = abs(self.h - (-self.h / u * self.g + y / u * self.h))
        # relative to the largest term, since x g / u and theta h / u nearly cancel
        scale = max(abs(self.f), abs(x * self.g / u), abs(self.theta * self.h / u), 1e-300)
        scale2 = max(abs(self.h), abs(self.h * self.g / u), abs(y * self.h / u), 1e-300)
        return r1 / scale, r2 / scale2

    def det_residual(self) -> float:
        target = -self.xi / self.upsilon
        return abs(np.linalg.det(self.M) - target) / max(abs(target), 1e-300)


def theta_value(nuts, z, zeta_val, p_vals=None, a=None, b=None):
    """(prod(z - p_j) - prod(zeta - p_j)) / (z - zeta) as a divided difference (no division)."""
    if p_vals is None:
        p_vals = [p(a, b) for p in nuts]
    s = len(p_vals)
    out = 0.0
    for k in range(s):
        term = 1.0
        for i in range(k):
            term = term * (z - p_vals[i])
        for i in range(k + 1, s):
            term = term * (zeta_val - p_vals[i])
        out = out + term
    return out


def theta_and_gluing(line: LinePolynomials, x, y, z, a, b) -> GluingData:
    """Gluing matrix M = (1/upsilon) [[-x, theta], [-h, y]] at an on-surface point over [a:b]."""
    xi = line.xi_at(a, b)
    ups = line.upsilon_at(a, b)
    zt = line.zeta(a, b)
    th = theta_value(line.nuts, z, zt, a=a, b=b)
    h = z - zt
    M = np.array([[-x, th], [-h, y]], dtype=complex) / ups
    return GluingData(M=M, theta=th, f=x - xi, g=y - ups, h=h, xi=xi, upsilon=ups)


def _exact(v: float) -> sp.Rational:
    return sp.Rational(v) if v != 0 else sp.Integer(0)


def _exact_section(q: QuadraticSection, a, b):
    al = _exact(q.alpha.real) + sp.I * _exact(q.alpha.imag)
    return sp.expand(al * a**2 + 2 * _exact(q.beta) * a * b - sp.conjugate(al) * b**2)


def theta_exact(zeta: QuadraticSection, nuts: Sequence[QuadraticSection]):
    """Exact division of prod(z - p_j) - prod(zeta - p_j) by (z - zeta) over Q(i)[a, b, z].

    Returns (theta, remainder) as sympy expressions; raises
    DivisionRemainderNonzero if the remainder does not vanish.
    """
    a, b, z = sp.symbols("a b z")
    zt = _exact_section(zeta, a, b)
    ps = [_exact_section(p, a, b) for p in nuts]
    num = sp.expand(sp.prod([z - p for p in ps]) - sp.prod([zt - p for p in ps]))
    q, r = sp.div(sp.Poly(num, z, a, b), sp.Poly(z - zt, z, a, b))
    rem = sp.expand(r.as_expr())
    if rem != 0:
        raise DivisionRemainderNonzero(f"remainder {rem}")
    return q.as_expr(), rem


def theta_exact_matches(zeta, nuts, z, a, b) -> float:
    """Relative gap between the exact quotient and the divided-difference value at a point."""
    th, _ = theta_exact(zeta, nuts)
    A_, B_, Z_ = sp.symbols("a b z")
    exact = complex(th.subs({A_: a, B_: b, Z_: z}).evalf(30))
    num = theta_value(nuts, z, zeta(a, b), a=a, b=b)
    return abs(exact - num) / max(abs(exact), 1e-300)


def surface_point(nuts, a, b, rng: np.random.Generator, scale: float = 1.0):
    """Random (x, y, z) on xy = prod(z - p_j) over [a:b] with x != 0."""
    z = complex(*(scale * rng.normal(size=2)))
    x = complex(*(scale * rng.normal(size=2)))
    y = np.prod([z - p(a, b) for p in nuts]) / x
    return x, y, z


def random_direction(rng: np.random.Generator):
    v = rng.normal(size=4)
    return normalize(complex(v[0], v[1]), complex(v[2], v[3]))


def s1_equivariance(section: RealTwistorSection, tau: float, n: int = 20, seed: int = 0) -> dict:
    """Compare M for (alpha, beta, e^{i tau} A) with phase multiples of M for A.

    ``deviation`` is max |M' - e^{i tau} M| (the law that holds, since
    upsilon scales by e^{-i tau} while theta, x, y, h are unchanged);
    ``printed_law_deviation`` is max |M' - e^{-i tau} M|, and
    ``inverse_deviation`` is max |M'^{-1} - e^{-i tau} M^{-1}|.
    """
    rng = np.random.default_rng(seed)
    l0 = real_line(section)
    l1 = real_line(section.rotate(tau))
    ph = cmath.exp(1j * tau)
    dev = printed = inv = 0.0
    for _ in range(n):
        a, b = random_direction(rng)
        x, y, z = surface_point(section.nuts, a, b, rng)
        M0 = theta_and_gluing(l0, x, y, z, a, b).M
        M1 = theta_and_gluing(l1, x, y, z, a, b).M
        scale = np.abs(M0).max()
        dev = max(dev, np.abs(M1 - ph * M0).max() / scale)
        printed = max(printed, np.abs(M1 - M0 / ph).max() / scale)
        i0, i1 = np.linalg.inv(M0), np.linalg.inv(M1)
        inv = max(inv, np.abs(i1 - i0 / ph).max() / np.abs(i0).max())
    return {"deviation": float(dev), "printed_law_deviation": float(printed), "inverse_deviation": float(inv)}


# ---------------------------------------------------------------------------
# exceptional directions


def exceptional_directions(config, tol: float = 1e-9) -> list[dict]:
    """Directions [a:b] with p_i([a:b]) = p_j([a:b]); two per pair, s(s-1) in total.

    Each entry carries the pair (i, j) and a normalized (a, b).  Raises
    NonGenericConfiguration if two directions coincide (three collinear NUTs)
    or a pair degenerates.
    """
    pts = np.asarray(config.points if hasattr(config, "points") else config, dtype=float)
    secs = [QuadraticSection.from_point(q) for q in pts]
    out = []
    for i in range(len(secs)):
        for j in range(i + 1, len(secs)):
            d = secs[i] - secs[j]
            if abs(d.alpha) == 0 and d.beta == 0:
                raise NonGenericConfiguration(f"sections {i} and {j} coincide")
            if abs(d.alpha) <= DIRECTION_TOL * abs(d.beta):
                dirs = [(1.0 + 0j, 0j), (0j, 1.0 + 0j)]
            else:
                R = math.hypot(d.beta, abs(d.alpha))
                dirs = [normalize(t, 1.0) for t in ((-d.beta - R) / d.alpha, (-d.beta + R) / d.alpha)]
            for a, b in dirs:
                out.append({"pair": (i, j), "a": complex(a), "b": complex(b)})
    for m in range(len(out)):
        for n_ in range(m + 1, len(out)):
            u, v = out[m], out[n_]
            if abs(u["a"] * v["b"] - u["b"] * v["a"]) < tol:
                raise NonGenericConfiguration(f"exceptional directions of pairs {u['pair']} and {v['pair']} coincide")
    return out


def direction_to_unit_vector(a, b) -> np.ndarray:
    """Point u of S^2 for [a:b]; the real section of x vanishes at [a:b] iff x is parallel to u."""
    a, b = normalize(a, b)
    w = 2 * np.conj(a) * b
    return np.array([w.real, w.imag, abs(b) ** 2 - abs(a) ** 2])
