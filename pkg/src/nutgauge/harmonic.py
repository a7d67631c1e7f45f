"""Green functions and separated harmonic analysis on the collapsed model.

Three explicit Green functions are provided:

* flat R^3 x S^1 (tau period 2 pi), as an image sum and in closed form,
* flat R^4 (used for the BPST model),
* the collapsed model V = 1 + s/(2r), where tau-independent kappa/r is harmonic.

All are normalized to unit flux, so near the source G ~ 1/(4 pi^2 d^2) in four
dimensions.  Coordinates for evaluation follow :mod:`nutgauge.geometry`:
``X = (tau, x1, x2, x3)`` (for flat R^4 simply ``(x0, x1, x2, x3)``).

The lens harmonics Y^{k,l}_j are eigenfunctions of the Laplacian of
dTheta^2 + sin^2 dphi^2 + (dtau + cos dphi)^2 on L(s, -1), tau in [0, 4 pi/s),
normalized in L^2 for the volume form sin(Theta) dTheta dphi dtau.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import eval_jacobi

from . import fd
from .errors import (
    HarmonicError,
    NoBoundedSolution,
    PoleProximity,
    RealityViolation,
    SourceCoincidence,
    StiffnessFailure,
)
from .geometry import NutConfiguration, metric as gh_metric

TWO_PI = 2.0 * np.pi
FLAT_GREEN_C = 1.0 / (8.0 * np.pi**2)          # forced by the image series
PRINTED_FLAT_GREEN_C = 1.0 / (16.0 * np.pi**2)  # prefactor as printed in the source
KAPPA = 1.0 / (8.0 * np.pi**2)                 # unit-flux constant of kappa/r on Gibbons-Hawking spaces
FLAT_GREEN_REGULAR_PART = 1.0 / (48.0 * np.pi**2)  # lim (G - 1/(4 pi^2 d^2)) at the source
SOURCE_TOL = 1e-14


# ---------------------------------------------------------------------------
# flat R^3 x S^1


def _check_source(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    bw = np.abs(np.remainder(b + np.pi, TWO_PI) - np.pi)
    if np.any((np.abs(a) <= SOURCE_TOL) & (bw <= SOURCE_TOL)):
        raise SourceCoincidence("evaluation point coincides with the source")
    return np.abs(a), b


def flat_green_series(a, b, K: int):
    """(1/4 pi^2) sum_{|k| <= K} 1/(a^2 + (b + 2 pi k)^2), truncated image sum."""
    if K < 1:
        raise HarmonicError("K must be >= 1")
    a, b = _check_source(a, b)
    k = np.arange(-K, K + 1, dtype=float)
    terms = 1.0 / (a[..., None] ** 2 + (b[..., None] + TWO_PI * k) ** 2)
    return terms.sum(axis=-1) / (4.0 * np.pi**2)


def _image_tail(a, b, K: int):
    """Midpoint-rule estimate of the images with |k| > K (error O(K^-4))."""
    out = 0.0
    for sgn in (1.0, -1.0):
        lo = sgn * b + TWO_PI * (K + 0.5)
        safe = np.where(a > 0, a, 1.0)
        tail = np.where(a > 0, (np.pi / 2 - np.arctan(lo / safe)) / (TWO_PI * safe), 1.0 / (TWO_PI * lo))
        out = out + tail
    return out / (4.0 * np.pi**2)


def flat_green_series_extrapolated(a, b, K: int):
    """Truncated image sum plus its integral tail; converges like K^-4."""
    a, b = _check_source(a, b)
    return flat_green_series(a, b, K) + _image_tail(a, b, K)


def _cosh_minus_cos(a, b):
    """cosh(a) - cos(b) without cancellation near the source."""
    return 2.0 * np.sinh(a / 2.0) ** 2 + 2.0 * np.sin(b / 2.0) ** 2


def flat_green_closed(a, b, C: float = FLAT_GREEN_C):
    """C (1/a) tanh(a) / (1 - cos(b)/cosh(a)).

    The default C = 1/(8 pi^2) is the value that reproduces the image series.
    Evaluated as C sinh(a) / (a (cosh a - cos b)) for moderate a.
    """
    a, b = _check_source(a, b)
    big = a > 30
    am = np.where(big, 1.0, a)
    s1 = np.where(am < 1e-4, 1.0 + am * am / 6.0, np.sinh(am) / np.where(am < 1e-4, 1.0, am))
    near = s1 / _cosh_minus_cos(am, b)
    ab = np.where(big, a, 31.0)
    far = (np.tanh(ab) / ab) / (1.0 - np.cos(b) * np.where(ab > 350, 0.0, 1.0 / np.cosh(np.minimum(ab, 350))))
    return C * np.where(big, far, near)


def flat_green_gradient(a_vec, b):
    """Gradient (d/db, d/dx1, d/dx2, d/dx3) of the closed-form Green function.

    ``a_vec`` is x - y in R^3, ``b`` the tau difference; vectorized over a
    leading axis.  Written through (dG/da)/a so the axis a = 0 is regular.
    """
    a_vec = np.atleast_2d(np.asarray(a_vec, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a = np.linalg.norm(a_vec, axis=-1)
    _check_source(a, b)
    am = np.minimum(a, 30.0)
    small = am < 1e-3
    asafe = np.where(small, 1.0, am)
    s1 = np.where(small, 1.0 + am**2 / 6.0, np.sinh(asafe) / asafe)
    g1 = np.where(small, 1.0 / 3.0 + am**2 / 30.0, (asafe * np.cosh(asafe) - np.sinh(asafe)) / asafe**3)
    u = _cosh_minus_cos(am, b)
    big = a > 30
    dGda_over_a = np.where(big, -FLAT_GREEN_C / np.maximum(a, 1.0) ** 3, FLAT_GREEN_C * (g1 / u - s1 * s1 / u**2))
    dGdb = np.where(big, 0.0, -FLAT_GREEN_C * s1 * np.sin(b) / u**2)
    out = np.zeros(a.shape + (4,))
    out[..., 0] = dGdb
    out[..., 1:] = dGda_over_a[..., None] * a_vec
    return out


# ---------------------------------------------------------------------------
# collapsed model


def collapsed_green(s: int, r):
    """kappa / r, harmonic for the collapsed metric and of unit flux."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SourceCoincidence("collapsed Green function is singular at r = 0")
    return KAPPA / r


def collapsed_laplacian_apply(s: int, field: Callable, p, h: float = 1e-3, form: str = "direct") -> complex:
    """Apply the collapsed-model Laplacian to ``field(r, tau, phi, theta)`` at p.

    ``form="direct"`` uses the coefficient form in (r, tau, phi, theta);
    ``form="lens"`` evaluates V^{-1} (d_r^2 + 2/r d_r + (4/(rs) + 4/s^2) d_tau^2 + r^-2 Lens).
    """
    r, tau, phi, th = (float(v) for v in (p.coords if hasattr(p, "coords") else p))
    if np.sin(th) < 1e-6 or th - 2 * h <= 0 or th + 2 * h >= np.pi:
        raise PoleProximity(f"theta={th} too close to a pole for step {h}")
    X = np.array([r, tau, phi, th], dtype=float)
    fun = lambda Y: np.asarray(field(*Y), dtype=complex)
    d = lambda i: fd.derivative(fun, X, i, h)
    dd = lambda i: fd.second_derivative(fun, X, i, h)
    d_tp = fd.mixed_derivative(fun, X, 1, 2, h)
    ct, st = np.cos(th), np.sin(th)
    if form == "lens":
        V = 1.0 + s / (2.0 * r)
        lens = dd(3) + ct / st * d(3) + (dd(2) - 2 * ct * d_tp + dd(1)) / st**2
        return complex((dd(0) + 2.0 / r * d(0) + (4.0 / (r * s) + 4.0 / s**2) * dd(1) + lens / r**2) / V)
    q = 2 * r + s
    val = (
        2 * r / q * dd(0)
        + 4.0 / q * d(0)
        + (2 * q * q * st * st + 2 * s * s * ct * ct) / (r * s * s * q * st * st) * dd(1)
        + 2.0 / (r * q) * (dd(3) + ct / st * d(3))
        + 2.0 / (r * q * st * st) * (dd(2) - 2 * ct * d_tp)
    )
    return complex(val)


def lens_laplacian_apply(s: int, field: Callable, p, h: float = 1e-3) -> complex:
    """Laplacian of the lens space in Euler coordinates applied to ``field(tau, phi, theta)``."""
    tau, phi, th = (float(v) for v in p)
    if np.sin(th) < 1e-6 or th - 2 * h <= 0 or th + 2 * h >= np.pi:
        raise PoleProximity(f"theta={th} too close to a pole for step {h}")
    X = np.array([tau, phi, th])
    fun = lambda Y: np.asarray(field(*Y), dtype=complex)
    ct, st = np.cos(th), np.sin(th)
    val = (
        fd.second_derivative(fun, X, 2, h)
        + ct / st * fd.derivative(fun, X, 2, h)
        + (fd.second_derivative(fun, X, 1, h) - 2 * ct * fd.mixed_derivative(fun, X, 0, 1, h) + fd.second_derivative(fun, X, 0, h))
        / st**2
    )
    return complex(val)


# ---------------------------------------------------------------------------
# lens harmonics


def _lens_indices(j: int, k: int, l: int, s: int) -> int:
    """Validate indices and return m = l s / 2 (an integer when a bounded solution exists)."""
    if s < 1 or j < 0:
        raise NoBoundedSolution(f"need s >= 1 and j >= 0 (got j={j}, s={s})")
    if abs(k) > j or abs(l) > (2 * j) // s:
        raise NoBoundedSolution(f"indices out of range: j={j}, k={k}, l={l}, s={s}")
    if (l * s) % 2:
        raise NoBoundedSolution(f"l*s = {l * s} is odd: no solution bounded at both ends for integer j={j}")
    return (l * s) // 2


def legendre_general(j: int, k: int, l: int, s: int, x=None) -> np.ndarray:
    """Bounded solution P^{k,l}_j(x) of the generalized Legendre equation.

    With m = l s / 2 the solution is
    (1-x)^{|k-m|/2} (1+x)^{|k+m|/2} P_n^{(|k-m|, |k+m|)}(x), n = j - max(|k|, |m|),
    i.e. a Wigner small-d function up to a constant.  It is invariant under
    (k, l) -> (-k, -l).  ``x`` defaults to 201 points on [-1, 1].
    """
    m = _lens_indices(j, k, l, s)
    x = np.linspace(-1.0, 1.0, 201) if x is None else np.asarray(x, dtype=float)
    al, be = abs(k - m), abs(k + m)
    n = j - max(abs(k), abs(m))
    return (1 - x) ** (al / 2.0) * (1 + x) ** (be / 2.0) * eval_jacobi(n, al, be, x)


def legendre_ode_residual(j: int, k: int, l: int, s: int, x, h: float = 1e-3) -> np.ndarray:
    """Residual of (1-x^2)P'' - 2xP' - (k^2 - x k l s + l^2 s^2/4)/(1-x^2) P + j(j+1)P."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = lambda y: legendre_general(j, k, l, s, y)
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        X = np.array([xi])
        f0 = P(X)[0]
        d1 = fd.derivative(P, X, 0, h)[0]
        d2 = fd.second_derivative(P, X, 0, h)[0]
        pot = (k * k - xi * k * l * s + l * l * s * s / 4.0) / (1 - xi * xi)
        out[i] = (1 - xi * xi) * d2 - 2 * xi * d1 - pot * f0 + j * (j + 1) * f0
    return out


@lru_cache(maxsize=None)
def _lens_norm(j: int, k: int, l: int, s: int) -> float:
    xg, wg = np.polynomial.legendre.leggauss(j + 4)
    I = float(np.sum(wg * legendre_general(j, k, l, s, xg) ** 2))
    return 1.0 / math.sqrt(TWO_PI * (4 * np.pi / s) * I)


@dataclass(frozen=True)
class LensHarmonic:
    j: int
    k: int
    l: int
    s: int
    normalization: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    legendre: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _lens_indices(self.j, self.k, self.l, self.s)
        object.__setattr__(self, "normalization", _lens_norm(self.j, self.k, self.l, self.s))
        xs = np.linspace(-1.0, 1.0, 201)
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "legendre", legendre_general(self.j, self.k, self.l, self.s, xs))

    def P(self, x):
        return legendre_general(self.j, self.k, self.l, self.s, x)

    def __call__(self, tau, phi, theta):
        ph = np.exp(1j * (self.l * self.s / 2.0 * np.asarray(tau) + self.k * np.asarray(phi)))
        return self.normalization * ph * self.P(np.cos(theta))


def lens_indices(j: int, s: int) -> list[tuple[int, int]]:
    """All (k, l) with a bounded lens harmonic at level j."""
    out = []
    L = (2 * j) // s
    for k in range(-j, j + 1):
        for l in range(-L, L + 1):
            if (l * s) % 2 == 0:
                out.append((k, l))
    return out


def shell_sign_change(Y: LensHarmonic, n: int = 24) -> tuple[bool, bool]:
    """Whether Re Y and Im Y (the real basis (Y + conj Y)/2, (Y - conj Y)/2i) change sign on a grid."""
    tau = np.linspace(0, 4 * np.pi / Y.s, n, endpoint=False)
    phi = np.linspace(0, TWO_PI, n, endpoint=False)
    th = np.linspace(0.05, np.pi - 0.05, n)
    T, P, H = np.meshgrid(tau, phi, th, indexing="ij")
    v = Y(T, P, H)
    re, im = v.real, v.imag
    flip = lambda u: bool(u.min() < -1e-12 and u.max() > 1e-12)
    return flip(re), flip(im) if (Y.k, Y.l) != (0, 0) else True


# ---------------------------------------------------------------------------
# radial equation  rho'' + 2/r rho' - (j(j+1)/r^2 + s l^2 / r + l^2) rho = 0


class Branch(str, enum.Enum):
    DECAYING = "decaying"  # K^l_{-j-1}
    GROWING = "growing"    # K^l_j


@dataclass
class RadialSolution:
    j: int
    l: int
    s: int
    branch: Branch
    r: np.ndarray
    value: np.ndarray
    derivative: np.ndarray
    _evaluate: Callable = field(repr=False, default=None)

    def evaluate(self, r):
        """(value, derivative) at arbitrary radii inside the solved range."""
        return self._evaluate(np.asarray(r, dtype=float))

    def residual(self, h: float = 1e-3) -> np.ndarray:
        """ODE residual on the grid, relative to the size of the individual terms."""
        j, L, s = self.j, abs(self.l), self.s
        out = np.empty_like(self.r)
        for i, r in enumerate(self.r):
            hh = min(h, 0.02 * r)
            dprime = fd.derivative(lambda y: self.evaluate(y)[1], np.array([r]), 0, hh)[0]
            q = j * (j + 1) / r**2 + s * L * L / r + L * L
            res = dprime + 2.0 / r * self.derivative[i] - q * self.value[i]
            scale = abs(dprime) + abs(2.0 / r * self.derivative[i]) + abs(q * self.value[i])
            out[i] = abs(res) / scale
        return out


def _frobenius(j: int, L: float, s: int, r, nterms: int | None = None):
    """Growing solution r^j sum a_n r^n with n(n + 2j + 1) a_n = s L^2 a_{n-1} + L^2 a_{n-2}."""
    r = np.asarray(r, dtype=float)
    rmax = float(np.max(r)) if r.size else 0.0
    N = nterms or int(40 + 6 * L * rmax + 2 * math.sqrt(s) * L * math.sqrt(rmax))
    a = np.zeros(N + 1)
    a[0] = 1.0
    for n in range(1, N + 1):
        a[n] = (s * L * L * a[n - 1] + (L * L * a[n - 2] if n >= 2 else 0.0)) / (n * (n + 2 * j + 1))
    n = np.arange(N + 1)
    pw = r[..., None] ** n
    val = (pw * a).sum(-1)
    dval = (pw[..., 1:] / r[..., None] * (n[1:] * a[1:])).sum(-1) if N else 0 * r
    return r**j * val, j * r ** (j - 1) * val + r**j * dval if j else dval


def _asymptotic_decaying(j: int, L: float, s: int, r: float):
    """r^j e^{-Lr} U(a, 2j+2, 2Lr) from the asymptotic series of U (unnormalized)."""
    a = j + 1 + s * L / 2.0
    c = a - (2 * j + 2) + 1
    z = 2 * L * r
    term, tot, dtot = 1.0, 1.0, 0.0
    for n in range(1, 200):
        new = term * (a + n - 1) * (c + n - 1) / n * (-1.0 / z)
        if abs(new) > abs(term):
            break
        term = new
        tot += term
        dtot += -n * term / z
        if abs(term) < 1e-17 * abs(tot):
            break
    U = z ** (-a) * tot
    dU = z ** (-a) * (dtot - a * tot / z)
    pref = r**j * math.exp(-L * r)
    val = pref * U
    der = pref * (j / r - L) * U + pref * 2 * L * dU
    return val, der


def radial_solve(j: int, l: int, s: int, branch, r_grid: Sequence[float], rtol: float = 1e-12) -> RadialSolution:
    """Solve the radial overtone equation on ``r_grid``.

    Normalization follows the small-r data: K_j ~ r^j and K_{-j-1} ~ r^{-j-1}.
    l = 0 returns the exact monomials.  For l != 0 the growing branch is
    integrated outward from its Frobenius data, the decaying branch inward from
    its large-r asymptotic series and then scaled so that
    r^2 W[K_j, K_{-j-1}] = -(2j + 1).
    """
    branch = Branch(branch)
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise HarmonicError("r_grid must be positive and increasing")
    L = float(abs(l))
    if L == 0:
        if branch is Branch.GROWING:
            ev = lambda x: (x**j, j * x ** (j - 1) if j else 0.0 * x)
        else:
            ev = lambda x: (x ** (-j - 1.0), -(j + 1.0) * x ** (-j - 2.0))
        v, d = ev(r)
        return RadialSolution(j, l, s, branch, r, np.asarray(v, float), np.asarray(d, float), ev)
    if L * r[-1] > 600:
        raise StiffnessFailure(f"l * r_max = {L * r[-1]:.0f} overflows the exponential branches")
    rhs = lambda x, y: [y[1], -2.0 / x * y[1] + (j * (j + 1) / x**2 + s * L * L / x + L * L) * y[0]]
    if branch is Branch.GROWING:
        r_sw = min(r[0], 0.5)
        y0 = [float(v[0]) for v in _frobenius(j, L, s, np.array([r_sw]))]
        if r[-1] > r_sw:
            sol = solve_ivp(rhs, (r_sw, r[-1] * (1 + 1e-9)), y0, method="DOP853", rtol=rtol, atol=0.0, dense_output=True)
            if not sol.success:
                raise StiffnessFailure(sol.message)

        def ev(x):
            x = np.asarray(x, dtype=float)
            lo = x <= r_sw
            v = np.empty_like(x)
            d = np.empty_like(x)
            if np.any(lo):
                v[lo], d[lo] = _frobenius(j, L, s, x[lo])
            if np.any(~lo):
                y = sol.sol(x[~lo])
                v[~lo], d[~lo] = y[0], y[1]
            return v, d

    else:
        r_far = max(r[-1], (40.0 + 4 * j + 2 * s * L) / (2 * L))
        y0 = list(_asymptotic_decaying(j, L, s, r_far))
        r_lo = min(r[0], 0.25)
        sol = solve_ivp(rhs, (r_far, r_lo * (1 - 1e-9)), y0, method="DOP853", rtol=rtol, atol=0.0, dense_output=True)
        if not sol.success:
            raise StiffnessFailure(sol.message)
        # Wronskian normalization at r_lo
        g, gd = _frobenius(j, L, s, np.array([r_lo]))
        dv, dd = sol.sol(r_lo)
        w = r_lo**2 * (g[0] * dd - gd[0] * dv)
        scale = -(2 * j + 1) / w

        def ev(x):
            y = sol.sol(np.asarray(x, dtype=float))
            return scale * y[0], scale * y[1]

    v, d = ev(r)
    return RadialSolution(j, l, s, branch, r, np.asarray(v), np.asarray(d), ev)


def fit_large_r_exponents(sol: RadialSolution, r_min: float) -> dict:
    """Least-squares fit log|K| = A + B r + C log r + D / r over r >= r_min."""
    mask = sol.r >= r_min
    if mask.sum() < 6:
        raise HarmonicError("need at least 6 grid points beyond r_min")
    r = sol.r[mask]
    M = np.stack([np.ones_like(r), r, np.log(r), 1.0 / r], axis=1)
    coef, *_ = np.linalg.lstsq(M, np.log(np.abs(sol.value[mask])), rcond=None)
    return {"A": coef[0], "rate": coef[1], "power": coef[2], "D": coef[3]}


def wronskian(grow: RadialSolution, dec: RadialSolution) -> np.ndarray:
    return grow.value * dec.derivative - grow.derivative * dec.value


# ---------------------------------------------------------------------------
# expansion


def expansion_evaluate(
    coeffs: Mapping[tuple[int, int, int], tuple[complex, complex]],
    p,
    j_max: int,
    s: int,
    tol: float = 1e-12,
) -> complex:
    """sum over j <= j_max of (lambda K_{-j-1}(r) + mu K_j(r)) Y^{k,l}_j at p = (r, tau, phi, theta).

    Coefficients are keyed by (j, k, l).  The conjugate-pair condition
    conj(c[j,k,l]) = c[j,-k,-l] is enforced for both lambda and mu.
    """
    r, tau, phi, th = (float(v) for v in (p.coords if hasattr(p, "coords") else p))
    for (j, k, l), (lam, mu) in coeffs.items():
        lam2, mu2 = coeffs.get((j, -k, -l), (0.0, 0.0))
        scale = max(1.0, abs(lam), abs(mu))
        if abs(np.conj(lam) - lam2) > tol * scale or abs(np.conj(mu) - mu2) > tol * scale:
            raise RealityViolation(f"coefficients at (j,k,l)=({j},{k},{l}) are not conjugate to ({j},{-k},{-l})")
    total = 0.0 + 0.0j
    grid = np.array([r])
    for (j, k, l), (lam, mu) in sorted(coeffs.items()):
        if j > j_max:
            continue
        Y = LensHarmonic(j, k, l, s)(tau, phi, th)
        kd = radial_solve(j, l, s, Branch.DECAYING, grid).value[0] if lam != 0 else 0.0
        kg = radial_solve(j, l, s, Branch.GROWING, grid).value[0] if mu != 0 else 0.0
        total += (lam * kd + mu * kg) * Y
    return complex(total)


# ---------------------------------------------------------------------------
# harmonic functions f = 1 + lambda G


class Space(str, enum.Enum):
    FLAT_R3xS1 = "FlatR3xS1"
    FLAT_R4 = "FlatR4"
    COLLAPSED = "CollapsedModel"
    TAUB_NUT_AT_NUT = "TaubNutAtNut"


@dataclass(frozen=True)
class GreenSpec:
    """Green function with source ``y`` on ``space``.

    ``y`` is a 4-vector (tau, x) for the flat spaces and a 3-vector for the
    NUT-centered ones (defaults to the origin).  ``normalization`` rescales
    the unit-flux Green function.
    """

    space: Space
    y: tuple = (0.0, 0.0, 0.0, 0.0)
    normalization: float = 1.0
    s: int = 1

    def __post_init__(self):
        object.__setattr__(self, "space", Space(self.space))
        if not self.normalization > 0:
            raise HarmonicError("normalization must be positive")
        n = 3 if self.space in (Space.COLLAPSED, Space.TAUB_NUT_AT_NUT) else 4
        y = tuple(float(v) for v in self.y)
        if len(y) == 4 and n == 3:
            y = y[1:]
        if len(y) != n:
            raise HarmonicError(f"source for {self.space.value} must have {n} components")
        object.__setattr__(self, "y", y)
        if self.space is Space.TAUB_NUT_AT_NUT and self.s != 1:
            raise HarmonicError("TaubNutAtNut is the s = 1 space")

    def background(self) -> NutConfiguration:
        if self.space in (Space.FLAT_R3xS1, Space.FLAT_R4):
            return NutConfiguration.flat()
        cfg = NutConfiguration.collapsed(self.s)
        return NutConfiguration(points=np.asarray(self.y)[None, :], charges=cfg.charges)

    def distance(self, X) -> np.ndarray:
        """4-dimensional model distance to the source (flat spaces use the nearest image)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(self.y)
        if self.space is Space.FLAT_R4:
            return np.linalg.norm(X - y, axis=-1)
        if self.space is Space.FLAT_R3xS1:
            b = np.remainder(X[:, 0] - y[0] + np.pi, TWO_PI) - np.pi
            return np.hypot(np.linalg.norm(X[:, 1:] - y[1:], axis=-1), b)
        return np.sqrt(2.0 * np.linalg.norm(X[:, 1:] - y, axis=-1))

    def value(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(self.y)
        if self.space is Space.FLAT_R3xS1:
            g = flat_green_closed(np.linalg.norm(X[:, 1:] - y[1:], axis=-1), X[:, 0] - y[0])
        elif self.space is Space.FLAT_R4:
            d2 = np.sum((X - y) ** 2, axis=-1)
            if np.any(d2 <= SOURCE_TOL**2):
                raise SourceCoincidence("evaluation at the source")
            g = 1.0 / (4 * np.pi**2 * d2)
        else:
            g = collapsed_green(self.s, np.linalg.norm(X[:, 1:] - y, axis=-1))
        return self.normalization * g

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(self.y)
        if self.space is Space.FLAT_R3xS1:
            g = flat_green_gradient(X[:, 1:] - y[1:], X[:, 0] - y[0])
        elif self.space is Space.FLAT_R4:
            d = X - y
            d2 = np.sum(d * d, axis=-1)
            if np.any(d2 <= SOURCE_TOL**2):
                raise SourceCoincidence("evaluation at the source")
            g = -2.0 * d / (4 * np.pi**2 * d2[:, None] ** 2)
        else:
            d = X[:, 1:] - y
            r = np.linalg.norm(d, axis=-1)
            if np.any(r <= 0):
                raise SourceCoincidence("evaluation at the source")
            g = np.zeros(X.shape)
            g[:, 1:] = -KAPPA * d / r[:, None] ** 3
        return self.normalization * g


@dataclass(frozen=True)
class HarmonicFunction:
    """f = constant_term + lambda G, or the pure Green mode f = G when ``lam`` is inf.

    Several sources are allowed; ``lam`` then lists one weight per source.
    The infinite mode is a tag: it never enters arithmetic as a float.
    """

    green: GreenSpec | tuple
    lam: float | tuple = 1.0
    constant_term: float = 1.0

    def __post_init__(self):
        greens = self.green if isinstance(self.green, tuple) else (self.green,)
        lams = self.lam if isinstance(self.lam, tuple) else (self.lam,)
        if len(greens) != len(lams):
            raise HarmonicError("one lambda per source is required")
        infinite = [math.isinf(l) for l in lams]
        if any(infinite) and len(lams) > 1:
            raise HarmonicError("the pure Green mode supports a single source")
        for l in lams:
            if not (l > 0):
                raise HarmonicError("lambda must be positive or +inf")
        object.__setattr__(self, "green", greens)
        object.__setattr__(self, "lam", lams)

    @property
    def infinite(self) -> bool:
        return len(self.lam) == 1 and math.isinf(self.lam[0])

    @property
    def sources(self) -> tuple:
        return self.green

    def value(self, X) -> np.ndarray:
        if self.infinite:
            return self.green[0].value(X)
        out = self.constant_term
        for g, l in zip(self.green, self.lam):
            out = out + l * g.value(X)
        return out

    def gradient(self, X) -> np.ndarray:
        if self.infinite:
            return self.green[0].gradient(X)
        out = 0.0
        for g, l in zip(self.green, self.lam):
            out = out + l * g.gradient(X)
        return out

    def background(self) -> NutConfiguration:
        return self.green[0].background()

    def source_distance(self, X) -> np.ndarray:
        return np.min([g.distance(X) for g in self.green], axis=0)


def f_eval(h: HarmonicFunction, X) -> np.ndarray:
    return h.value(X)


def f_grad(h: HarmonicFunction, X) -> np.ndarray:
    return h.gradient(X)


def caloron(y, lam: float) -> HarmonicFunction:
    return HarmonicFunction(GreenSpec(Space.FLAT_R3xS1, tuple(y)), lam)


def bpst(lam: float, y=(0.0, 0.0, 0.0, 0.0)) -> HarmonicFunction:
    """f = 1 + lam / |x - y|^2 on flat R^4."""
    return HarmonicFunction(GreenSpec(Space.FLAT_R4, tuple(y), normalization=4 * np.pi**2), lam)


def nut_centered(lam: float, s: int = 1) -> HarmonicFunction:
    """f = 1 + lam kappa / r on the collapsed model (exact Taub-NUT for s = 1)."""
    space = Space.TAUB_NUT_AT_NUT if s == 1 else Space.COLLAPSED
    return HarmonicFunction(GreenSpec(space, (0.0, 0.0, 0.0), s=s), lam)


def laplacian(config: NutConfiguration, fun: Callable, X, h: float = 1e-3) -> float:
    """Laplace-Beltrami operator of ``config``'s metric applied to a scalar ``fun(X)``.

    The flux sqrt(g) g^{mu nu} d_nu f is formed with Richardson differences and
    its divergence is taken the same way.
    """
    X = np.asarray(X, dtype=float)

    def flux(Y):
        g = gh_metric(config, Y)
        grad = np.array([fd.derivative(lambda Z: np.asarray(fun(Z)).reshape(()), Y, i, h / 2) for i in range(4)])
        return np.sqrt(np.linalg.det(g)) * np.linalg.solve(g, grad)

    div = sum(fd.derivative(lambda Y: flux(Y)[i], X, i, h) for i in range(4))
    g = gh_metric(config, X)
    return float(div / np.sqrt(np.linalg.det(g)))
