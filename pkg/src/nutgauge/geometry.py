"""Multi-center Taub-NUT geometry in Gibbons-Hawking form.

Coordinates on the 4-space are ordered ``X = (tau, x1, x2, x3)``.  The metric is

    g = V |dx|^2 + V^{-1} (dtau + alpha)^2,   V = c + 1/2 sum_j 1/|x - q_j|,

with d(alpha) = *_3 dV.  The orthonormal coframe is

    xi^0 = V^{-1/2} (dtau + alpha),   xi^i = V^{1/2} dx^i,

and the dual frame is xi_0 = V^{1/2} d/dtau, xi_i = V^{-1/2} (d/dx^i - alpha_i d/dtau).

Orientation: 2-forms are dualized with respect to ``ORIENTATION * xi^0123``.
With ``ORIENTATION = -1`` the hyper-Kahler forms (xi^01 - xi^23 and cyclic)
are self-dual, W+ vanishes and the conformally rescaled connections built in
:mod:`nutgauge.gauge` are anti-self-dual.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import fd
from .errors import (
    BudgetExceeded,
    DegenerateFrame,
    EvaluationAtNut,
    GeometryError,
    OnDiracString,
    StepTooLarge,
)

ORIENTATION = -1
NUT_TOL = 1e-12
STRING_TOL = 1e-12
TWO_PI = 2.0 * np.pi

_LEVI = np.zeros((4, 4, 4, 4))
for _p in itertools.permutations(range(4)):
    _LEVI[_p] = np.linalg.det(np.eye(4)[list(_p)])


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class NutConfiguration:
    """NUT positions ``points`` (shape (s, 3)) and asymptotic constant ``c``.

    ``s = 0`` is allowed and gives flat R^3 x S^1.  ``charges`` defaults to all
    ones; a single center of charge s is the collapsed model (an orbifold at
    the center when s > 1).
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    c: float = 1.0
    charges: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise GeometryError("NUT coordinates must be finite")
        if not (np.isfinite(self.c) and self.c > 0):
            raise GeometryError(f"c must be positive, got {self.c}")
        for i in range(len(pts)):
            for j in range(i):
                if np.linalg.norm(pts[i] - pts[j]) <= NUT_TOL:
                    raise GeometryError(f"NUT points {j} and {i} coincide")
        m = np.ones(len(pts)) if self.charges is None else np.asarray(self.charges, dtype=float).reshape(-1)
        if m.shape != (len(pts),) or np.any(m <= 0):
            raise GeometryError("charges must be positive, one per NUT")
        pts.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "charges", m)
        object.__setattr__(self, "c", float(self.c))

    @property
    def s(self) -> int:
        return self.points.shape[0]

    @property
    def total_charge(self) -> float:
        return float(np.sum(self.charges))

    def to_dict(self) -> dict:
        d = {"c": self.c, "nuts": self.points.tolist()}
        if np.any(self.charges != 1.0):
            d["charges"] = self.charges.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "NutConfiguration":
        pts = np.asarray(d.get("nuts", []), dtype=float).reshape(-1, 3)
        return cls(points=pts, c=d.get("c", 1.0), charges=d.get("charges"))

    @classmethod
    def from_json(cls, text: str) -> "NutConfiguration":
        return cls.from_dict(json.loads(text))

    @classmethod
    def taub_nut(cls) -> "NutConfiguration":
        return cls(points=np.zeros((1, 3)))

    @classmethod
    def collapsed(cls, s: int) -> "NutConfiguration":
        """V = 1 + s/(2|x|): the collapsed single-center model in Gibbons-Hawking form."""
        return cls(points=np.zeros((1, 3)), charges=[float(s)])

    @classmethod
    def flat(cls) -> "NutConfiguration":
        return cls(points=np.zeros((0, 3)))

    @classmethod
    def random(cls, s: int, rng: np.random.Generator, scale: float = 2.0, min_sep: float = 0.5):
        pts: list[np.ndarray] = []
        while len(pts) < s:
            q = rng.uniform(-scale, scale, 3)
            if all(np.linalg.norm(q - p) > min_sep for p in pts):
                pts.append(q)
        return cls(points=np.array(pts).reshape(-1, 3))

    def __repr__(self):
        extra = "" if np.all(self.charges == 1.0) else f", charges={self.charges.tolist()}"
        return f"NutConfiguration(s={self.s}, c={self.c}, points={self.points.tolist()}{extra})"


@dataclass(frozen=True)
class ChartPoint:
    x: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(3)
        object.__setattr__(self, "x", x)
        t = float(np.mod(self.tau, TWO_PI))
        object.__setattr__(self, "tau", 0.0 if t >= TWO_PI else t)

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([[self.tau], self.x])

    @classmethod
    def from_coords(cls, X) -> "ChartPoint":
        X = np.asarray(X, dtype=float)
        return cls(x=X[1:4], tau=X[0])


@dataclass(frozen=True)
class CollapsedChartPoint:
    """Point (r, tau, phi, theta) of the collapsed single-center model."""

    r: float
    tau: float = 0.0
    phi: float = 0.0
    theta: float = np.pi / 2

    def __post_init__(self):
        if not self.r > 0:
            raise GeometryError("collapsed chart needs r > 0")
        if not (0.0 <= self.theta < np.pi):
            raise GeometryError("theta must lie in [0, pi)")

    def validate(self, s: int):
        if not (0.0 <= self.tau < 4 * np.pi / s):
            raise GeometryError(f"tau must lie in [0, 4pi/{s})")
        if not (0.0 <= self.phi < TWO_PI):
            raise GeometryError("phi must lie in [0, 2pi)")

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.r, self.tau, self.phi, self.theta])


@dataclass(frozen=True)
class FrameData:
    V: float
    alpha: np.ndarray          # (3,)
    coframe: np.ndarray        # (4, 4): row a = xi^a in (tau, x1, x2, x3) components
    frame: np.ndarray          # (4, 4): row a = xi_a
    metric: np.ndarray         # (4, 4)
    volume_density: float


@dataclass(frozen=True)
class ConnectionMatrix:
    """Levi-Civita connection forms in the orthonormal gauge.

    ``omega[a, b, c]`` is omega^a_b evaluated on xi_c.
    """

    omega: np.ndarray
    cartan_residual: float


@dataclass(frozen=True)
class CurvatureDiagnostics:
    scalar_curvature: float
    weyl_plus_norm: float
    weyl_minus_norm: float
    ricci_norm: float
    riemann_norm: float
    error_estimate: float


# ---------------------------------------------------------------------------
# potential and monopole form


def _offsets(config: NutConfiguration, x) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(x, dtype=float)[None, :] - config.points
    r = np.linalg.norm(d, axis=1)
    if np.any(r <= NUT_TOL * max(1.0, float(np.max(np.abs(x))))):
        raise EvaluationAtNut(f"point {np.asarray(x).tolist()} is a NUT")
    return d, r


def potential(config: NutConfiguration, x) -> float:
    """V(x) = c + 1/2 sum 1/|x - q_j|."""
    d, r = _offsets(config, x)
    return config.c + 0.5 * float(np.sum(config.charges / r))


def potential_gradient(config: NutConfiguration, x) -> np.ndarray:
    d, r = _offsets(config, x)
    return -0.5 * np.sum(config.charges[:, None] * d / r[:, None] ** 3, axis=0)


def _string_check(d, r):
    w = r * (r + d[:, 2])
    if np.any(w <= STRING_TOL * r * r):
        raise OnDiracString("point lies on a south-pointing Dirac string")
    return w


def monopole_potential(config: NutConfiguration, x) -> np.ndarray:
    """alpha(x) as a covector, each center contributing -(dx dy - dy dx)/(2 r (r + dz)).

    For one center this is 1/2 (cos(theta) - 1) dphi, which is smooth except on
    the ray pointing in -e3 from the center.
    """
    d, r = _offsets(config, x)
    if config.s == 0:
        return np.zeros(3)
    w = _string_check(d, r)
    m = config.charges
    ax = 0.5 * np.sum(m * d[:, 1] / w)
    ay = -0.5 * np.sum(m * d[:, 0] / w)
    return np.array([ax, ay, 0.0])


def monopole_jacobian(config: NutConfiguration, x) -> np.ndarray:
    """J[k, i] = d alpha_i / d x^k."""
    d, r = _offsets(config, x)
    J = np.zeros((3, 3))
    if config.s == 0:
        return J
    w = _string_check(d, r)
    e = np.eye(3)
    for mj, dj, rj, wj in zip(config.charges, d, r, w):
        dw = dj * (rj + dj[2]) / rj + dj
        dw[2] += rj
        J[:, 0] += 0.5 * mj * (e[:, 1] / wj - dj[1] * dw / wj**2)
        J[:, 1] += -0.5 * mj * (e[:, 0] / wj - dj[0] * dw / wj**2)
    return J


def monopole_residual(config: NutConfiguration, x, h: float | None = None) -> np.ndarray:
    """Components of d(alpha) - *_3 dV on (dx2^dx3, dx3^dx1, dx1^dx2).

    With ``h`` the exterior derivative of alpha is taken by Richardson
    extrapolated central differences instead of the closed-form Jacobian.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        J = monopole_jacobian(config, x)
    else:
        J = fd.jacobian(lambda y: monopole_potential(config, y), x, h)
    curl = np.array([J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]])
    return curl - potential_gradient(config, x)


# ---------------------------------------------------------------------------
# frame


def coframe_matrix(config: NutConfiguration, x) -> np.ndarray:
    V = potential(config, x)
    a = monopole_potential(config, x)
    E = np.zeros((4, 4))
    E[0, 0] = 1.0
    E[0, 1:] = a
    E[0] /= np.sqrt(V)
    E[1:, 1:] = np.sqrt(V) * np.eye(3)
    return E


def frame_matrix(config: NutConfiguration, x) -> np.ndarray:
    V = potential(config, x)
    a = monopole_potential(config, x)
    F = np.zeros((4, 4))
    F[0, 0] = np.sqrt(V)
    F[1:, 0] = -a / np.sqrt(V)
    F[1:, 1:] = np.eye(3) / np.sqrt(V)
    return F


def coframe_derivatives(config: NutConfiguration, x) -> np.ndarray:
    """dE[mu, a, nu] = d_mu xi^a_nu with closed-form partials (d_tau = 0)."""
    V = potential(config, x)
    gV = potential_gradient(config, x)
    a = monopole_potential(config, x)
    J = monopole_jacobian(config, x)
    dE = np.zeros((4, 4, 4))
    row0 = np.concatenate([[1.0], a])
    for k in range(3):
        dE[k + 1, 0] = -0.5 * V**-1.5 * gV[k] * row0
        dE[k + 1, 0, 1:] += J[k] / np.sqrt(V)
        dE[k + 1, 1:, 1:] = 0.5 * gV[k] / np.sqrt(V) * np.eye(3)
    return dE


def frame_at(config: NutConfiguration, p: ChartPoint) -> FrameData:
    x = p.x
    V = potential(config, x)
    alpha = monopole_potential(config, x)
    E = coframe_matrix(config, x)
    if abs(np.linalg.det(E)) < 1e-300:
        raise DegenerateFrame("coframe is singular")
    F = frame_matrix(config, x)
    g = E.T @ E
    return FrameData(V=V, alpha=alpha, coframe=E, frame=F, metric=g, volume_density=float(np.sqrt(np.linalg.det(g))))


def metric(config: NutConfiguration, X) -> np.ndarray:
    E = coframe_matrix(config, np.asarray(X)[1:4])
    return E.T @ E


# ---------------------------------------------------------------------------
# connection


def _exterior_coframe(dE: np.ndarray) -> np.ndarray:
    """dxi[a, mu, nu] = d_mu xi^a_nu - d_nu xi^a_mu."""
    t = np.transpose(dE, (1, 0, 2))
    return t - np.transpose(t, (0, 2, 1))


def levi_civita(config: NutConfiguration, p: ChartPoint, h: float | None = None) -> ConnectionMatrix:
    """Solve Cartan's first structure equation d xi^a + omega^a_b ^ xi^b = 0.

    Closed-form partials of V and alpha are used unless a step ``h`` is given,
    in which case the coframe is differentiated by finite differences.
    """
    x = p.x
    E = coframe_matrix(config, x)
    if abs(np.linalg.det(E)) < 1e-300:
        raise DegenerateFrame("coframe is singular")
    F = frame_matrix(config, x)
    if h is None:
        dE = coframe_derivatives(config, x)
    else:
        dE = np.zeros((4, 4, 4))
        dE[1:] = fd.jacobian(lambda y: coframe_matrix(config, y), x, h)
    dxi = _exterior_coframe(dE)
    T = np.einsum("amn,cm,dn->acd", dxi, F, F)
    omega = 0.5 * (T + np.transpose(T, (2, 0, 1)) - np.transpose(T, (1, 2, 0)))
    # residual of d xi^a + omega^a_b ^ xi^b evaluated on (xi_c, xi_d)
    wedge = np.transpose(omega, (0, 2, 1)) - omega
    res = float(np.max(np.abs(T + wedge))) if T.size else 0.0
    return ConnectionMatrix(omega=omega, cartan_residual=res)


def rescaled_connection(conn: ConnectionMatrix, dlogf_frame: np.ndarray) -> np.ndarray:
    """Connection of f^2 g in the frame f xi^a, components on xi_c.

    omega~^a_b = omega^a_b + v_a xi^b - v_b xi^a with v_a = (d log f)(xi_a).
    """
    v = np.asarray(dlogf_frame, dtype=float)
    I = np.eye(4)
    extra = v[:, None, None] * I[None, :, :] - v[None, :, None] * I[:, None, :]
    return conn.omega + extra


# ---------------------------------------------------------------------------
# curvature


def _christoffel(config: NutConfiguration, X) -> np.ndarray:
    x = np.asarray(X, dtype=float)[1:4]
    E = coframe_matrix(config, x)
    dE = coframe_derivatives(config, x)
    g = E.T @ E
    dg = np.einsum("kam,an->kmn", dE, E)
    dg = dg + np.transpose(dg, (0, 2, 1))
    ginv = np.linalg.inv(g)
    # Gamma[l, m, n] = 1/2 g^{ls} (d_m g_sn + d_n g_sm - d_s g_mn)
    t = np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg
    return 0.5 * np.einsum("ls,smn->lmn", ginv, t)


def riemann_frame(config: NutConfiguration, p: ChartPoint, h: float = 1e-2, with_error: bool = False):
    """Frame components R_{abcd} from Richardson differences of the Christoffel symbols.

    The error estimate is the change of the extrapolated tensor between steps
    2h and h.
    """
    X = p.coords
    G = _christoffel(config, X)
    E = coframe_matrix(config, p.x)
    F = frame_matrix(config, p.x)

    def assemble(step):
        dG = fd.jacobian(lambda Y: _christoffel(config, Y), X, step)
        # R^r_{s m n} = d_m G^r_{n s} - d_n G^r_{m s} + G^r_{m l} G^l_{n s} - G^r_{n l} G^l_{m s}
        dterm = np.einsum("mrns->rsmn", dG)
        R = dterm - np.transpose(dterm, (0, 1, 3, 2))
        GG = np.einsum("rml,lns->rsmn", G, G)
        R = R + GG - np.transpose(GG, (0, 1, 3, 2))
        return np.einsum("ar,rsmn,bs,cm,dn->abcd", E, R, F, F, F)

    Rf = assemble(h)
    if with_error:
        return Rf, float(np.max(np.abs(Rf - assemble(2 * h))))
    return Rf


def self_dual_basis(orientation: int = ORIENTATION) -> np.ndarray:
    """Three orthogonal frame 2-forms spanning the self-dual subspace (shape (3, 4, 4))."""
    S = np.zeros((3, 4, 4))
    for A, (b, c) in enumerate([(2, 3), (3, 1), (1, 2)]):
        S[A, 0, A + 1], S[A, A + 1, 0] = 1.0, -1.0
        S[A, b, c], S[A, c, b] = orientation, -orientation
    return S


def hodge_star(F2: np.ndarray, orientation: int = ORIENTATION) -> np.ndarray:
    """Hodge dual of frame 2-form components F2[..., a, b] (last two axes)."""
    return 0.5 * orientation * np.einsum("abcd,...cd->...ab", _LEVI, F2)


def weyl_tensor(R: np.ndarray) -> np.ndarray:
    I = np.eye(4)
    Ric = np.einsum("abad->bd", R)
    s = np.trace(Ric)
    g_ric = (
        np.einsum("ac,bd->abcd", I, Ric)
        - np.einsum("ad,bc->abcd", I, Ric)
        - np.einsum("bc,ad->abcd", I, Ric)
        + np.einsum("bd,ac->abcd", I, Ric)
    )
    gg = np.einsum("ac,bd->abcd", I, I) - np.einsum("ad,bc->abcd", I, I)
    return R - 0.5 * g_ric + s / 6.0 * gg


def default_step(config: NutConfiguration, x, scale: float = 0.02) -> float:
    """Difference step proportional to the distance to the nearest NUT (capped at ``scale``)."""
    if config.s == 0:
        return scale
    return scale * min(1.0, float(np.min(np.linalg.norm(config.points - np.asarray(x), axis=1))))


def curvature_diagnostics(
    config: NutConfiguration, p: ChartPoint, h: float | None = None, tol: float = 1e-3
) -> CurvatureDiagnostics:
    if h is None:
        h = default_step(config, p.x)
    R, err = riemann_frame(config, p, h, with_error=True)
    if err > tol * max(1.0, float(np.max(np.abs(R)))):
        raise StepTooLarge(f"Richardson error {err:.3e} exceeds tolerance at h={h}")
    Ric = np.einsum("abad->bd", R)
    C = weyl_tensor(R)
    Wp = np.einsum("Aab,abcd,Bcd->AB", self_dual_basis(ORIENTATION), C, self_dual_basis(ORIENTATION)) / 4.0
    Wm = np.einsum("Aab,abcd,Bcd->AB", self_dual_basis(-ORIENTATION), C, self_dual_basis(-ORIENTATION)) / 4.0
    return CurvatureDiagnostics(
        scalar_curvature=float(abs(np.trace(Ric))),
        weyl_plus_norm=float(np.linalg.norm(Wp)),
        weyl_minus_norm=float(np.linalg.norm(Wm)),
        ricci_norm=float(np.linalg.norm(Ric)),
        riemann_norm=float(np.linalg.norm(R)),
        error_estimate=err,
    )


# ---------------------------------------------------------------------------
# complex structures


def adapted_triad(e1) -> np.ndarray:
    """Orthonormal (e1, e2, e3) with e3 = e2 x e1.

    This handedness makes xi^0 ^ xi^1' + xi^2' ^ xi^3' self-dual for the
    orientation ``ORIENTATION * xi^0123``.
    """
    e1 = np.asarray(e1, dtype=float)
    n = np.linalg.norm(e1)
    if n == 0:
        raise GeometryError("e1 must be non-zero")
    e1 = e1 / n
    helper = np.eye(3)[int(np.argmin(np.abs(e1)))]
    e2 = helper - (helper @ e1) * e1
    e2 /= np.linalg.norm(e2)
    e3 = ORIENTATION * np.cross(e1, e2)
    return np.array([e1, e2, e3])


def kahler_form(config: NutConfiguration, e1, x) -> np.ndarray:
    """Coordinate components omega[mu, nu] of xi^0 ^ xi^1' + xi^2' ^ xi^3'."""
    T = adapted_triad(e1)
    E = coframe_matrix(config, x)
    Ep = np.vstack([E[0], T @ E[1:]])
    w = np.outer(Ep[0], Ep[1]) + np.outer(Ep[2], Ep[3])
    return w - w.T


def kahler_form_closure(config: NutConfiguration, e1, p: ChartPoint, h: float | None = None) -> float:
    """Max |d omega_{e1}| over coordinate components; zero for every e1."""
    x = p.x
    if h is None:
        T = adapted_triad(e1)
        E = coframe_matrix(config, x)
        dE = coframe_derivatives(config, x)
        Ep = np.vstack([E[0], T @ E[1:]])
        dEp = np.concatenate([dE[:, :1], np.einsum("ij,kjn->kin", T, dE[:, 1:])], axis=1)
        dw = np.zeros((4, 4, 4))
        for a, b in [(0, 1), (2, 3)]:
            dw += np.einsum("km,n->kmn", dEp[:, a], Ep[b]) + np.einsum("m,kn->kmn", Ep[a], dEp[:, b])
        dw = dw - np.transpose(dw, (0, 2, 1))
    else:
        dw = np.zeros((4, 4, 4))
        dw[1:] = fd.jacobian(lambda y: kahler_form(config, e1, y), x, h)
    # (d omega)_{lmn} = d_l w_mn + d_m w_nl + d_n w_lm
    full = dw + np.transpose(dw, (1, 2, 0)) + np.transpose(dw, (2, 0, 1))
    return float(np.max(np.abs(full)))


# ---------------------------------------------------------------------------
# volume growth


def volume_growth(
    config: NutConfiguration,
    x0,
    R_list: Sequence[float],
    n_radial: int = 64,
    n_polar: int = 64,
    n_azimuth: int = 64,
    budget: int = 10_000_000,
) -> list[tuple[float, float]]:
    """Vol({|x - x0| <= R} x S^1) / R^3 on a product Gauss grid.

    The volume form is V dtau d^3x, so the tau-circle contributes 2 pi.
    The grid is centered at x0; the integrable 1/|x - q| singularities of V
    are resolved by refinement.
    """
    R_list = [float(R) for R in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise GeometryError("R values must be increasing")
    npts = n_radial * n_polar * n_azimuth * len(R_list)
    if npts > budget:
        raise BudgetExceeded(f"{npts} quadrature points exceed budget {budget}")
    x0 = np.asarray(x0, dtype=float)
    tr, wr = np.polynomial.legendre.leggauss(n_radial)
    tc, wc = np.polynomial.legendre.leggauss(n_polar)
    phi = np.arange(n_azimuth) * TWO_PI / n_azimuth
    st = np.sqrt(1.0 - tc**2)
    dirs = np.stack(
        [st[:, None] * np.cos(phi)[None, :], st[:, None] * np.sin(phi)[None, :], np.repeat(tc[:, None], n_azimuth, 1)],
        axis=-1,
    ).reshape(-1, 3)
    wdir = np.repeat(wc, n_azimuth) * (TWO_PI / n_azimuth)
    out = []
    for R in R_list:
        r = 0.5 * R * (tr + 1.0)
        w_r = 0.5 * R * wr * r**2
        pts = x0[None, None, :] + r[:, None, None] * dirs[None, :, :]
        Vs = np.full(pts.shape[:2], config.c)
        for m, q in zip(config.charges, config.points):
            Vs += 0.5 * m / np.linalg.norm(pts - q, axis=-1)
        vol = TWO_PI * float(np.einsum("i,j,ij->", w_r, wdir, Vs))
        out.append((R, vol / R**3))
    return out


# ---------------------------------------------------------------------------
# collapsed single-center model in coordinates (r, tau, phi, theta)


def collapsed_potential(s: int, r: float) -> float:
    return 1.0 + s / (2.0 * r)


def collapsed_metric(s: int, p: CollapsedChartPoint) -> np.ndarray:
    V = collapsed_potential(s, p.r)
    W = s * s / (4.0 * V)
    ct, st = np.cos(p.theta), np.sin(p.theta)
    g = np.zeros((4, 4))
    g[0, 0] = V
    g[1, 1] = W
    g[1, 2] = g[2, 1] = W * ct
    g[2, 2] = V * p.r**2 * st**2 + W * ct**2
    g[3, 3] = V * p.r**2
    return g


def collapsed_determinant(s: int, p: CollapsedChartPoint) -> float:
    """Closed form (s^2/4) ((2r + s)/2)^2 r^2 sin^2(theta)."""
    return s * s / 4.0 * ((2 * p.r + s) / 2.0) ** 2 * p.r**2 * np.sin(p.theta) ** 2


# ---------------------------------------------------------------------------
# sampling


def string_clearance(config: NutConfiguration, x) -> float:
    """Smallest distance from x to a NUT or to a south Dirac string."""
    d = np.asarray(x, dtype=float)[None, :] - config.points
    if config.s == 0:
        return np.inf
    r = np.linalg.norm(d, axis=1)
    perp = np.where(d[:, 2] < 0, np.hypot(d[:, 0], d[:, 1]), r)
    return float(np.min(perp))


def sample_points(
    config: NutConfiguration,
    n: int,
    rng: np.random.Generator,
    r_min: float = 0.5,
    r_max: float = 5.0,
    clearance: float = 0.3,
    center=None,
) -> list[ChartPoint]:
    """Random chart points with r_min <= |x - center| <= r_max, kept away from strings."""
    center = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    out: list[ChartPoint] = []
    while len(out) < n:
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        r = rng.uniform(r_min, r_max)
        x = center + r * u
        if string_clearance(config, x) < clearance:
            continue
        out.append(ChartPoint(x=x, tau=rng.uniform(0, TWO_PI)))
    return out


def iter_points(config: NutConfiguration, xs: Iterable) -> list[ChartPoint]:
    return [ChartPoint(x=x) for x in xs]
