"""Anti-self-dual SU(2) connections from conformal rescaling by a harmonic function.

Given a positive harmonic f, the perturbation in the orthonormal gauge is

    a = 1/2 Im( dlog f . xi ),   dlog f = -xi_0(log f) + xi_1(log f) i + xi_2(log f) j + xi_3(log f) k,
                                 xi = xi^0 + xi^1 i + xi^2 j + xi^3 k,

and the background spin connection vanishes in this gauge.  Imaginary
quaternions are stored as real 3-vectors (i, j, k components), so
[p, q] = 2 p x q.

Norms use the Killing normalization |F|^2 = 2 sum_{a<b} |F_ab|^2, for which the
BPST instanton has (1/8 pi^2) int |F|^2 = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientRange,
    NonConvergentQuadrature,
    SourceCoincidence,
    StencilCrossesSingularity,
)
from .geometry import (
    ORIENTATION,
    NutConfiguration,
    coframe_matrix,
    frame_matrix,
    hodge_star,
    string_clearance,
)
from .harmonic import FLAT_GREEN_REGULAR_PART, KAPPA, HarmonicFunction, Space

TWO_PI = 2.0 * np.pi
PAIRS = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)]
ENERGY_UNIT = 8.0 * np.pi**2


def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Quaternion product along the last axis, (real, i, j, k)."""
    p0, pv = p[..., 0], p[..., 1:]
    q0, qv = q[..., 0], q[..., 1:]
    re = p0 * q0 - np.sum(pv * qv, axis=-1)
    im = p0[..., None] * qv + q0[..., None] * pv + np.cross(pv, qv)
    return np.concatenate([re[..., None], im], axis=-1)


_UNITS = np.eye(4)


@dataclass(frozen=True)
class QuaternionOneForm:
    """Im H valued 1-form; ``components[b]`` is the coefficient of xi^b."""

    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.shape[-2:] != (4, 3):
            raise ValueError("components must have shape (..., 4, 3)")
        object.__setattr__(self, "components", c)

    def norm(self) -> np.ndarray:
        return np.sqrt(2.0 * np.sum(self.components**2, axis=(-2, -1)))

    def __add__(self, other: "QuaternionOneForm") -> "QuaternionOneForm":
        return QuaternionOneForm(self.components + other.components)


@dataclass(frozen=True)
class GaugePotential:
    perturbation: QuaternionOneForm
    base: QuaternionOneForm = field(default_factory=lambda: QuaternionOneForm(np.zeros((4, 3))))

    @property
    def total(self) -> QuaternionOneForm:
        return self.base + self.perturbation


@dataclass(frozen=True)
class CurvatureSample:
    F: np.ndarray          # (6, 3) frame components on PAIRS
    asd_residual: float
    density: float         # |F|^2 * volume density
    norm: float            # |F|


# ---------------------------------------------------------------------------
# frames


def _frames(config: NutConfiguration, X: np.ndarray):
    n = X.shape[0]
    if config.s == 0:
        I = np.broadcast_to(np.eye(4), (n, 4, 4))
        return I, I, np.ones(n)
    E = np.empty((n, 4, 4))
    F = np.empty((n, 4, 4))
    for i, Y in enumerate(X):
        E[i] = coframe_matrix(config, Y[1:])
        F[i] = frame_matrix(config, Y[1:])
    return E, F, np.abs(np.linalg.det(E))


def frame_components(dlogf: np.ndarray) -> np.ndarray:
    """a_b = 1/2 Im(q e_b) for q = (-v0, v1, v2, v3); input v (..., 4), output (..., 4, 3)."""
    v = np.asarray(dlogf, dtype=float)
    q = np.concatenate([-v[..., :1], v[..., 1:]], axis=-1)
    return 0.5 * np.stack([qmul(q, _UNITS[b])[..., 1:] for b in range(4)], axis=-2)


def potential_coord(f: HarmonicFunction, config: NutConfiguration, X) -> np.ndarray:
    """Coordinate components a_mu (shape (N, 4, 3)) of the perturbation at points X (N, 4)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    E, F, _ = _frames(config, X)
    v = np.einsum("nam,nm->na", F, f.gradient(X)) / f.value(X)[:, None]
    ab = frame_components(v)
    return np.einsum("nbm,nbk->nmk", E, ab)


def rescale_potential(f: HarmonicFunction, frame, p=None) -> QuaternionOneForm:
    """Perturbation a in the orthonormal gauge at one point.

    ``frame`` is a :class:`~nutgauge.geometry.FrameData`; ``p`` the point as a
    ChartPoint or 4-vector of coordinates.
    """
    X = p.coords if hasattr(p, "coords") else np.asarray(p, dtype=float)
    v = frame.frame @ f.gradient(X)[0] / f.value(X)[0]
    return QuaternionOneForm(frame_components(v))


def dlogf_norm(f: HarmonicFunction, config: NutConfiguration, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _, F, _ = _frames(config, X)
    v = np.einsum("nam,nm->na", F, f.gradient(X)) / f.value(X)[:, None]
    return np.linalg.norm(v, axis=-1)


def potential_norm(f: HarmonicFunction, config: NutConfiguration, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _, F, _ = _frames(config, X)
    v = np.einsum("nam,nm->na", F, f.gradient(X)) / f.value(X)[:, None]
    return QuaternionOneForm(frame_components(v)).norm()


# ---------------------------------------------------------------------------
# curvature


def default_step(f: HarmonicFunction, config: NutConfiguration, X, frac: float = 0.01, cap: float = 2.0) -> np.ndarray:
    """Step proportional to the distance from the nearest source, NUT or Dirac string."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = f.source_distance(X)
    if config.s:
        d = np.minimum(d, [string_clearance(config, Y[1:]) for Y in X])
    return frac * np.minimum(d, cap)


def _field_strength(f, config, X, h):
    """Coordinate F_{mu nu} (N, 4, 4, 3) with Richardson differences of a."""
    n = X.shape[0]
    A = potential_coord(f, config, X)
    dA = np.empty((n, 4, 4, 3))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = 1.0
        st = h[:, None] * e
        d1 = (potential_coord(f, config, X + st) - potential_coord(f, config, X - st)) / (2 * h[:, None, None])
        d2 = (potential_coord(f, config, X + st / 2) - potential_coord(f, config, X - st / 2)) / h[:, None, None]
        dA[:, mu] = (4 * d2 - d1) / 3
    Fc = dA - np.transpose(dA, (0, 2, 1, 3)) + 2.0 * np.cross(A[:, :, None, :], A[:, None, :, :])
    return Fc


def curvature_many(f: HarmonicFunction, config: NutConfiguration, X, h=None) -> dict:
    """Vectorized curvature: frame components, |F|, ASD residual, density."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dist = f.source_distance(X)
    h = default_step(f, config, X) if h is None else np.broadcast_to(np.asarray(h, dtype=float), (X.shape[0],)).copy()
    clear = dist.copy()
    if config.s:
        clear = np.minimum(clear, [string_clearance(config, Y[1:]) for Y in X])
    if np.any(h >= 0.5 * clear):
        raise StencilCrossesSingularity("difference stencil reaches a source, NUT or Dirac string")
    Fc = _field_strength(f, config, X, h)
    _, Fr, vol = _frames(config, X)
    Ff = np.einsum("ncm,ndo,nmok->ncdk", Fr, Fr, Fc)
    Fk = np.moveaxis(Ff, -1, 1)  # (N, 3, 4, 4)
    star = hodge_star(Fk, ORIENTATION)
    nF = np.sqrt(np.sum(Fk**2, axis=(1, 2, 3)))
    asd = np.sqrt(np.sum((star + Fk) ** 2, axis=(1, 2, 3))) / np.where(nF > 0, nF, 1.0)
    asd = np.where(nF > 0, asd, 0.0)
    norm2 = np.sum(Fk**2, axis=(1, 2, 3))  # = 2 sum_{a<b} |F_ab|^2
    comps = np.stack([Ff[:, a, b] for a, b in PAIRS], axis=1)
    return {"F": comps, "asd_residual": asd, "norm2": norm2, "density": norm2 * vol, "volume": vol}


def curvature(f: HarmonicFunction, config: NutConfiguration, p, h=None) -> CurvatureSample:
    X = p.coords if hasattr(p, "coords") else np.asarray(p, dtype=float)
    out = curvature_many(f, config, X[None, :], None if h is None else [h])
    return CurvatureSample(
        F=out["F"][0], asd_residual=float(out["asd_residual"][0]), density=float(out["density"][0]), norm=float(np.sqrt(out["norm2"][0]))
    )


def bpst_density(lam: float, rho) -> np.ndarray:
    """|F|^2 of the BPST model 1 + lam/rho^2: 48 lam^2 / (lam + rho^2)^4."""
    return 48.0 * lam**2 / (lam + np.asarray(rho) ** 2) ** 4


def excised_fraction(L: float, eps: float) -> float:
    """Fraction of one unit of BPST energy inside radius eps for scale L (f ~ 1 + L/d^2)."""
    t = L / (L + eps * eps)
    return 1.0 - 3.0 * t * t + 2.0 * t**3


def local_scale(f: HarmonicFunction) -> list[float]:
    """Model scale L with f ~ const (1 + L/d^2) near each source (d the 4D distance)."""
    out = []
    for g, lam in zip(f.green, f.lam):
        sp = g.space
        if sp is Space.FLAT_R4:
            L0, h0 = g.normalization / (4 * np.pi**2), 0.0
        elif sp is Space.FLAT_R3xS1:
            L0, h0 = g.normalization / (4 * np.pi**2), g.normalization * FLAT_GREEN_REGULAR_PART
        else:
            L0, h0 = 2.0 * KAPPA * g.normalization, 0.0
        if math.isinf(lam):
            out.append(L0 / h0 if h0 > 0 else math.inf)
        else:
            out.append(lam * L0 / (f.constant_term + lam * h0))
    return out


# ---------------------------------------------------------------------------
# energy


@dataclass(frozen=True)
class QuadratureSpec:
    R_max: float = 40.0
    eps: float | None = None      # excision radius (4D distance); default 1e-2 * sqrt(L)
    n_radial: int = 48
    n_polar: int = 24
    n_azimuth: int = 12
    refine: bool = True           # repeat with 1.5x nodes and compare
    tol: float = 5e-3


def _shell_tail(radii: np.ndarray, density: np.ndarray, R: float) -> tuple[float, float]:
    """Fit D(r) = A r^-p on the outer shells and integrate from R to infinity."""
    lr, ld = np.log(radii), np.log(np.maximum(density, 1e-300))
    p, logA = np.polyfit(lr, ld, 1)
    p = -p
    if p <= 1.0:
        raise NonConvergentQuadrature(f"fitted decay exponent {p:.2f} of the energy density is not integrable")
    return float(np.exp(logA) * R ** (1 - p) / (p - 1)), p


def _radial_energy(f, config, spec, kind):
    """Energy for radially symmetric |F|^2: BPST on R^4 or NUT-centered on the collapsed model."""
    L = local_scale(f)[0]
    eps = spec.eps if spec.eps is not None else (1e-2 * math.sqrt(L) if math.isfinite(L) else 0.0)

    def run(nr):
        u, w = np.polynomial.legendre.leggauss(nr)
        if kind == "R4":
            a, b = eps, spec.R_max
        else:
            a, b = math.sqrt(eps * eps / 2), math.sqrt(spec.R_max)
        if a > 0:
            span = math.log(b / a)
            s_ = a * np.exp(0.5 * span * (u + 1))
            ws = 0.5 * span * w * s_
        else:
            s_ = 0.5 * (b - a) * (u + 1) + a
            ws = 0.5 * (b - a) * w
        y = np.asarray(f.green[0].y)
        if kind == "R4":
            n = np.array([0.3, -0.5, 0.4, 0.7])
            X = y + s_[:, None] * n / np.linalg.norm(n)
            D = curvature_many(f, config, X)["norm2"]
            dens = D * 2 * np.pi**2 * s_**3 / ENERGY_UNIT
            body = float(np.sum(ws * dens))
        else:
            r = s_**2
            n = np.array([0.48, 0.6, 0.64])
            X = np.concatenate([np.full((nr, 1), 0.7), y + r[:, None] * n[None, :]], axis=1)
            out = curvature_many(f, config, X)
            V = 1.0 + config.total_charge / (2 * r)
            # int over tau in [0, 2 pi) and the 2-sphere, divided by 8 pi^2
            dens = out["norm2"] * r * r * V
            body = float(np.sum(ws * dens * 2 * s_))
        return body

    body = run(spec.n_radial)
    if spec.refine:
        body2 = run(int(1.5 * spec.n_radial))
        if abs(body2 - body) > spec.tol:
            raise NonConvergentQuadrature(f"radial quadrature changed by {abs(body2 - body):.2e} on refinement")
        body = body2
    # tail from shells near R_max
    R = spec.R_max
    shells = np.linspace(0.6 * R, R, 6)
    y = np.asarray(f.green[0].y)
    if kind == "R4":
        X = y + shells[:, None] * np.array([0.5, 0.5, 0.5, 0.5])
        D = curvature_many(f, config, X)["norm2"] * 2 * np.pi**2 * shells**3 / ENERGY_UNIT
    else:
        X = np.concatenate([np.full((6, 1), 0.7), y + shells[:, None] * np.array([0.48, 0.6, 0.64])], axis=1)
        D = curvature_many(f, config, X)["norm2"] * shells**2 * (1 + config.total_charge / (2 * shells))
    tail, _ = _shell_tail(shells, D, R)
    exc = excised_fraction(L, eps) if eps > 0 and math.isfinite(L) else 0.0
    return body, tail, exc


def _collinear_axis(points: np.ndarray):
    c = points.mean(axis=0)
    if len(points) == 1:
        return c, np.array([0.0, 0.0, 1.0])
    u, s, vt = np.linalg.svd(points - c)
    axis = vt[0]
    resid = np.linalg.norm((points - c) - np.outer((points - c) @ axis, axis), axis=1)
    if np.any(resid > 1e-9 * max(1.0, np.abs(points).max())):
        raise NotImplementedError("energy quadrature supports sources on a common line in R^3")
    return c, axis


def _flat_caloron_energy(f, spec):
    """Axisymmetric quadrature on R^3 x S^1 in 3D polar cells around each source.

    With the sources on a line, |F|^2 depends on (z, rho_c, tau), and the
    volume element is 2 pi rho_c dz drho_c dtau.  The half-space rho_c >= 0 is
    split into slabs between consecutive sources; each slab is integrated in
    polar coordinates (rho, chi, psi) centered on its source, clipped to
    |tau - tau_i| <= pi and to the ball |x - center| <= R_max.
    """
    config = NutConfiguration.flat()
    ys = np.array([g.y for g in f.green])
    center, axis = _collinear_axis(ys[:, 1:])
    perp = np.linalg.svd(np.vstack([axis, np.zeros((2, 3))]))[2][1:]
    e_c = perp[0]
    zs = (ys[:, 1:] - center) @ axis
    order = np.argsort(zs)
    R = spec.R_max
    Ls = local_scale(f)
    eps_list = []
    for L in Ls:
        eps_list.append(spec.eps if spec.eps is not None else (1e-2 * math.sqrt(L) if math.isfinite(L) else 1e-3))

    def run(nr, nc, npsi):
        tr, wr = np.polynomial.legendre.leggauss(nr)
        tc, wc = np.polynomial.legendre.leggauss(nc)
        tp, wp = np.polynomial.legendre.leggauss(npsi)
        chi = 0.5 * np.pi * (tc + 1)
        wchi = 0.5 * np.pi * wc
        psi = 0.5 * np.pi * (tp + 1)
        wpsi = 0.5 * np.pi * wp
        total = 0.0
        for rank, i in enumerate(order):
            zi = zs[i]
            lo = -np.inf if rank == 0 else 0.5 * (zs[order[rank - 1]] + zi)
            hi = np.inf if rank == len(order) - 1 else 0.5 * (zs[order[rank + 1]] + zi)
            C, P = np.meshgrid(chi, psi, indexing="ij")
            WC, WP = np.meshgrid(wchi, wpsi, indexing="ij")
            nb, nz, nc_ = np.cos(C), np.sin(C) * np.cos(P), np.sin(C) * np.sin(P)
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.where(np.abs(nb) > 1e-15, np.pi / np.abs(nb), np.inf)
                lim = np.minimum(lim, np.where(nz > 1e-15, (hi - zi) / nz, np.inf))
                lim = np.minimum(lim, np.where(nz < -1e-15, (lo - zi) / nz, np.inf))
            # ball |(zi + t nz, t nc)| <= R in the (z, rho_c) plane
            bq = zi * nz
            disc = bq * bq - (zi * zi - R * R) * (nz * nz + nc_ * nc_)
            tball = (-bq + np.sqrt(np.maximum(disc, 0))) / np.maximum(nz * nz + nc_ * nc_, 1e-300)
            lim = np.minimum(lim, tball)
            eps = eps_list[i]
            # logarithmic radial nodes resolve cores of any scale sqrt(L) >> eps
            span = np.log(np.maximum(lim[..., None], 2 * eps) / eps)
            t = eps * np.exp(0.5 * span * (tr + 1))
            wt = 0.5 * span * wr * t
            zc = zi + t * nz[..., None]
            rc = t * nc_[..., None]
            bc = t * nb[..., None]
            pts = np.zeros(t.shape + (4,))
            pts[..., 0] = ys[i, 0] + bc
            pts[..., 1:] = center + zc[..., None] * axis + rc[..., None] * e_c
            flat = pts.reshape(-1, 4)
            D = curvature_many(f, config, flat)["norm2"].reshape(t.shape)
            jac = t**2 * np.sin(C)[..., None] * 2 * np.pi * rc
            total += float(np.sum(WC[..., None] * WP[..., None] * wt * jac * D))
        return total / ENERGY_UNIT

    body = run(spec.n_radial, spec.n_polar, spec.n_azimuth)
    if spec.refine:
        body2 = run(int(1.5 * spec.n_radial), int(1.5 * spec.n_polar), int(1.5 * spec.n_azimuth))
        if abs(body2 - body) > spec.tol * max(1.0, abs(body2)):
            raise NonConvergentQuadrature(f"caloron quadrature changed by {abs(body2 - body):.2e} on refinement")
        body = body2
    # tail: shell densities D(r) = int over |x - center| = r and tau, fitted to A r^-p
    shells = np.linspace(0.6 * R, R, 6)
    D = [shell_density(f, config, center, r, ys[0, 0]) for r in shells]
    tail, _ = _shell_tail(shells, np.array(D), R)
    exc = sum(excised_fraction(L, e) for L, e in zip(Ls, eps_list) if math.isfinite(L))
    return body, tail, exc


def shell_density(f, config, center, r, tau0=0.0, n: int = 12) -> float:
    """(1/8 pi^2) times the integral of |F|^2 over {|x - center| = r} x S^1 (per unit r)."""
    tc, wc = np.polynomial.legendre.leggauss(n)
    phi = np.arange(n) * TWO_PI / n
    taus = tau0 + np.arange(n) * TWO_PI / n
    ct, ph, ta = np.meshgrid(tc, phi, taus, indexing="ij")
    st = np.sqrt(1 - ct**2)
    X = np.stack([ta, center[0] + r * st * np.cos(ph), center[1] + r * st * np.sin(ph), center[2] + r * ct], axis=-1)
    D = curvature_many(f, config, X.reshape(-1, 4))["norm2"].reshape(ct.shape)
    w = wc[:, None, None] * (TWO_PI / n) * (TWO_PI / n)
    return float(np.sum(w * D) * r * r / ENERGY_UNIT)


def energy(f: HarmonicFunction, spec: QuadratureSpec | None = None) -> dict:
    """Energy in units of 8 pi^2 with tail and excision estimates.

    ``energy_units`` = quadrature over {eps <= d, r <= R_max} + tail + excision,
    where the excised ball is filled in with the BPST model of the same scale.
    """
    spec = spec or QuadratureSpec()
    config = f.background()
    space = f.green[0].space
    if space is Space.FLAT_R4:
        body, tail, exc = _radial_energy(f, config, spec, "R4")
    elif space is Space.FLAT_R3xS1:
        body, tail, exc = _flat_caloron_energy(f, spec)
    else:
        body, tail, exc = _radial_energy(f, config, spec, "NUT")
    return {"energy_units": body + tail + exc, "quadrature": body, "tail_estimate": tail, "excision_estimate": exc}


# ---------------------------------------------------------------------------
# decay and boundedness


def _directions(n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.normal(size=(n, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def decay_report(f: HarmonicFunction, R_list, n_dir: int = 16, seed: int = 0) -> dict:
    """Log-log fits of sup_{r=R} |a| and of the L^2 norm of F outside r = R.

    r is the distance in R^3 from the (first) source.  The rapid decay
    functional sqrt(R) ||F||_{L^2(r > R)} is reported per radius.
    """
    R = np.asarray(R_list, dtype=float)
    if R.size < 3 or np.any(np.diff(R) <= 0):
        raise InsufficientRange("need at least three increasing radii")
    config = f.background()
    rng = np.random.default_rng(seed)
    dirs = _directions(n_dir, rng)
    y = np.asarray(f.green[0].y)
    yx = y[-3:]
    tau0 = y[0] if len(y) == 4 else 0.0
    sup_a, l2 = [], []
    Rgrid_max = R[-1] * 4
    for Ri in R:
        X = np.concatenate([tau0 + rng.uniform(0, TWO_PI, (n_dir, 1)), yx + Ri * dirs], axis=1)
        if config.s:
            X = X[[string_clearance(config, Z[1:]) > 0.05 * Ri for Z in X]]
        sup_a.append(float(np.max(potential_norm(f, config, X))))
        rr = np.geomspace(Ri, Rgrid_max, 10)
        D = np.array([shell_density(f, config, yx, r, tau0, n=8) if config.s == 0 else _nut_shell(f, config, r) for r in rr])
        body = float(np.trapezoid(D, rr))
        tail, _ = _shell_tail(rr[-4:], D[-4:], Rgrid_max)
        l2.append(math.sqrt(ENERGY_UNIT * (body + tail)))
    sup_a, l2 = np.array(sup_a), np.array(l2)
    pa = -np.polyfit(np.log(R), np.log(sup_a), 1)[0]
    pF = -np.polyfit(np.log(R), np.log(l2), 1)[0]
    functional = np.sqrt(R) * l2
    return {
        "p_a": float(pa),
        "p_F": float(pF),
        "sup_a": sup_a.tolist(),
        "l2_outside": l2.tolist(),
        "rapid_decay_functional": functional.tolist(),
        "rapid_decay": bool(np.all(np.diff(functional) < 0)),
    }


def _nut_shell(f, config, r) -> float:
    """Shell density for tau-independent, rotationally symmetric f on a Gibbons-Hawking space."""
    X = np.array([[0.7, 0.48 * r, 0.6 * r, 0.64 * r]])
    D = curvature_many(f, config, X)["norm2"][0]
    V = config.c + 0.5 * config.total_charge / r
    return float(D * r * r * V)  # (1/8 pi^2) * 2 pi * 4 pi r^2 V |F|^2


def boundedness_at_source(f: HarmonicFunction, eps_list, n: int = 64, seed: int = 0) -> np.ndarray:
    """Max |F| over random points at 4D distance eps from the (first) source."""
    config = f.background()
    rng = np.random.default_rng(seed)
    g = f.green[0]
    y = np.asarray(g.y)
    out = []
    for eps in eps_list:
        if g.space in (Space.FLAT_R4, Space.FLAT_R3xS1):
            u = rng.normal(size=(n, 4))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            X = y + eps * u
        else:
            r = eps * eps / 2.0
            d = _directions(4 * n, rng)
            d = d[d[:, 2] > -0.8][:n]
            X = np.concatenate([rng.uniform(0, TWO_PI, (len(d), 1)), y + r * d], axis=1)
        out.append(float(np.max(np.sqrt(curvature_many(f, config, X)["norm2"]))))
    return np.array(out)


def holonomy_proxy(f: HarmonicFunction, R: float, n_dir: int = 16, seed: int = 0) -> float:
    """Ratio sup_{r=R}|a| * R : a computable shadow of the weak holonomy condition (reported only)."""
    config = f.background()
    rng = np.random.default_rng(seed)
    y = np.asarray(f.green[0].y)
    X = np.concatenate([rng.uniform(0, TWO_PI, (n_dir, 1)), y[-3:] + R * _directions(n_dir, rng)], axis=1)
    if config.s:
        X = X[[string_clearance(config, Z[1:]) > 0.05 * R for Z in X]]
    return float(np.max(potential_norm(f, config, X)) * R)


def qconj(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=float) * np.array([1.0, -1.0, -1.0, -1.0])


def bpst_regular_curvature(lam: float, x) -> np.ndarray:
    """lam (dx ^ dx-bar)_{mu nu} / (lam + |x|^2)^2 as imaginary quaternions, shape (4, 4, 3)."""
    x = np.asarray(x, dtype=float)
    E = np.eye(4)
    out = np.zeros((4, 4, 3))
    for m in range(4):
        for n in range(4):
            out[m, n] = (qmul(E[m], qconj(E[n])) - qmul(E[n], qconj(E[m])))[1:]
    return lam * out / (lam + x @ x) ** 2


def bpst_singular_curvature(lam: float, x) -> np.ndarray:
    """Curvature of the rescaled potential of 1 + lam/|x|^2: the regular one conjugated by x-bar/|x|."""
    x = np.asarray(x, dtype=float)
    u = qconj(x / np.linalg.norm(x))
    F = bpst_regular_curvature(lam, x)
    pure = np.concatenate([np.zeros(F.shape[:-1] + (1,)), F], axis=-1)
    return qmul(qmul(np.broadcast_to(u, pure.shape), pure), np.broadcast_to(qconj(u), pure.shape))[..., 1:]


def coordinate_matrix(F6: np.ndarray) -> np.ndarray:
    """Antisymmetric (4, 4, 3) array from the six PAIRS components."""
    out = np.zeros(F6.shape[:-2] + (4, 4, 3))
    for k, (i, j) in enumerate(PAIRS):
        out[..., i, j, :] = F6[..., k, :]
        out[..., j, i, :] = -F6[..., k, :]
    return out
