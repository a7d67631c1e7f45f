from __future__ import annotations

import cmath
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nutgauge import geometry as geo
from nutgauge import twistor as T
from nutgauge.errors import ChartMismatch, DegenerateDirection, NonGenericConfiguration, RealityViolation

real = st.floats(-3, 3, allow_nan=False)


def random_sections(rng, s, n):
    cfg = geo.NutConfiguration.random(s, rng)
    out = []
    while len(out) < n:
        x = rng.normal(size=3) * 2
        try:
            out.append(T.RealTwistorSection.from_point(x, cfg.points, phase=rng.uniform(0, 2 * np.pi)))
        except DegenerateDirection:
            continue
    return out


# --- sections and the surface --------------------------------------------------------


@given(real, real, real, real, real, real, real)
def test_quadratic_sections_are_real(x1, x2, x3, u, v, w, q):
    z = T.QuadraticSection.from_point([x1, x2, x3])
    assert z.is_real()
    a, b = complex(u, v), complex(w, q)
    # the real structure on H^2 sends a real section to minus itself
    assert T.real_structure(z, 2)(a, b) == pytest.approx(-z(a, b), abs=1e-9)
    assert np.allclose(T.QuadraticSection.from_point(z.point).point, z.point)


def test_surface_examples():
    p0 = T.QuadraticSection(0, 0)
    a, b = T.normalize(0.3 + 0.1j, 1.0)
    assert T.surface_eval([p0], 2, 3, 6, a, b) == 0
    p1 = T.QuadraticSection(1 + 2j, -0.5)
    assert abs(T.surface_eval([p1], 0, 0, p1(a, b), a, b)) < 1e-15


def test_circle_action_preserves_surface(rng):
    nuts = [T.QuadraticSection.from_point(q) for q in rng.normal(size=(3, 3))]
    for _ in range(20):
        a, b = T.random_direction(rng)
        x, y, z = T.surface_point(nuts, a, b, rng)
        x2, y2, z2 = T.circle_action(x, y, z, rng.uniform(0, 2 * np.pi))
        assert abs(T.surface_eval(nuts, x2, y2, z2, a, b)) < 1e-12


def test_roots_examples(rng):
    rho, sigma = T.roots(T.QuadraticSection(1.0, 0.7), T.QuadraticSection(0.0, 0.7))
    assert rho == pytest.approx(-1) and sigma == pytest.approx(1)
    for _ in range(100):
        z = T.QuadraticSection.from_point(rng.normal(size=3))
        p = T.QuadraticSection.from_point(rng.normal(size=3))
        r, s = T.roots(z, p)
        d = z - p
        assert abs(d.alpha * r * s + d.alpha.conjugate()) < 1e-12 * max(1, abs(d.alpha))
        for t in (r, s):
            assert abs(z.affine(t) - p.affine(t)) < 1e-12 * max(1.0, abs(t)) ** 2
    with pytest.raises(DegenerateDirection):
        T.roots(T.QuadraticSection(1.0, 0.3), T.QuadraticSection(1.0, 0.0))


# --- eta^c ----------------------------------------------------------------------------


def test_eta_examples(rng):
    z = T.QuadraticSection(0.4 - 0.3j, 0.2)
    for _ in range(100):
        a, b = T.random_direction(rng)
        assert T.eta_section(z, 0.0, a, b) == 1
        ub = T.eta_section(z, 1.0, a, b, "U_b")
        ua = T.eta_section(z, 1.0, a, b, "U_a")
        assert ua / (T.transition(z(a, b) / b**2, a, b) * ub) == pytest.approx(1.0, abs=1e-12)
        assert T.eta_section(z, 1.0, a, b) * T.eta_section(z, -1.0, a, b) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ChartMismatch):
        T.eta_section(z, 1.0, 1.0, 0.0, "U_b")
    with pytest.raises(ChartMismatch):
        T.eta_section(z, 1.0, 0.0, 1.0, "U_a")
    with pytest.raises(ChartMismatch):
        T.eta_section(z, 1.0, 1.0, 1.0, "U_c")


# --- real lines ---------------------------------------------------------------------------


def test_reality_modulus_example():
    zeta = T.QuadraticSection(1.0, 0.0)
    nut = T.QuadraticSection(0.0, 0.0)
    assert T.reality_modulus(zeta, [nut]) == pytest.approx(1.0)
    assert T.reality_modulus(zeta, [nut], printed=True) == pytest.approx(1.0)


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_factorization_and_tau_c(rng, s):
    for sec in random_sections(rng, s, 50):
        line = T.real_line(sec)
        # |A|^2 |B|^2 = |prod (alpha - alpha_j)|^2
        lead = abs(T.leading_coefficient(sec.zeta, sec.nuts)) ** 2
        assert abs(line.A) ** 2 * abs(line.B) ** 2 == pytest.approx(lead, rel=1e-12)
        # the printed modulus is the one of B
        assert abs(line.B) ** 2 == pytest.approx(T.reality_modulus(sec.zeta, sec.nuts, printed=True), rel=1e-10)
        worst = worst_tau = 0.0
        for _ in range(100):
            a, b = T.random_direction(rng)
            worst = max(worst, line.factorization_residual(a, b))
            worst_tau = max(worst_tau, T.tau_c_defect(line, a, b))
        assert worst < 1e-9
        assert worst_tau < 1e-9


def test_printed_reality_constraint_breaks_tau_c(rng):
    cfg = geo.NutConfiguration.random(2, rng)
    sec = T.RealTwistorSection.from_point(rng.normal(size=3), cfg.points)
    printed = math.sqrt(T.reality_modulus(sec.zeta, sec.nuts, printed=True))
    bad = T.RealTwistorSection(sec.zeta, printed, sec.nuts)
    assert bad.reality_defect() > 1e-3
    with pytest.raises(RealityViolation):
        T.real_line(bad)
    line = T.real_line(sec)
    forced = dataclasses.replace(line, A=printed + 0j, B=T.leading_coefficient(sec.zeta, sec.nuts) / printed)
    a, b = T.random_direction(rng)
    assert T.tau_c_defect(forced, a, b) > 1e-3


@pytest.mark.parametrize("swap,real", [((), True), ((0,), False), ((0, 1), True), ((0, 1, 2), False)])
def test_root_swaps_and_reality(rng, swap, real):
    cfg = geo.NutConfiguration.random(3, rng)
    sec = T.RealTwistorSection.from_point(rng.normal(size=3), cfg.points, phase=0.4)
    line = T.real_line(sec, swap=swap)
    a, b = T.random_direction(rng)
    assert line.factorization_residual(a, b) < 1e-9
    assert (T.tau_c_defect(line, a, b) < 1e-9) == real


def test_section_validation():
    with pytest.raises(RealityViolation):
        T.RealTwistorSection(T.QuadraticSection(1, 0), 0.0, (T.QuadraticSection(0, 0),))
    with pytest.raises(DegenerateDirection):
        T.RealTwistorSection.from_point([1.0, 0.0, 3.0], [[1.0, 0.0, 0.0]])
    sec = T.RealTwistorSection.from_point([1.0, 0.0, 0.0], [[0.0, 0.0, 0.0]])
    assert sec.s == 1 and abs(sec.A) == pytest.approx(1.0)
    assert sec.to_dict()["nuts"] == [[0.0, 0.0, 0.0]]


# --- theta and the gluing matrix ---------------------------------------------------------


@pytest.mark.parametrize("s", [1, 2, 3])
def test_theta_exact_division(rng, s):
    cfg = geo.NutConfiguration.random(s, rng)
    zeta = T.QuadraticSection.from_point(np.round(rng.normal(size=3), 3))
    nuts = [T.QuadraticSection.from_point(np.round(q, 3)) for q in cfg.points]
    theta, rem = T.theta_exact(zeta, nuts)
    assert rem == 0
    a, b = T.random_direction(rng)
    z = complex(*rng.normal(size=2))
    assert T.theta_exact_matches(zeta, nuts, z, a, b) < 1e-12


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_gluing_identities_and_determinant(rng, s):
    for sec in random_sections(rng, s, 5):
        line = T.real_line(sec)
        for _ in range(20):
            a, b = T.random_direction(rng)
            x, y, z = T.surface_point(sec.nuts, a, b, rng)
            gd = T.theta_and_gluing(line, x, y, z, a, b)
            r1, r2 = gd.identity_residuals(x, y)
            assert r1 < 1e-10 and r2 < 1e-10
            assert gd.det_residual() < 1e-10


# --- S^1 equivariance ------------------------------------------------------------------------


def test_equivariance_examples(rng):
    sec = random_sections(rng, 2, 1)[0]
    assert T.s1_equivariance(sec, 0.0)["deviation"] == 0.0
    r1 = T.s1_equivariance(sec, np.pi / 3)
    r2 = T.s1_equivariance(sec, np.pi / 3 + 2 * np.pi)
    assert r1["deviation"] < 1e-10
    assert r2["deviation"] == pytest.approx(r1["deviation"], abs=1e-14)


@settings(max_examples=20)
@given(st.floats(0.1, 2 * np.pi - 0.1), st.integers(1, 4), st.integers(0, 10**6))
def test_equivariance_law(tau, s, seed):
    rng = np.random.default_rng(seed)
    sec = random_sections(rng, s, 1)[0]
    rep = T.s1_equivariance(sec, tau, seed=seed)
    assert rep["deviation"] < 1e-10
    # the inverse matrices transform with the conjugate phase
    assert rep["inverse_deviation"] < 1e-10
    # the conjugate law misses by |e^{i tau} - e^{-i tau}| = 2 |sin tau| relative to M
    assert rep["printed_law_deviation"] == pytest.approx(2 * abs(math.sin(tau)), rel=1e-6)


# --- exceptional directions -----------------------------------------------------------------


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_exceptional_direction_count(rng, s):
    cfg = geo.NutConfiguration.random(s, rng)
    dirs = T.exceptional_directions(cfg)
    assert len(dirs) == s * (s - 1)
    secs = [T.QuadraticSection.from_point(q) for q in cfg.points]
    for d in dirs:
        i, j = d["pair"]
        assert abs(secs[i](d["a"], d["b"]) - secs[j](d["a"], d["b"])) < 1e-12
    # pairwise distinct directions
    for m in range(len(dirs)):
        for n in range(m + 1, len(dirs)):
            u, v = dirs[m], dirs[n]
            assert abs(u["a"] * v["b"] - u["b"] * v["a"]) > 1e-6


def test_exceptional_directions_are_the_pair_axes(rng):
    cfg = geo.NutConfiguration.random(2, rng)
    d = cfg.points[0] - cfg.points[1]
    d /= np.linalg.norm(d)
    units = [T.direction_to_unit_vector(e["a"], e["b"]) for e in T.exceptional_directions(cfg)]
    assert all(abs(abs(u @ d) - 1) < 1e-10 for u in units)


def test_collinear_nuts_are_non_generic():
    with pytest.raises(NonGenericConfiguration):
        T.exceptional_directions(np.array([[0.0, 0, 0], [1.0, 1, 0], [2.0, 2, 0]]))


def test_surface_point_lies_on_surface(rng):
    nuts = [T.QuadraticSection.from_point(q) for q in rng.normal(size=(2, 3))]
    a, b = T.random_direction(rng)
    x, y, z = T.surface_point(nuts, a, b, rng)
    assert abs(T.surface_eval(nuts, x, y, z, a, b)) < 1e-12
    u = cmath.exp(0.3j)
    assert abs(T.normalize(u * a, u * b)[0] - u * a) < 1e-15
