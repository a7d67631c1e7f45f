from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import lpmv
from sympy.physics.quantum.spin import Rotation

from nutgauge import fd
from nutgauge import geometry as geo
from nutgauge import harmonic as H
from nutgauge.errors import (
    HarmonicError,
    NoBoundedSolution,
    PoleProximity,
    RealityViolation,
    SourceCoincidence,
    StiffnessFailure,
)

# --- flat R^3 x S^1 Green function ---------------------------------------------------


def image_sum(a, b, K):
    """Direct sum of 4D Green functions 1/(4 pi^2 d^2) over the images b + 2 pi k, |k| <= K."""
    k = np.arange(-K, K + 1)
    return float(np.sum(1.0 / (4 * np.pi**2 * (a * a + (b + 2 * np.pi * k) ** 2))))


def test_series_matches_direct_image_sum():
    for a, b in [(0.3, 0.2), (1.0, np.pi), (2.5, -1.0)]:
        assert H.flat_green_series(a, b, 200) == pytest.approx(image_sum(a, b, 200), rel=1e-13)


def test_closed_form_matches_extrapolated_series(rng):
    a = rng.uniform(0.05, 4.0, 500)
    b = rng.uniform(-np.pi, np.pi, 500)
    s = H.flat_green_series_extrapolated(a, b, 1000)
    c = H.flat_green_closed(a, b)
    assert np.max(np.abs(c - s) / s) < 1e-9


def test_prefactor_is_forced_by_series_and_differs_from_printed(rng):
    a = rng.uniform(0.1, 3.0, 200)
    b = rng.uniform(-np.pi, np.pi, 200)
    s = H.flat_green_series_extrapolated(a, b, 1000)
    unit = H.flat_green_closed(a, b, 1.0)
    C = np.sum(s * unit) / np.sum(unit * unit)
    assert C == pytest.approx(1 / (8 * np.pi**2), rel=1e-9)
    assert C / H.PRINTED_FLAT_GREEN_C == pytest.approx(2.0, rel=1e-9)


def test_series_truncation_gap_matches_image_tail():
    # [DERIVED] the images beyond K contribute 2/(16 pi^4 (K + 1/2)) up to O(K^-3)
    a, b = 1.0, np.pi
    s500 = H.flat_green_series(a, b, 500)
    s1000 = H.flat_green_series(a, b, 1000)
    predicted = 2.0 / (16 * np.pi**4) * (1 / 500.5 - 1 / 1000.5)
    assert s1000 - s500 == pytest.approx(predicted, rel=1e-5)
    assert (s1000 - s500) / s1000 == pytest.approx(2.2e-4, rel=0.05)


def test_regular_part_at_source():
    for d in [1e-2, 1e-3]:
        n = np.array([0.3, -0.4, 0.5, 0.7])
        n /= np.linalg.norm(n)
        a, b = d * np.linalg.norm(n[1:]), d * n[0]
        G = H.flat_green_closed(a, b)
        assert G - 1 / (4 * np.pi**2 * d * d) == pytest.approx(H.FLAT_GREEN_REGULAR_PART, rel=1e-3)


def test_green_periodic_and_even():
    a, b = 0.7, 0.4
    G = H.flat_green_closed(a, b)
    assert H.flat_green_closed(a, b + 2 * np.pi) == pytest.approx(G, rel=1e-13)
    assert H.flat_green_closed(a, -b) == pytest.approx(G, rel=1e-14)


def test_green_gradient_matches_finite_differences(rng):
    f = lambda Y: H.flat_green_closed(np.linalg.norm(Y[1:]), Y[0])
    for _ in range(5):
        x = rng.normal(size=3)
        b = rng.uniform(-3, 3)
        grad = H.flat_green_gradient(x[None, :], np.array([b]))[0]
        X = np.concatenate([[b], x])
        num = np.array([fd.derivative(f, X, i, 1e-3) for i in range(4)])
        assert np.allclose(grad, num, rtol=1e-7, atol=1e-12)


def test_green_is_harmonic_away_from_source(rng):
    cfg = geo.NutConfiguration.flat()
    gs = H.GreenSpec(H.Space.FLAT_R3xS1, (0.0, 0.0, 0.0, 0.0))
    for _ in range(5):
        X = np.concatenate([[rng.uniform(-3, 3)], rng.normal(size=3)])
        lap = H.laplacian(cfg, lambda Y: gs.value(Y)[0], X, 1e-2)
        assert abs(lap) < 1e-6


def test_source_coincidence():
    with pytest.raises(SourceCoincidence):
        H.flat_green_closed(0.0, 0.0)
    with pytest.raises(SourceCoincidence):
        H.bpst(1.0).value(np.zeros(4))


# --- Gibbons-Hawking Green functions ------------------------------------------------


@pytest.mark.parametrize("s", [1, 2, 3])
def test_kappa_over_r_is_harmonic_on_collapsed_model(rng, s):
    cfg = geo.NutConfiguration.collapsed(s)
    for _ in range(3):
        x = rng.normal(size=3)
        if geo.string_clearance(cfg, x) < 0.3:
            continue
        X = np.concatenate([[0.4], x])
        lap = H.laplacian(cfg, lambda Y: H.KAPPA / np.linalg.norm(Y[1:]), X, 1e-2)
        assert abs(lap) < 1e-8


def test_kappa_gives_unit_flux():
    # flux of grad(kappa/r) through S^2_r x S^1: sqrt(g) g^{rr} = r^2 sin(theta) in GH coordinates
    r = 2.0
    dG = -H.KAPPA / r**2
    assert 2 * np.pi * 4 * np.pi * r**2 * dG == pytest.approx(-1.0, rel=1e-15)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_collapsed_laplacian_forms_agree(rng, s):
    field = lambda r, tau, phi, th: np.exp(1j * (s * tau / 2 + phi)) * r * np.sin(th)
    for _ in range(3):
        p = (rng.uniform(0.5, 3), rng.uniform(0, 1), rng.uniform(0, 6), rng.uniform(0.5, 2.5))
        a = H.collapsed_laplacian_apply(s, field, p, 1e-3, "direct")
        b = H.collapsed_laplacian_apply(s, field, p, 1e-3, "lens")
        assert abs(a - b) < 1e-6 * max(1.0, abs(a))
    with pytest.raises(PoleProximity):
        H.collapsed_laplacian_apply(s, field, (1.0, 0.0, 0.0, 1e-4))


# --- lens harmonics --------------------------------------------------------------------


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_lens_eigenrelation(rng, s):
    for j in range(4):
        for k, l in H.lens_indices(j, s):
            Y = H.LensHarmonic(j, k, l, s)
            p = (rng.uniform(0, 4 * np.pi / s), rng.uniform(0, 2 * np.pi), rng.uniform(0.4, 2.7))
            lap = H.lens_laplacian_apply(s, Y, p, 1e-2)
            assert abs(lap + j * (j + 1) * Y(*p)) < 1e-6 * max(1.0, abs(Y(*p)))


@pytest.mark.parametrize("s", [1, 2, 3])
def test_legendre_ode_residual(s):
    x = np.linspace(-0.9, 0.9, 11)
    for j in range(4):
        for k, l in H.lens_indices(j, s):
            P = H.legendre_general(j, k, l, s, x)
            scale = max(1.0, np.max(np.abs(P)))
            assert np.max(np.abs(H.legendre_ode_residual(j, k, l, s, x))) < 1e-6 * scale * (j + 1) ** 2


def test_legendre_l0_proportional_to_associated_legendre():
    x = np.linspace(-0.95, 0.95, 9)
    for j in range(4):
        for k in range(-j, j + 1):
            assert _proportional(H.legendre_general(j, k, 0, 1, x), lpmv(abs(k), j, x), 1e-10)


def _proportional(P, Q, rtol):
    c = np.dot(P, Q) / np.dot(Q, Q)
    return np.max(np.abs(P - c * Q)) <= rtol * np.max(np.abs(P))


def test_legendre_matches_wigner_small_d():
    # P^{k,l}_j(cos beta) is proportional to d^j_{k,m}(beta) with m = l s / 2
    beta = sympy.Symbol("beta")
    b = np.linspace(0.2, 2.9, 9)
    for j, k, l, s in [(1, 0, 1, 2), (2, 1, 2, 2), (2, -1, 1, 4), (3, 2, -2, 2), (2, 1, 1, 2)]:
        m = l * s // 2
        d = sympy.lambdify(beta, Rotation.d(j, k, m, beta).doit(), "numpy")
        D = np.real(np.asarray(d(b), dtype=complex)) * np.ones_like(b)
        assert _proportional(H.legendre_general(j, k, l, s, np.cos(b)), D, 1e-10)


def _inner(Y1, Y2, n=24):
    s = Y1.s
    tau = np.arange(n) * (4 * np.pi / s) / n
    phi = np.arange(n) * 2 * np.pi / n
    xg, wg = np.polynomial.legendre.leggauss(n)
    T, P, X = np.meshgrid(tau, phi, xg, indexing="ij")
    v = np.conj(Y1(T, P, np.arccos(X))) * Y2(T, P, np.arccos(X))
    return np.sum(v * wg[None, None, :]) * (4 * np.pi / s / n) * (2 * np.pi / n)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_lens_orthonormality(s):
    Ys = [H.LensHarmonic(j, k, l, s) for j in range(3) for k, l in H.lens_indices(j, s)]
    for i, A in enumerate(Ys):
        for B in Ys[i:]:
            want = 1.0 if A is B else 0.0
            assert abs(_inner(A, B) - want) < 1e-10


@pytest.mark.parametrize("s", [1, 2, 5])
def test_constant_harmonic_value(s):
    assert H.LensHarmonic(0, 0, 0, s)(0.1, 0.2, 0.3) == pytest.approx(math.sqrt(s) / (4 * np.pi), rel=1e-12)


def test_no_bounded_solution():
    with pytest.raises(NoBoundedSolution):
        H.LensHarmonic(1, 0, 1, 1)  # l s odd
    with pytest.raises(NoBoundedSolution):
        H.LensHarmonic(1, 2, 0, 1)  # |k| > j
    with pytest.raises(NoBoundedSolution):
        H.LensHarmonic(1, 0, 2, 2)  # |l| > 2j/s


@pytest.mark.parametrize("s", [1, 2, 3])
def test_nonconstant_harmonics_change_sign(s):
    for j in range(1, 4):
        for k, l in H.lens_indices(j, s):
            assert all(H.shell_sign_change(H.LensHarmonic(j, k, l, s)))


# --- radial equation ------------------------------------------------------------------


def kummer_oracle(j, l, s, r, branch):
    a = j + 1 + s * l / 2.0
    z = 2 * l * r
    if branch == "growing":
        return float(r**j * mpmath.exp(-l * r) * mpmath.hyp1f1(a, 2 * j + 2, z))
    pref = mpmath.gamma(a) * (2 * l) ** (2 * j + 1) / mpmath.gamma(2 * j + 1)
    return float(pref * r**j * mpmath.exp(-l * r) * mpmath.hyperu(a, 2 * j + 2, z))


@pytest.mark.parametrize("j,l,s", [(0, 1, 1), (1, 1, 2), (2, 2, 1), (1, 1, 3)])
def test_radial_against_kummer_functions(j, l, s):
    r = np.array([0.3, 1.0, 3.0, 8.0])
    for br in ("growing", "decaying"):
        sol = H.radial_solve(j, l, s, br, r)
        want = np.array([kummer_oracle(j, l, s, x, br) for x in r])
        assert np.allclose(sol.value, want, rtol=1e-9)


@given(st.integers(0, 4), st.integers(1, 3))
def test_l0_branches_are_monomials(j, s):
    r = np.linspace(0.1, 20, 50)
    assert np.array_equal(H.radial_solve(j, 0, s, "growing", r).value, r**j)
    assert np.allclose(H.radial_solve(j, 0, s, "decaying", r).value, r ** (-j - 1.0), rtol=1e-15)


@pytest.mark.parametrize("j,l,s", [(0, 1, 1), (1, 1, 2), (2, 1, 3)])
def test_wronskian_and_residual(j, l, s):
    r = np.linspace(0.2, 15, 60)
    gsol = H.radial_solve(j, l, s, "growing", r)
    dsol = H.radial_solve(j, l, s, "decaying", r)
    assert np.allclose(r**2 * H.wronskian(gsol, dsol), -(2 * j + 1), rtol=1e-8)
    assert np.max(gsol.residual()) < 1e-6
    assert np.max(dsol.residual()) < 1e-5


@pytest.mark.parametrize("s", [1, 2, 3])
def test_large_r_exponents(s):
    r = np.linspace(1.0, 40.0, 400)
    for br, sign in (("decaying", -1), ("growing", 1)):
        fit = H.fit_large_r_exponents(H.radial_solve(0, 1, s, br, r), 15.0)
        assert fit["rate"] == pytest.approx(sign, rel=0.02)
        want = sign * s / 2 - 1
        assert abs(fit["power"] - want) <= 0.02 * max(1.0, abs(want))


def test_stiffness_and_grid_errors():
    with pytest.raises(StiffnessFailure):
        H.radial_solve(0, 2, 1, "growing", np.linspace(1, 400, 10))
    with pytest.raises(HarmonicError):
        H.radial_solve(0, 1, 1, "growing", np.array([1.0, 0.5]))


def test_expansion_reality():
    p = (1.3, 0.4, 1.1, 0.9)
    coeffs = {(1, 1, 0): (0.3 + 0.2j, 0.1j), (1, -1, 0): (0.3 - 0.2j, -0.1j), (0, 0, 0): (1.0, 0.5)}
    v = H.expansion_evaluate(coeffs, p, 3, 2)
    assert abs(v.imag) < 1e-13
    with pytest.raises(RealityViolation):
        H.expansion_evaluate({(1, 1, 0): (1j, 0.0)}, p, 3, 2)


# --- harmonic functions ---------------------------------------------------------------------


@given(st.floats(0.1, 10), st.floats(0.5, 3))
def test_bpst_function_value(lam, rho):
    f = H.bpst(lam)
    X = np.array([[rho, 0.0, 0.0, 0.0]])
    assert f.value(X)[0] == pytest.approx(1 + lam / rho**2, rel=1e-12)


def test_nut_centered_value_and_distance():
    f = H.nut_centered(2.0, 3)
    X = np.array([[0.1, 0.0, 0.0, 2.0]])
    assert f.value(X)[0] == pytest.approx(1 + 2.0 * H.KAPPA / 2.0)
    assert f.source_distance(X)[0] == pytest.approx(2.0)
    assert f.background().total_charge == 3


def test_green_spec_validation():
    with pytest.raises(HarmonicError):
        H.GreenSpec(H.Space.FLAT_R4, (0.0, 0.0, 0.0))
    with pytest.raises(HarmonicError):
        H.GreenSpec(H.Space.FLAT_R4, normalization=-1.0)
    with pytest.raises(HarmonicError):
        H.HarmonicFunction(H.GreenSpec(H.Space.FLAT_R4), -1.0)
    inf = H.caloron((0, 0, 0, 0), math.inf)
    assert inf.infinite
