from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nutgauge import geometry as g
from nutgauge.errors import BudgetExceeded, GeometryError, StepTooLarge

coord = st.floats(-5, 5, allow_nan=False)


def taub_nut_kretschmann(r):
    # [DERIVED] sympy Riemann tensor of V(dr^2 + r^2 dOmega^2) + V^-1(dtau + cos(theta)/2 dphi)^2,
    # V = 1 + 1/(2r), evaluated at r = 0.3, 0.7, 1.5, 3.0 and matched to 6/(r + 1/2)^6.
    return 6.0 / (r + 0.5) ** 6


def test_kretschmann_closed_form_frozen_values():
    # frozen values of the symbolic computation
    assert taub_nut_kretschmann(1.5) == pytest.approx(0.09375, rel=1e-15)
    assert taub_nut_kretschmann(0.3) == pytest.approx(22.888183593749993, rel=1e-12)
    assert taub_nut_kretschmann(3.0) == pytest.approx(0.0032639461448886083, rel=1e-12)


# --- configuration -----------------------------------------------------------


def test_configuration_validation():
    with pytest.raises(GeometryError):
        g.NutConfiguration(np.array([[0, 0, 0], [0, 0, 0]]))
    with pytest.raises(GeometryError):
        g.NutConfiguration(np.zeros((1, 3)), c=0.0)
    with pytest.raises(GeometryError):
        g.NutConfiguration(np.array([[np.nan, 0, 0]]))
    with pytest.raises(GeometryError):
        g.NutConfiguration(np.zeros((1, 3)), charges=[-1.0])
    assert g.NutConfiguration.flat().s == 0
    assert g.NutConfiguration.collapsed(3).total_charge == 3


@given(st.lists(st.tuples(coord, coord, coord), min_size=1, max_size=4, unique=True), st.floats(0.1, 10))
def test_configuration_json_roundtrip(points, c):
    pts = np.array(points)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(len(pts))
    if d.min() <= 1e-9:
        return
    cfg = g.NutConfiguration(pts, c=c)
    back = g.NutConfiguration.from_json(cfg.to_json())
    assert np.array_equal(back.points, cfg.points) and back.c == cfg.c
    assert json.loads(cfg.to_json())["nuts"] == pts.tolist()


@given(st.floats(-100, 100))
def test_chart_point_wraps_tau(tau):
    p = g.ChartPoint(np.zeros(3), tau)
    assert 0 <= p.tau < 2 * np.pi
    assert np.isclose(np.cos(p.tau), np.cos(tau), atol=1e-9)
    assert np.allclose(g.ChartPoint.from_coords(p.coords).coords, p.coords)


# --- potential and monopole ------------------------------------------------------


def test_potential_matches_definition(rng):
    cfg = g.NutConfiguration.random(3, rng)
    for _ in range(10):
        x = rng.normal(size=3) * 3
        want = cfg.c + 0.5 * sum(1 / np.linalg.norm(x - q) for q in cfg.points)
        assert g.potential(cfg, x) == pytest.approx(want, rel=1e-14)


def test_monopole_is_south_string_potential(rng):
    # alpha(d_phi) = (cos Theta - 1)/2 per unit charge
    cfg = g.NutConfiguration.taub_nut()
    for _ in range(10):
        x = rng.normal(size=3)
        r = np.linalg.norm(x)
        a = g.monopole_potential(cfg, x)
        assert a @ np.array([-x[1], x[0], 0.0]) == pytest.approx(0.5 * (x[2] / r - 1), abs=1e-13)
        assert abs(a[2]) < 1e-15


@pytest.mark.parametrize("s", [1, 3])
def test_monopole_equation_analytic_and_fd(rng, s):
    cfg = g.NutConfiguration.taub_nut() if s == 1 else g.NutConfiguration.random(3, rng)
    for p in g.sample_points(cfg, 20, rng, center=cfg.points.mean(0)):
        assert np.max(np.abs(g.monopole_residual(cfg, p.x))) < 1e-12
        assert np.max(np.abs(g.monopole_residual(cfg, p.x, h=1e-3))) < 1e-7


# --- frame and connection ------------------------------------------------------------


def gibbons_hawking_metric(cfg, x):
    """Independent assembly of V dx^2 + V^-1 (dtau + alpha)^2 in (tau, x)."""
    V = g.potential(cfg, x)
    a = np.concatenate([[1.0], g.monopole_potential(cfg, x)])
    G = np.outer(a, a) / V
    G[1:, 1:] += V * np.eye(3)
    return G


def test_frame_dual_and_metric(rng):
    cfg = g.NutConfiguration.random(3, rng)
    for p in g.sample_points(cfg, 20, rng):
        fr = g.frame_at(cfg, p)
        assert np.allclose(fr.coframe @ fr.frame.T, np.eye(4), atol=1e-13)
        assert np.allclose(fr.metric, gibbons_hawking_metric(cfg, p.x), rtol=1e-13, atol=1e-13)
        # det g = V^2 in these coordinates
        assert fr.volume_density == pytest.approx(fr.V, rel=1e-12)


def test_frame_orthonormal_under_metric(rng):
    cfg = g.NutConfiguration.taub_nut()
    p = g.sample_points(cfg, 1, rng)[0]
    fr = g.frame_at(cfg, p)
    assert np.allclose(fr.frame @ fr.metric @ fr.frame.T, np.eye(4), atol=1e-13)


def test_levi_civita_cartan_and_antisymmetry(rng):
    cfg = g.NutConfiguration.random(3, rng)
    for p in g.sample_points(cfg, 10, rng):
        conn = g.levi_civita(cfg, p)
        assert conn.cartan_residual < 1e-12
        assert np.allclose(conn.omega, -np.transpose(conn.omega, (1, 0, 2)), atol=1e-13)
        fd_conn = g.levi_civita(cfg, p, h=1e-3)
        assert np.allclose(fd_conn.omega, conn.omega, atol=1e-8)


def test_flat_connection_vanishes():
    conn = g.levi_civita(g.NutConfiguration.flat(), g.ChartPoint(np.ones(3)))
    assert np.all(conn.omega == 0)


def test_rescaled_connection_is_antisymmetric(rng):
    cfg = g.NutConfiguration.taub_nut()
    p = g.sample_points(cfg, 1, rng)[0]
    om = g.rescaled_connection(g.levi_civita(cfg, p), rng.normal(size=4))
    assert np.allclose(om, -np.transpose(om, (1, 0, 2)))


# --- curvature -----------------------------------------------------------------


def test_hodge_star_involution_and_basis():
    F = np.random.default_rng(1).normal(size=(4, 4))
    F = F - F.T
    assert np.allclose(g.hodge_star(g.hodge_star(F)), F)
    for S in g.self_dual_basis():
        assert np.allclose(g.hodge_star(S), S)
    for S in g.self_dual_basis(-g.ORIENTATION):
        assert np.allclose(g.hodge_star(S), -S)


def test_riemann_matches_symbolic_kretschmann(rng):
    cfg = g.NutConfiguration.taub_nut()
    for p in g.sample_points(cfg, 10, rng, r_min=0.3, r_max=4.0):
        d = g.curvature_diagnostics(cfg, p)
        r = np.linalg.norm(p.x)
        assert d.riemann_norm**2 == pytest.approx(taub_nut_kretschmann(r), rel=1e-6)


def test_taub_nut_curvature_is_anti_self_dual_and_ricci_flat(rng):
    cfg = g.NutConfiguration.taub_nut()
    for p in g.sample_points(cfg, 10, rng):
        d = g.curvature_diagnostics(cfg, p)
        assert d.scalar_curvature < 1e-6 and d.ricci_norm < 1e-6 and d.weyl_plus_norm < 1e-6
        assert d.weyl_minus_norm > 1e-3


def test_riemann_symmetries(rng):
    cfg = g.NutConfiguration.random(2, rng)
    p = g.sample_points(cfg, 1, rng)[0]
    R = g.riemann_frame(cfg, p, 1e-2)
    assert np.allclose(R, -np.transpose(R, (1, 0, 2, 3)), atol=1e-7)
    assert np.allclose(R, -np.transpose(R, (0, 1, 3, 2)), atol=1e-7)
    assert np.allclose(R, np.transpose(R, (2, 3, 0, 1)), atol=1e-7)
    bianchi = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
    assert np.max(np.abs(bianchi)) < 1e-7


def test_flat_curvature_is_zero(rng):
    cfg = g.NutConfiguration.flat()
    d = g.curvature_diagnostics(cfg, g.ChartPoint(rng.normal(size=3)))
    assert d.riemann_norm == 0.0


def test_step_too_large_raised():
    cfg = g.NutConfiguration.taub_nut()
    with pytest.raises(StepTooLarge):
        g.curvature_diagnostics(cfg, g.ChartPoint(np.array([0.3, 0.2, 0.5])), h=0.2)


# --- complex structures ------------------------------------------------------------


@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
def test_adapted_triad_orthonormal(e1):
    e = np.array(e1)
    if np.linalg.norm(e) < 1e-3:
        return
    T = g.adapted_triad(e)
    assert np.allclose(T @ T.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(T) == pytest.approx(g.ORIENTATION, abs=1e-12)


def test_kahler_form_is_self_dual_and_closed(rng):
    cfg = g.NutConfiguration.random(3, rng)
    for p in g.sample_points(cfg, 10, rng):
        e1 = rng.normal(size=3)
        w = g.kahler_form(cfg, e1, p.x)
        F = g.frame_matrix(cfg, p.x)
        wf = F @ w @ F.T
        assert np.allclose(g.hodge_star(wf), wf, atol=1e-12)
        assert g.kahler_form_closure(cfg, e1, p) < 1e-10
        assert g.kahler_form_closure(cfg, e1, p, h=1e-3) < 1e-7


# --- volume and collapsed model ---------------------------------------------------


def test_volume_growth_shell_theorem_oracle():
    # int_{|x - x0| <= R} 1/|x - q| for q inside the ball: 2 pi R^2 - (2 pi / 3) |x0 - q|^2
    cfg = g.NutConfiguration(np.array([[0.3, -0.2, 0.4]]))
    R = 3.0
    (_, ratio), = g.volume_growth(cfg, np.zeros(3), [R])
    d2 = 0.29
    want = 2 * np.pi * (4 * np.pi / 3 * R**3 + 0.5 * (2 * np.pi * R**2 - 2 * np.pi / 3 * d2)) / R**3
    assert ratio == pytest.approx(want, rel=1e-3)


def test_volume_growth_budget_and_order():
    cfg = g.NutConfiguration.taub_nut()
    with pytest.raises(BudgetExceeded):
        g.volume_growth(cfg, np.zeros(3), [1.0], budget=10)
    with pytest.raises(GeometryError):
        g.volume_growth(cfg, np.zeros(3), [2.0, 1.0])


@pytest.mark.parametrize("s", [1, 2, 3])
def test_collapsed_metric_determinant(rng, s):
    for _ in range(10):
        p = g.CollapsedChartPoint(rng.uniform(0.1, 5), rng.uniform(0, 4 * np.pi / s), rng.uniform(0, 2 * np.pi), rng.uniform(0.1, 3.0))
        p.validate(s)
        assert np.linalg.det(g.collapsed_metric(s, p)) == pytest.approx(g.collapsed_determinant(s, p), rel=1e-10)


def test_collapsed_chart_validation():
    with pytest.raises(GeometryError):
        g.CollapsedChartPoint(0.0)
    with pytest.raises(GeometryError):
        g.CollapsedChartPoint(1.0, tau=3.5).validate(4)


def test_sample_points_respect_clearance(rng):
    cfg = g.NutConfiguration.random(3, rng)
    for p in g.sample_points(cfg, 30, rng, clearance=0.3):
        assert g.string_clearance(cfg, p.x) >= 0.3
