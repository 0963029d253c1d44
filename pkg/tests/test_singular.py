import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import integrate_over
from pointstokes import (
    CutoffSpec,
    LineicForce,
    SingularityError,
    SingularSource,
    correction_g,
    correction_h,
    cutoff,
    cutoff_derivative,
    cutoff_stokeslet,
    discretize_lineic,
    point_force_load,
    stokeslet,
    stokeslet_residual_check,
)
from pointstokes.checks import run_analytics_checks
from pointstokes.fem.spaces import MixedSpace
from pointstokes.mesh import build_uniform_mesh

SPEC = CutoffSpec(0.1, 0.2)


def _src(xbar, F, mu=1.0, x0=None):
    x0 = np.full(len(xbar), 0.5) if x0 is None else np.asarray(x0)
    return SingularSource(x0, F, mu), x0 + np.asarray(xbar, dtype=float)


# -- Stokeslet --------------------------------------------------------------


def test_stokeslet_2d_unit_example():
    # |xbar| = 1 needs x0 near a corner to keep the evaluation point inside
    src = SingularSource((0.05, 0.5), (1.0, 0.0))
    u, p = stokeslet(np.array([1.05, 0.5]), src)
    assert np.allclose(u, [1 / (4 * np.pi), 0.0], rtol=0, atol=1e-15)
    assert abs(p - 1 / (2 * np.pi)) < 1e-15


def test_stokeslet_3d_unit_example():
    src = SingularSource((0.05, 0.5, 0.5), (1.0, 0.0, 0.0))
    u, p = stokeslet(np.array([1.05, 0.5, 0.5]), src)
    assert np.allclose(u, [1 / (4 * np.pi), 0.0, 0.0], rtol=0, atol=1e-15)
    assert abs(p - 1 / (4 * np.pi)) < 1e-15


def test_stokeslet_general_formula_2d():
    src, x = _src((0.3, -0.1), (0.4, 1.3), mu=2.5)
    xb = x - src.x0
    r = np.linalg.norm(xb)
    expected_u = (-np.log(r) * src.F + xb * (xb @ src.F) / r**2) / (4 * np.pi * src.mu)
    expected_p = (xb @ src.F) / (2 * np.pi * r**2)
    u, p = stokeslet(x, src)
    assert np.allclose(u, expected_u, rtol=1e-14, atol=0)
    assert abs(p - expected_p) < 1e-14


def test_stokeslet_general_formula_3d():
    src, x = _src((0.2, -0.1, 0.25), (0.4, 1.3, -0.7), mu=0.5)
    xb = x - src.x0
    r = np.linalg.norm(xb)
    expected_u = (src.F / r + xb * (xb @ src.F) / r**3) / (8 * np.pi * src.mu)
    expected_p = (xb @ src.F) / (4 * np.pi * r**3)
    u, p = stokeslet(x, src)
    assert np.abs(u - expected_u).max() < 1e-14 * np.abs(expected_u).max()
    assert abs(p - expected_p) < 1e-14


def test_stokeslet_pressure_vanishes_orthogonal_to_force():
    src, x = _src((0.0, 0.2), (1.0, 0.0))
    assert stokeslet(x, src)[1] == 0.0


def test_stokeslet_singular_at_source():
    src = SingularSource((0.5, 0.5), (1.0, 0.0))
    with pytest.raises(SingularityError):
        stokeslet(np.array([0.5, 0.5]), src)


def test_stokeslet_vectorised_matches_pointwise():
    src = SingularSource((0.5, 0.5), (0.3, -0.2))
    pts = np.random.default_rng(1).uniform(0.0, 1.0, size=(20, 2))
    u, p = stokeslet(pts, src)
    for k, x in enumerate(pts):
        uk, pk = stokeslet(x, src)
        assert np.allclose(u[k], uk, rtol=1e-14, atol=1e-16)
        assert abs(p[k] - pk) <= 1e-14 * abs(pk)


@pytest.mark.parametrize(
    "xbar, F",
    [((0.3, 0.1), (0.6, 0.8)), ((0.2, 0.2, 0.1), (0.0, 0.6, 0.8))],
)
def test_stokeslet_residual_examples(xbar, F):
    src, x = _src(xbar, F)
    mom, div = stokeslet_residual_check(x, src, 1e-4)
    assert np.abs(mom).max() <= 1e-5
    assert abs(div) <= 1e-5


def test_stokeslet_residual_second_order_in_step():
    src, x = _src((0.1, 0.05), (1.0, 0.0))
    r1 = np.abs(stokeslet_residual_check(x, src, 2e-3)[0]).max()
    r2 = np.abs(stokeslet_residual_check(x, src, 1e-3)[0]).max()
    assert 3.5 < r1 / r2 < 4.5


def test_stokeslet_residual_rejects_large_step():
    src, x = _src((0.01, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        stokeslet_residual_check(x, src, 0.004)


# -- cutoff -------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["cubic", "quintic"])
def test_cutoff_endpoint_values_exact(kind):
    spec = CutoffSpec(0.1, 0.2, kind)
    assert cutoff(spec.a, spec) == 1.0
    assert cutoff(spec.b, spec) == 0.0
    assert cutoff_derivative(spec.a, spec) == 0.0
    assert cutoff_derivative(spec.b, spec) == 0.0
    assert abs(cutoff(0.5 * (spec.a + spec.b), spec) - 0.5) < 1e-14


def test_cubic_cutoff_polynomial_and_derivative():
    a, b = SPEC.a, SPEC.b
    r = np.linspace(a, b, 17)
    poly = (2 * r**3 - 3 * (a + b) * r**2 + 6 * a * b * r + b**2 * (b - 3 * a)) / (b - a) ** 3
    assert np.allclose(cutoff(r, SPEC), poly, rtol=0, atol=1e-13)
    assert np.allclose(cutoff_derivative(r, SPEC), 6 * (r - a) * (r - b) / (b - a) ** 3, atol=1e-12)


def test_cutoff_outside_ring_is_constant():
    r = np.array([0.0, 0.05, 0.1, 0.2, 0.3, 5.0])
    assert np.array_equal(cutoff(r, SPEC), [1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    assert np.array_equal(cutoff_derivative(r, SPEC), np.zeros(6))


def test_cutoff_is_c1_across_ring_edges():
    for edge in (SPEC.a, SPEC.b):
        for eps in (1e-6, 1e-8):
            assert abs(cutoff(edge + eps, SPEC) - cutoff(edge - eps, SPEC)) < 10 * eps
            assert abs(cutoff_derivative(edge + eps, SPEC) - cutoff_derivative(edge - eps, SPEC)) < 1e3 * eps


def test_cutoff_derivative_rejects_bad_order():
    with pytest.raises(ValueError):
        cutoff_derivative(0.15, SPEC, order=4)


def test_cutoff_spec_validation():
    with pytest.raises(ValueError):
        CutoffSpec(0.2, 0.1)
    with pytest.raises(ValueError):
        CutoffSpec(0.1, 0.2, "gaussian")
    with pytest.raises(ValueError, match="boundary"):
        CutoffSpec(0.1, 0.6).check_source(SingularSource((0.5, 0.5), (1.0, 0.0)))


# -- correction fields ----------------------------------------------------------


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("radius", [0.0, 0.0625, 0.125, 0.25, 0.375])
def test_corrections_vanish_exactly_off_ring(dim, radius):
    # radii chosen so that |x - x0| is computed exactly, including the edges
    spec = CutoffSpec(0.125, 0.25)
    direction = np.zeros(dim)
    direction[0] = 1.0
    src = SingularSource(np.full(dim, 0.5), np.linspace(1.0, 2.0, dim))
    x = src.x0 + radius * direction
    assert np.linalg.norm(x - src.x0) == radius
    assert np.all(correction_g(x, src, spec) == 0.0)
    assert correction_h(x, src, spec) == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_correction_h_zero_on_ring_circles(dim):
    src = SingularSource(np.full(dim, 0.5), np.ones(dim))
    rng = np.random.default_rng(3)
    d = rng.normal(size=(10, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    for radius in (SPEC.a, SPEC.b):
        values = correction_h(src.x0 + radius * d, src, SPEC)
        assert np.abs(values).max() < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_closed_forms_match_radial_derivation(dim):
    rng = np.random.default_rng(5)
    src = SingularSource(np.full(dim, 0.5), rng.normal(size=dim), 1.7)
    d = rng.normal(size=(50, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    pts = src.x0 + rng.uniform(0.1, 0.2, 50)[:, None] * d
    g1, g2 = correction_g(pts, src, SPEC), correction_g(pts, src, SPEC, closed_form=False)
    h1, h2 = correction_h(pts, src, SPEC), correction_h(pts, src, SPEC, closed_form=False)
    assert np.abs(g1 - g2).max() < 1e-10 * np.abs(g1).max()
    assert np.abs(h1 - h2).max() < 1e-10 * np.abs(h1).max()


def test_analytic_checks_meet_tolerances():
    for res in run_analytics_checks(n_points=40):
        assert res.correction_momentum <= 1e-5
        assert res.correction_divergence <= 1e-6
        assert 1.8 < res.correction_order < 2.2
        assert res.stokeslet_momentum <= 1e-5
        assert res.stokeslet_divergence <= 1e-5


@pytest.mark.parametrize("kind", ["cubic", "quintic"])
def test_divergence_correction_integrates_to_zero(kind):
    spec = CutoffSpec(0.1, 0.2, kind)
    src = SingularSource((0.5, 0.5), (0.3, -1.1))
    mesh = build_uniform_mesh(8)
    total = integrate_over(mesh, lambda p: correction_h(p, src, spec), [(src.x0, (spec.a, spec.b))])
    assert abs(total) < 1e-6


def test_off_centre_divergence_correction_integrates_to_zero():
    src = SingularSource((0.31, 0.62), (1.0, 0.4))
    mesh = build_uniform_mesh(8)
    total = integrate_over(mesh, lambda p: correction_h(p, src, SPEC), [(src.x0, (SPEC.a, SPEC.b))])
    assert abs(total) < 1e-6


# -- properties -------------------------------------------------------------------

coords = st.floats(-0.45, 0.45, allow_nan=False)
forces = st.floats(-3.0, 3.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(coords, min_size=2, max_size=2), st.lists(forces, min_size=2, max_size=2))
def test_stokeslet_parity(xbar, F):
    xbar = np.array(xbar)
    if np.linalg.norm(xbar) < 1e-3:
        return
    src = SingularSource((0.5, 0.5), F)
    u1, p1 = stokeslet(src.x0 + xbar, src)
    u2, p2 = stokeslet(src.x0 - xbar, src)
    scale = 1.0 + np.abs(u1).max()
    assert np.abs(u1 - u2).max() <= 1e-13 * scale
    assert abs(p1 + p2) <= 1e-13 * (1.0 + abs(p1))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(coords, min_size=3, max_size=3),
    st.lists(forces, min_size=3, max_size=3),
    st.lists(forces, min_size=3, max_size=3),
    forces,
)
def test_linearity_in_force(xbar3, F1, F2, alpha):
    for dim in (2, 3):
        xbar = np.array(xbar3[:dim])
        if np.linalg.norm(xbar) < 1e-3:
            continue
        x0 = np.full(dim, 0.5)
        s1, s2 = SingularSource(x0, F1[:dim]), SingularSource(x0, F2[:dim])
        s12 = SingularSource(x0, alpha * np.array(F1[:dim]) + np.array(F2[:dim]))
        x = x0 + xbar
        for fn in (
            lambda s: stokeslet(x, s)[0],
            lambda s: stokeslet(x, s)[1],
            lambda s: correction_g(x, s, SPEC),
            lambda s: correction_h(x, s, SPEC),
            lambda s: cutoff_stokeslet(x, s, SPEC)[0],
        ):
            lhs, rhs = fn(s12), alpha * fn(s1) + fn(s2)
            scale = 1.0 + np.abs(fn(s1)).max() * abs(alpha) + np.abs(fn(s2)).max()
            assert np.abs(lhs - rhs).max() <= 1e-13 * scale


# -- point-force loads ---------------------------------------------------------------


@pytest.mark.parametrize("pair", ["MINI", "TaylorHood"])
def test_point_load_at_vertex(pair):
    mesh = build_uniform_mesh(8)
    space = MixedSpace.create(mesh, pair)
    src = SingularSource((0.5, 0.5), (0.7, -0.2))
    load = point_force_load(mesh, space, src)
    nv = space.n_velocity
    v = int(np.flatnonzero(np.all(mesh.vertices == 0.5, axis=1))[0])
    expected = np.zeros(2 * nv)
    expected[v], expected[v + nv] = 0.7, -0.2
    assert np.allclose(load, expected, rtol=0, atol=1e-15)


def test_point_load_at_centroid():
    mesh = build_uniform_mesh(8)
    space = MixedSpace.create(mesh)
    t = 37
    x0 = mesh.vertices[mesh.triangles[t]].mean(axis=0)
    src = SingularSource(x0, (0.9, 0.3))
    load = point_force_load(mesh, space, src)
    nv = space.n_velocity
    for c, Fc in enumerate(src.F):
        assert np.allclose(load[mesh.triangles[t] + c * nv], Fc / 3, rtol=0, atol=1e-15)
        assert abs(load[c * nv : c * nv + mesh.n_vertices].sum() - Fc) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_point_load_vertex_part_sums_to_force(x, y):
    mesh = build_uniform_mesh(4)
    space = MixedSpace.create(mesh)
    src = SingularSource((x, y), (1.5, -0.5))
    load = point_force_load(mesh, space, src)
    nv = space.n_velocity
    assert abs(load[: mesh.n_vertices].sum() - 1.5) < 1e-13
    assert abs(load[nv : nv + mesh.n_vertices].sum() + 0.5) < 1e-13


def test_point_load_rejects_3d_source():
    mesh = build_uniform_mesh(2)
    with pytest.raises(ValueError):
        point_force_load(mesh, MixedSpace.create(mesh), SingularSource((0.5,) * 3, (1.0, 0, 0)))


def test_source_validation():
    with pytest.raises(ValueError):
        SingularSource((0.0, 0.5), (1.0, 0.0))
    with pytest.raises(ValueError):
        SingularSource((0.5, 0.5), (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        SingularSource((0.5, 0.5), (1.0, 0.0), mu=0.0)


# -- lineic forces ---------------------------------------------------------------------


def test_segment_discretisation():
    lf = LineicForce.polyline([(0.2, 0.3), (0.8, 0.3)], (1.0, 0.0), 4)
    sources = discretize_lineic(lf)
    assert len(sources) == 4
    L = 0.6
    for k, s in enumerate(sources):
        assert np.allclose(s.x0, [0.2 + (k + 0.5) * L / 4, 0.3], atol=1e-12)
        assert np.allclose(s.F, [L / 4, 0.0], atol=1e-12)


def test_single_point_carries_full_weight():
    lf = LineicForce.polyline([(0.2, 0.2), (0.5, 0.2), (0.5, 0.8)], (0.0, 2.0), 1)
    (s,) = discretize_lineic(lf)
    assert np.allclose(s.x0, [0.5, 0.35], atol=1e-12)  # arc-length midpoint
    assert np.allclose(s.F, [0.0, 2.0 * 0.9], atol=1e-12)


@pytest.mark.parametrize("with_tangent", [True, False])
def test_quarter_circle_arc_length_and_weights(with_tangent):
    curve = lambda s: np.array([np.cos(0.5 * np.pi * s), np.sin(0.5 * np.pi * s)])
    tangent = lambda s: 0.5 * np.pi * np.array([-np.sin(0.5 * np.pi * s), np.cos(0.5 * np.pi * s)])
    lf = LineicForce(curve, lambda s: np.array([1.0, 0.0]), 8, tangent if with_tangent else None)
    assert abs(lf.length - np.pi / 2) < 1e-10
    sources = discretize_lineic(lf)
    for k, s in enumerate(sources):
        assert abs(s.F[0] - np.pi / 16) < 1e-10
        angle = np.arctan2(s.x0[1], s.x0[0])
        assert abs(angle - (k + 0.5) * np.pi / 16) < 1e-9


def test_degenerate_curve_rejected():
    with pytest.raises(ValueError):
        LineicForce.polyline([(0.3, 0.3), (0.3, 0.3)], (1.0, 0.0), 2)
    with pytest.raises(ValueError):
        discretize_lineic(LineicForce.polyline([(0.3, 0.3), (0.4, 0.3)], (1.0, 0.0), 0))


def test_arc_length_of_variable_speed_curve_without_tangent():
    # speed sqrt(c^2 + k^2 s^2) has a closed-form antiderivative
    c, k = 0.8, 1.6
    lf = LineicForce(lambda s: np.array([0.1 + c * s, 0.1 + 0.5 * k * s * s]), lambda s: np.ones(2), 4)
    for s in (0.001, 0.3, 1.0):
        exact = 0.5 * s * np.hypot(c, k * s) + c**2 / (2 * k) * np.arcsinh(k * s / c)
        assert abs(lf.arc_length(s) - exact) < 1e-10
