"""Surrogate metric and Weyl connection fits, and the Einstein-Weyl residual."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from minitwistor.geodesic_trace import tangent_at
from minitwistor.severi import trace_path
from minitwistor.weyl_fit import (IllConditionedFit, MetricFitter, ProjectionFailure, RankDeficientFit,
                                  SurrogateModel, WeylFormFitter, build_chart, chart_state, connection,
                                  design, exponents, fit_metric, flat_metric, polydisc, polynomial_form,
                                  polynomial_metric, ew_residual, run_pipeline, space_form_metric,
                                  straight_lines, synthetic_geodesics, zero_form)


def test_exponent_count():
    assert exponents(4).shape == (35, 3)
    assert exponents(0).tolist() == [[0, 0, 0]]


@given(st.integers(0, 2 ** 31))
def test_design_derivatives(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(2, 3)) * 0.03 + 0j
    E = exponents(3)
    V, dV, ddV = design(X, E, 0.05, order=2)
    h = 1e-6
    for i in range(3):
        Xp = X.copy()
        Xp[:, i] += h
        Vp, dVp, _ = design(Xp, E, 0.05, order=1)
        assert_allclose((Vp - V) / h, dV[:, i], rtol=1e-4, atol=1e-4 * np.abs(dV).max())
        assert_allclose((dVp - dV) / h, ddV[:, i], rtol=1e-4, atol=1e-4 * np.abs(ddV).max())


def test_constant_metric_recovered_exactly(rng):
    X = polydisc(250, 0.05, rng)
    G0 = np.array([[2, 0.5, 0], [0.5, 1, 0.1j], [0, 0.1j, 3]])
    f = MetricFitter(degree=0, radius=0.05).fit(X, np.broadcast_to(G0, (250, 3, 3)))
    assert_allclose(f.predict(X[:3]), np.broadcast_to(G0, (3, 3, 3)), atol=1e-14)
    assert f.residual_ < 1e-14


def test_metric_fit_too_few_samples(rng):
    with pytest.raises(IllConditionedFit):
        MetricFitter(degree=4).fit(polydisc(20, 0.05, rng), np.ones((20, 3, 3)))


def test_metric_fit_planar_samples(rng):
    # samples confined to a plane cannot separate monomials in the third coordinate
    X = polydisc(300, 0.05, rng)
    X[:, 2] = 0
    with pytest.raises(IllConditionedFit):
        MetricFitter(degree=4, radius=0.05).fit(X, np.ones((300, 3, 3)))


def test_chart_projection_fails_far_out(member2):
    _, c = member2
    chart = build_chart(c)
    with pytest.raises(ProjectionFailure):
        chart_state(chart, np.array([50.0, -40.0j, 30.0]))


def test_straight_lines_give_zero_form(rng):
    X = polydisc(300, 0.05, rng)
    X, TA = straight_lines(X, rng)
    f = WeylFormFitter(flat_metric, degree=2, radius=0.05).fit(X, TA)
    w, dw = f.derivatives(X)
    assert np.abs(w).max() < 1e-10
    G = connection(*flat_metric(X)[:2], w)
    assert np.abs(G).max() < 1e-10


def test_synthetic_weyl_form_recovered(rng):
    K = exponents(2).shape[0]
    r = 0.05
    gc = np.zeros((K, 6), dtype=complex)
    gc[0] = [1, 0, 0, 1, 0, 1]
    gc[1:] = 0.05 * (rng.normal(size=(K - 1, 6)) + 1j * rng.normal(size=(K - 1, 6)))
    wc = rng.normal(size=(K, 3)) + 1j * rng.normal(size=(K, 3))
    metric, form = polynomial_metric(gc, r), polynomial_form(wc, r)
    X = polydisc(400, r, rng)
    X, TA = synthetic_geodesics(metric, form, X, rng)
    f = WeylFormFitter(metric, degree=2, radius=r).fit(X, TA)
    Xt = polydisc(50, 0.8 * r, rng)
    err = np.abs(f.predict(Xt) - form(Xt)[0]).max() / np.abs(form(Xt)[0]).max()
    assert err < 1e-3
    assert f.residual_ < 1e-8


def test_rank_deficient_geodesics(rng):
    X = polydisc(5, 0.05, rng)
    X, TA = straight_lines(X, rng)
    with pytest.raises(RankDeficientFit):
        WeylFormFitter(flat_metric, degree=2, radius=0.05).fit(X, TA)


def test_flat_and_space_form_residuals(rng):
    flat = SurrogateModel(None, flat_metric, zero_form, 0.05)
    rep = ew_residual(flat, rng=rng)
    assert rep.residual_tracefree == 0.0 and rep.compat_residual == 0.0
    sf = SurrogateModel(None, space_form_metric(0.7), zero_form, 0.5)
    rep = ew_residual(sf, rng=rng)
    assert rep.residual_tracefree < 1e-10
    # Ric = 2 kappa g for the three-dimensional space form
    assert abs(rep.lambda_values[0] - 1.4) < 1e-10


def test_connection_torsion_free(rng):
    K = exponents(1).shape[0]
    gc = np.zeros((K, 6), dtype=complex)
    gc[0] = [1, 0, 0, 1, 0, 1]
    gc[1:] = 0.1 * rng.normal(size=(K - 1, 6))
    metric = polynomial_metric(gc, 0.1, degree=1)
    X = polydisc(10, 0.05, rng)
    g, dg, _ = metric(X)
    G = connection(g, dg, rng.normal(size=(10, 3)))
    assert_allclose(G, np.swapaxes(G, 2, 3), atol=1e-14)


def test_chart_metric_smooth(member2):
    _, c = member2
    chart = build_chart(c)
    x0 = np.array([0.004, -0.003j, 0.002])
    e = np.array([1.0, 0.5, -0.3j])

    def g(x):
        return chart.metric(chart_state(chart, x))

    d3 = (g(x0 + 1e-3 * e) - g(x0 - 1e-3 * e)) / 2e-3
    d4 = (g(x0 + 1e-4 * e) - g(x0 - 1e-4 * e)) / 2e-4
    # central differences: the two estimates agree to O(h^2)
    assert np.abs(d3 - d4).max() < 1e-4 * np.abs(d4).max()


@pytest.fixture(scope="module")
def pipeline2():
    from minitwistor.geodesic_trace import member_of
    from minitwistor.surface_config import random_config
    base = member_of(random_config(2, 1, 3))
    model, rep = run_pipeline(base, radius=0.05, n_samples=300, n_arcs=30, seed=0)
    return base, model, rep


def test_pipeline_residuals(pipeline2):
    _, model, rep = pipeline2
    assert rep.metric_fit_residual < 1e-6
    assert rep.geodesic_fit_residual < 1e-3
    assert rep.compat_residual < 1e-10
    assert rep.residual_tracefree < 5e-2


def test_fit_metric_needs_samples(pipeline2):
    _, model, _ = pipeline2
    X = np.zeros((10, 3), dtype=complex)
    with pytest.raises(IllConditionedFit):
        fit_metric(model.chart, (X, np.ones((10, 3, 3))))


def test_held_out_null_geodesics(pipeline2):
    # null geodesics were not used in the fit; they must satisfy the fitted geodesic equation
    base, model, _ = pipeline2
    chart = model.chart
    n = chart.system.n_unknowns
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        y = chart_state(chart, polydisc(1, 0.02, rng)[0])
        c = chart.curve(y)
        z = type(c.base_preimages[0])(1.0, complex(*rng.normal(size=2) * 0.5))
        p = c.image(z)
        sysa = chart.system.with_constraints([tangent_at(p, c.tangent(z))], [z])
        pts, _ = trace_path(sysa, sysa.pack(c, [z]), 5, h=0.004, h_max=0.004, check_nodes=False)
        for pp in pts:
            if pp.system.charts != chart.system.charts:
                continue
            x = chart.coords(pp.y[:n])
            J = pp.system.jacobian(pp.y)
            tt = np.linalg.lstsq(J, -pp.system.second_derivative(pp.y, pp.tangent), rcond=None)[0]
            T, A = chart.L @ pp.tangent[:n], chart.L @ tt[:n]
            g, dg, _ = model.metric(x[None])
            w, _ = model.form(x[None])
            r = A + np.einsum("kij,i,j->k", connection(g, dg, w)[0], T, T)
            # the geodesic equation holds up to a multiple of the velocity
            perp = r - T * np.vdot(T, r) / np.vdot(T, T)
            worst = max(worst, np.linalg.norm(perp) / max(np.linalg.norm(A), np.linalg.norm(r - perp), 1e-300))
    assert worst < 1e-2
