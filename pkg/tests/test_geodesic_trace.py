"""Continuation of geodesics, null geodesics, nodal loci and null surfaces."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from minitwistor.binary_forms import ProjPoint, roots
from minitwistor.conformal import gram_of, metric_at, null_plane, null_plane_to_point, theta_of
from minitwistor.geodesic_trace import (ChartFrame, DegenerateInput, TraceResult, branch_enumerate,
                                        empty_locus_probe, member_of, render_displacement_svg,
                                        trace_geodesic, trace_nodal_locus, trace_null_geodesic,
                                        trace_null_surface)
from minitwistor.nodal_curve import find_nodes, implicitize, incidence_values
from minitwistor.severi import corank
from minitwistor.surface_config import cstar_config

ZP, ZQ = ProjPoint(1, 0.3 + 0.2j), ProjPoint(1, -0.7 + 0.5j)


def _on(curve, z, p, tol):
    scale = np.abs(curve.coeff_vector()).max()
    return np.abs(incidence_values(curve, z, p)).max() < tol * scale


@pytest.fixture(scope="module")
def geodesic2(member2):
    _, c = member2
    p, q = c.image(ZP), c.image(ZQ)
    return p, q, trace_geodesic(c, p, q, steps=40)


def test_geodesic_states_pass_through_p_and_q(geodesic2):
    p, q, tr = geodesic2
    assert len(tr.states) == 41 and tr.diagnostics["stopped"] is None
    for c, (zp, zq) in zip(tr.states, tr.tracked):
        assert _on(c, zp, p, 1e-9) and _on(c, zq, q, 1e-9)
    assert tr.diagnostics["max_residual"] < 1e-9


def test_geodesic_tangent_non_null(geodesic2):
    _, _, tr = geodesic2
    assert tr.diagnostics["non_null"]
    assert min(tr.diagnostics["null_measure"]) > 1e-4


def test_geodesic_transversal_intersection(geodesic2):
    # joint constraint system has a one-dimensional solution set at every state
    _, _, tr = geodesic2
    for pp in tr.path[::5]:
        assert corank(pp.system.jacobian(pp.y)) == 1


def test_node_count_preserved(member3):
    _, c = member3
    tr = trace_geodesic(c, c.image(ZP), c.image(ZQ), steps=30)
    assert set(tr.diagnostics["node_counts"]) == {2}
    for c2 in tr.states[::10]:
        nodes = find_nodes(implicitize(c2))
        assert len(nodes) == 2
        for s, _ in c2.node_pairs:
            im = c2.image(s)
            assert min(max(im[0].distance(n[0]), im[1].distance(n[1])) for n in nodes) < 1e-6


def test_reverse_direction(member2):
    _, c = member2
    p, q = c.image(ZP), c.image(ZQ)
    a = trace_geodesic(c, p, q, steps=3)
    b = trace_geodesic(c, p, q, steps=3, reverse=True)
    da = a.states[1].coeff_vector() - a.states[0].coeff_vector()
    db = b.states[1].coeff_vector() - b.states[0].coeff_vector()
    assert np.real(np.vdot(da, db)) < 0


def test_same_point_twice_rejected(member2):
    cfg, c = member2
    p = c.image(ZP)
    with pytest.raises(DegenerateInput):
        trace_geodesic(c, p, p)
    with pytest.raises(DegenerateInput):
        empty_locus_probe(cfg, p, p, n_starts=1, base=c)


def test_nodal_locus(member2):
    _, c = member2
    s, t = c.node_pairs[0]
    p = c.image(s)
    tr = trace_nodal_locus(c, p, steps=30)
    assert tr.diagnostics["non_null"]
    for st, (a, b) in zip(tr.states, tr.tracked):
        assert _on(st, a, p, 1e-9) and _on(st, b, p, 1e-9)
        assert a.distance(b) > 1e-3
    # the tangent quadratic vanishes at the two node preimages, which are distinct
    assert max(tr.diagnostics["theta_at_pair"]) < 1e-8


def test_nodal_locus_needs_a_node(member2):
    _, c = member2
    with pytest.raises(DegenerateInput):
        trace_nodal_locus(c, c.image(ZP))


def test_null_geodesic(member2):
    _, c = member2
    p = c.image(ZP)
    tr = trace_null_geodesic(c, p, steps=30)
    assert tr.diagnostics["null"] and max(tr.diagnostics["null_measure"]) < 1e-8
    # the tangent quadratic has a double root at the tracked preimage
    for pp, (z,) in zip(tr.path[::10], tr.tracked[::10]):
        th = theta_of(pp.system.curve(pp.y), pp.tangent[:pp.system.ncoef])
        (r, k), = roots(th.as_form(), cluster_tol=1e-5)
        assert k == 2 and r.distance(z) < 1e-6
    # the null direction inside the null plane at p is unique: restricted gram has rank one
    met = metric_at(c)
    G = gram_of([t.theta for t in null_plane(c, ZP, met).span])
    s = np.linalg.svd(G, compute_uv=False)
    assert s[1] < 1e-10 * s[0]


def test_null_surface_degenerate(member2):
    _, c = member2
    p = c.image(ZP)
    ns = trace_null_surface(c, p, grid=5)
    assert len(ns.states) == 25
    assert max(ns.degeneracy) < 1e-6
    assert max(ns.witness_error) < 1e-6
    # every state contains p, so W_{p,q} through a state stays inside W_p
    for st, z in zip(ns.states, ns.tracked):
        assert _on(st, z, p, 1e-9)
        pt = null_plane_to_point(st, null_plane(st, z))
        assert pt.point[0].distance(p[0]) < 1e-8 and pt.point[1].distance(p[1]) < 1e-8


def test_branch_enumerate_cases(member3):
    _, c = member3
    (s1, _), (s2, _) = c.node_pairs
    generic_p, generic_q = c.image(ZP), c.image(ZQ)
    n1, n2 = c.image(s1), c.image(s2)
    assert len(branch_enumerate(c, generic_p, generic_q)) == 1
    two = branch_enumerate(c, n1, generic_q)
    assert len(two) == 2 and all(b.p_is_node and not b.q_is_node for b in two)
    four = branch_enumerate(c, n1, n2)
    assert len(four) == 4
    for seed in two + four:
        q = generic_q if not seed.q_is_node else n2
        tr = trace_geodesic(c, n1, q, steps=20, zp=seed.zp, zq=seed.zq)
        assert len(tr.states) == 21 and tr.diagnostics["stopped"] is None


def test_empty_locus_probe():
    cfg = cstar_config(2, [1], [0, 1], [2, 3], 0.7 + 0.3j)
    base = member_of(cfg)
    # v = 0 minus the blown-up points is a contracted curve
    p = (ProjPoint(1, 0.37 + 0.1j), ProjPoint(1, 0))
    rep = empty_locus_probe(cfg, p, n_starts=50, base=base)
    assert rep.converged == 0 and rep.n_starts == 50
    generic = (ProjPoint(1, 0.37 + 0.1j), ProjPoint(1, 0.5 - 0.2j))
    assert empty_locus_probe(cfg, generic, n_starts=3, base=base).converged > 0


def test_trace_json_round_trip(geodesic2):
    _, _, tr = geodesic2
    d = json.loads(json.dumps(tr.to_json(), default=str))
    back = TraceResult.from_json(d)
    assert len(back.states) == len(tr.states)
    assert_allclose(back.states[-1].coeff_vector(), tr.states[-1].coeff_vector(), atol=1e-15)


def test_svg(geodesic2):
    _, _, tr = geodesic2
    a = render_displacement_svg(tr)
    assert a.startswith("<svg") or a.startswith("<?xml")
    assert a == render_displacement_svg(tr)
    assert "<polyline" in a or "<path" in a
    with pytest.raises(ValueError):
        render_displacement_svg(TraceResult("geodesic", [], [], {}))


def test_chart_frame(member2):
    _, c = member2
    fr = ChartFrame.at(c)
    G = fr.metric(fr.y0)
    assert_allclose(G / G[0, 0], np.eye(3), atol=1e-10)
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.normal(size=3) + 1j * rng.normal(size=3)
        x *= 0.02 / np.abs(x).max()
        assert np.abs(fr.coords(fr.state(x)) - x).max() < 1e-8
