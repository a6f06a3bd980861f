"""Quadratic classes of tangent vectors, the discriminant metric and null planes."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from minitwistor.binary_forms import (DivisionResidualTooLarge, ProjPoint, QuadraticClass,
                                      disc_quadratic, roots)
from minitwistor.conformal import (Q_ABC, NoCommonRoot, base_product, common_root, gram_of, is_null,
                                   metric_at, normal_component, null_plane, null_plane_to_point,
                                   point_to_plane, proportionality, tangent_deltas, theta_of, vc_oracle,
                                   vc_theta)
from minitwistor.nodal_curve import gauge_directions


def test_polarization_in_abc_coordinates():
    E = [QuadraticClass(*row) for row in np.eye(3)]
    assert_allclose(gram_of(E), [[0, 0, -2], [0, 1, 0], [-2, 0, 0]])
    assert_allclose(Q_ABC, [[0, 0, -2], [0, 1, 0], [-2, 0, 0]])
    assert disc_quadratic(QuadraticClass(0, 1, 0)) == 1 and not is_null(QuadraticClass(0, 1, 0))
    assert is_null(QuadraticClass(1, 0, 0))


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_gram_is_polarized_discriminant(x):
    q1, q2 = QuadraticClass(*x[:3]), QuadraticClass(*x[3:])
    G = gram_of([q1, q2])
    s = QuadraticClass(*(q1.as_array() + q2.as_array()))
    pol = 0.5 * (disc_quadratic(s) - disc_quadratic(q1) - disc_quadratic(q2))
    assert abs(G[0, 1] - pol) < 1e-10 and abs(G[0, 0] - disc_quadratic(q1)) < 1e-10


def test_gauge_kernel(member2):
    _, c = member2
    G = gauge_directions(c)
    n = c.coeff_vector().size
    for k in range(5):
        assert normal_component(c, G[:n, k]).norm() < 1e-10 * np.linalg.norm(G[:n, k])


def test_normal_form_vanishes_at_base_preimages(member2, rng):
    _, c = member2
    D = tangent_deltas(c)
    d = D @ (rng.normal(size=3) + 1j * rng.normal(size=3))
    nf = normal_component(c, d)
    assert nf.degree == 2 * c.m + 2
    for z in c.base_preimages:
        assert abs(nf(z.normalized())) < 1e-10 * nf.norm()
    assert np.linalg.norm(normal_component(c, 2 * d).coeffs - 2 * nf.coeffs) < 1e-12 * nf.norm()


def test_non_tangent_delta_rejected(member2, rng):
    _, c = member2
    d = rng.normal(size=c.coeff_vector().size)
    with pytest.raises(DivisionResidualTooLarge):
        theta_of(c, d)


def test_tangent_basis_rank(member2, member3):
    for _, c in (member2, member3):
        met = metric_at(c)
        T = np.array([t.abc for t in met.basis])
        assert np.linalg.matrix_rank(T, tol=1e-8 * np.abs(T).max()) == 3
        assert met.rank == 3
        assert_allclose(met.gram, met.gram.T, atol=1e-14)


def test_point_constraint_delta_has_root_at_point(member2):
    _, c = member2
    z = ProjPoint(1, 0.4 - 0.3j)
    plane = null_plane(c, z)
    for t in plane.span:
        f = t.theta.as_form()
        assert abs(f(z)) < 1e-10 * f.norm()


def test_theta_trivialization_changes_only_scale(member2, rng):
    _, c = member2
    d = tangent_deltas(c) @ rng.normal(size=3)
    a = theta_of(c, d).as_array()
    for idx in range(len(c.base_preimages)):
        _, res = proportionality(theta_of(c, d, index=idx).as_array(), a)
        assert res < 1e-10


def test_null_plane_round_trip(member2, member3, rng):
    for _, c in (member2, member3):
        met = metric_at(c)
        for _ in range(20):
            z = ProjPoint(1.0, complex(*rng.normal(size=2)))
            plane = point_to_plane(c, z, met)
            pt = null_plane_to_point(c, plane)
            assert pt.witness_root.distance(z) < 1e-8 and not pt.branch
            im = c.image(z)
            assert pt.point[0].distance(im[0]) < 1e-8 and pt.point[1].distance(im[1]) < 1e-8
            # the plane re-derived from the point spans the same quadratics
            again = point_to_plane(c, pt.witness_root, met)
            A = np.array([t.abc for t in plane.span] + [t.abc for t in again.span])
            assert np.linalg.matrix_rank(A, tol=1e-8 * np.abs(A).max()) == 2
            # restricted gram of a null plane is degenerate
            G = gram_of([t.theta for t in plane.span])
            assert abs(np.linalg.det(G)) < 1e-10 * np.linalg.norm(G) ** 2


def test_node_preimage_gives_branch(member2):
    _, c = member2
    s, t = c.node_pairs[0]
    pt = null_plane_to_point(c, null_plane(c, s))
    assert pt.branch and pt.node_index == 0


def test_non_null_plane_rejected():
    with pytest.raises(NoCommonRoot):
        common_root([QuadraticClass(1, 0, 0), QuadraticClass(0, 0, 1)])


def test_two_null_planes_meet_in_non_null_line(member2, rng):
    _, c = member2
    met = metric_at(c)
    for _ in range(10):
        z1, z2 = (ProjPoint(1.0, complex(*rng.normal(size=2))) for _ in range(2))
        A = np.array([t.abc for t in null_plane(c, z1, met).span])
        Bm = np.array([t.abc for t in null_plane(c, z2, met).span])
        # common direction: solve x A = y B
        M = np.vstack([A, -Bm]).T
        _, _, vh = np.linalg.svd(M)
        x = vh[-1].conj()
        theta = QuadraticClass(*(x[:2] @ A))
        r = [p for p, _ in roots(theta.as_form())]
        assert abs(disc_quadratic(theta)) > 1e-6 * np.linalg.norm(theta.as_array()) ** 2
        assert len(r) == 2
        for z in (z1, z2):
            assert min(z.distance(w) for w in r) < 1e-8


def test_null_cone_independent_of_pins(member2, rng):
    # tangent directions computed with a different gauge pinning give the same null conic
    from minitwistor.severi import null_basis, system_for
    _, c = member2
    n = c.coeff_vector().size
    sysA, yA = system_for(c, pins=(0, 1, 2))
    sysB, yB = system_for(c, pins=(3, 1, 0))
    TA = np.array([theta_of(c, d).as_array() for d in null_basis(sysA.jacobian(yA), 3)[:n].T])
    TB = np.array([theta_of(c, d).as_array() for d in null_basis(sysB.jacobian(yB), 3)[:n].T])
    # both span all quadratics; a null theta in A-coordinates is null in B-coordinates
    x = np.linalg.solve(TA.T, np.array([1.0, -2.0, 1.0]))       # (z0 - z1)^2
    y = np.linalg.solve(TB.T, np.array([1.0, -2.0, 1.0]))
    assert abs(x @ gram_of([QuadraticClass(*r) for r in TA]) @ x) < 1e-10 * np.linalg.norm(x) ** 2
    assert abs(y @ gram_of([QuadraticClass(*r) for r in TB]) @ y) < 1e-10 * np.linalg.norm(y) ** 2


def test_vc_oracle(member2, member3):
    for _, c in (member2, member3):
        V = vc_oracle(c)
        assert V.dimension == 3
        for z in (p for pair in c.node_pairs for p in pair):
            assert abs(V.f(z.normalized())) < 1e-10 * V.f.norm()


def test_vc_model_matches_map_model(member3, rng):
    _, c = member3
    D = tangent_deltas(c)
    A, Bv = [], []
    for _ in range(20):
        d = D @ (rng.normal(size=3) + 1j * rng.normal(size=3))
        A.append(theta_of(c, d).as_array())
        Bv.append(vc_theta(c, d).as_array())
    _, res = proportionality(np.concatenate(A), np.concatenate(Bv))
    assert res < 1e-7


def test_base_product_monic(member2):
    _, c = member2
    f = base_product(c)
    nz = np.flatnonzero(np.abs(f.coeffs) > 1e-14)
    assert abs(f.coeffs[nz[0]] - 1) < 1e-14
    assert f.degree == len(c.base_preimages)
