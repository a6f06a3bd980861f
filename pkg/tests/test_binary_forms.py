"""Binary forms: evaluation, roots, exact division, Wronskians."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from minitwistor import binary_forms as bf
from minitwistor.binary_forms import (BinaryForm, DivisionResidualTooLarge, ProjPoint, QuadraticClass,
                                      disc_quadratic, divide_exact, from_roots, mobius_through, roots,
                                      wronskian)

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def proj(z):
    return ProjPoint(1.0, z)


def _match(found, expected, tol):
    left = list(found)
    for p in expected:
        k = int(np.argmin([p.distance(q) for q in left]))
        assert p.distance(left.pop(k)) < tol


def test_eval_examples():
    assert BinaryForm([1, 0, 0])(ProjPoint(1, 0)) == 1
    assert BinaryForm([0, 1, 0])(ProjPoint(1, 1)) == 1
    assert BinaryForm([1, 0, -1])(ProjPoint(1, 1)) == 0


@given(st.lists(cplx, min_size=3, max_size=3), cplx, cplx)
def test_eval_homogeneity(c, z, lam):
    if abs(lam) < 1e-3:
        lam = 1.0
    f = BinaryForm(c)
    p = ProjPoint(1.0, z)
    q = ProjPoint(lam, lam * z)
    assert abs(f(q) - lam ** 2 * f(p)) <= 1e-9 * max(1.0, abs(lam ** 2 * f(p)))


def test_from_roots_examples():
    f = from_roots([ProjPoint(0, 1)])
    assert abs(f.coeffs[1]) < 1e-15 and abs(f.coeffs[0]) > 0
    g = from_roots([ProjPoint(1, 0), ProjPoint(0, 1)])
    assert_allclose(np.abs(g.coeffs), [0, 1, 0], atol=1e-15)
    # frozen from tools/oracles/forms_oracle.py: (z0 - z1)(-z0 - z1) has coefficients (-1, 0, 1)
    h = from_roots([ProjPoint(1, 1), ProjPoint(1, -1)])
    assert_allclose(h.coeffs / h.coeffs[0], [1, 0, -1], atol=1e-15)
    assert abs(h(ProjPoint(1, 1))) < 1e-15 and abs(h(ProjPoint(1, -1))) < 1e-15


def test_disc_examples():
    assert disc_quadratic(QuadraticClass(0, 1, 0)) == 1
    assert disc_quadratic(QuadraticClass(1, 0, 0)) == 0
    assert disc_quadratic(QuadraticClass(1, 5, 6)) == 1


def test_roots_examples():
    r = roots(BinaryForm([0, 1, 0]))
    assert sorted(k for _, k in r) == [1, 1]
    _match([p for p, _ in r], [ProjPoint(1, 0), ProjPoint(0, 1)], 1e-12)
    r = roots(BinaryForm([1, 0, 0]))
    assert len(r) == 1 and r[0][1] == 2 and r[0][0].distance(ProjPoint(0, 1)) < 1e-12


@given(st.lists(cplx, min_size=1, max_size=12))
def test_from_roots_round_trip(zs):
    pts = [proj(z) for z in zs]
    seps = [pts[i].distance(pts[j]) for i in range(len(pts)) for j in range(i)]
    if seps and min(seps) < 0.05:
        return
    r = roots(from_roots(pts), cluster_tol=1e-9)
    assert sum(k for _, k in r) == len(pts)
    _match([p for p, k in r for _ in range(k)], pts, 1e-8)


def test_round_trip_random_degree_four(rng):
    pts = [proj(complex(*rng.normal(size=2))) for _ in range(4)]
    _match([p for p, _ in roots(from_roots(pts))], pts, 1e-10)


def test_root_at_infinity_counted():
    f = BinaryForm([1, 2, 0])  # z0 (z0 + 2 z1)
    r = roots(f)
    assert any(p.is_infinite for p, _ in r)
    assert sum(k for _, k in r) == 2


@given(st.tuples(finite, finite, finite), st.floats(0, 2 * np.pi))
def test_disc_zero_iff_double_root(abc, phi):
    a, b, c = abc
    if abs(a) < 1e-3:
        return
    # constructed double root at a unit representative (cos phi, sin phi)
    r0, r1 = np.cos(phi), np.sin(phi)
    q = QuadraticClass(a * r1 * r1, -2 * a * r0 * r1, a * r0 * r0)
    assert abs(disc_quadratic(q)) < 1e-12 * a * a
    r = roots(q.as_form())
    assert len(r) == 1 and r[0][1] == 2
    assert r[0][0].distance(ProjPoint(r0, r1)) < 1e-6
    # generic quadratic
    q = QuadraticClass(a, b, c)
    if abs(disc_quadratic(q)) > 1e-2:
        assert [k for _, k in roots(q.as_form())] == [1, 1]


def test_divide_exact_examples(rng):
    q = divide_exact(BinaryForm([0, 1, 0, 0]), BinaryForm([1, 0]))
    assert_allclose(q.coeffs, [0, 1, 0], atol=1e-14)
    with pytest.raises(DivisionResidualTooLarge):
        divide_exact(BinaryForm([1, 0, 0]), BinaryForm([0, 1]))
    f = BinaryForm(rng.normal(size=3) + 1j * rng.normal(size=3))  # degree 2m-2 with m = 2
    th = BinaryForm(rng.normal(size=3) + 1j * rng.normal(size=3))
    assert_allclose(divide_exact(f * th, f).coeffs, th.coeffs, atol=1e-12)


def test_wronskian_examples():
    # frozen from tools/oracles/forms_oracle.py
    assert_allclose(wronskian(BinaryForm([1, 0]), BinaryForm([0, 1])).coeffs, [1])
    assert_allclose(wronskian(BinaryForm([1, 0, 0]), BinaryForm([0, 1, 0])).coeffs, [1, 0, 0])
    p = BinaryForm([1, 2, 3])
    assert wronskian(p, p).is_zero(1e-14)


@given(st.lists(cplx, min_size=3, max_size=3), st.lists(cplx, min_size=3, max_size=3),
       st.lists(cplx, min_size=3, max_size=3))
def test_wronskian_bilinear_antisymmetric(a, b, c):
    p, q, r = BinaryForm(a), BinaryForm(b), BinaryForm(c)
    assert_allclose(wronskian(p, q).coeffs, -wronskian(q, p).coeffs, atol=1e-10)
    assert_allclose(wronskian(p, q + r).coeffs, (wronskian(p, q) + wronskian(p, r)).coeffs, atol=1e-9)


@given(cplx, cplx)
def test_wronskian_affine_reparametrization(alpha, beta):
    # t -> alpha t + beta scales the Wronskian by alpha
    if abs(alpha) < 0.1:
        return
    p, q = BinaryForm([1, 2, -1]), BinaryForm([0.5, -1, 3])
    M = np.array([[1, 0], [beta, alpha]])
    lhs = wronskian(p.compose(M), q.compose(M))
    rhs = wronskian(p, q).compose(M)
    assert_allclose(lhs.coeffs, alpha * rhs.coeffs, atol=1e-9 * max(1, abs(alpha) ** 3, abs(beta) ** 3))


def test_extended_precision_refines_roots(monkeypatch):
    f = from_roots([proj(0.3 + 0.1j), proj(-1.2), proj(2.0 - 1j)])
    a = roots(f, extended=True)
    monkeypatch.setattr(bf, "EXTENDED_PRECISION", True)
    b = roots(f)
    _match([p for p, _ in a], [p for p, _ in b], 1e-14)


def test_mobius_through():
    src = [ProjPoint(1, 0), ProjPoint(0, 1), ProjPoint(1, 1)]
    dst = [proj(0.2j), proj(3.0), proj(-1 + 1j)]
    M = mobius_through(src, dst)
    for s, d in zip(src, dst):
        assert ProjPoint.from_array(M @ s.as_array()).distance(d) < 1e-12
