"""Implicit and parametric nodal curves, smoothing, section bases and the incidence system."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from minitwistor.binary_forms import BinaryForm, ProjPoint
from minitwistor.nodal_curve import (DegenerateImage, DegreeUnachievable, ImplicitCurve, ParamCurve,
                                     constraint_jacobian, constraint_residual, find_nodes, implicitize,
                                     is_ordinary_pair, node_pairs_of, parametrize, preimages_of,
                                     proportionality_error, reducible_seed, section_basis, severi_corank,
                                     smooth_one_node)
from minitwistor.surface_config import random_config, transversality_check

B = BinaryForm

# frozen from tools/oracles/forms_oracle.py: resultant of the map below, rows u-degree, columns v-degree
ORACLE_CURVE = ParamCurve(B([1, 0, 0]), B([0, 1, 1]), B([1, 0, 2]), B([0, 1, -1]))
ORACLE_F = np.array([[0, 2, 3], [-2, 0, 4], [1, 4, 4]])
ORACLE_NODE = (ProjPoint(1, -1), ProjPoint(1, -1))
ORACLE_PAIR = (ProjPoint(1, -0.5 + 0.5j * np.sqrt(3)), ProjPoint(1, -0.5 - 0.5j * np.sqrt(3)))


def test_implicitize_matches_resultant_oracle():
    F = implicitize(ORACLE_CURVE)
    assert proportionality_error(F.coeffs, ORACLE_F) < 1e-12


def test_nodes_match_oracle():
    F = implicitize(ORACLE_CURVE)
    nodes = find_nodes(F)
    assert len(nodes) == 1
    assert nodes[0][0].distance(ORACLE_NODE[0]) < 1e-9 and nodes[0][1].distance(ORACLE_NODE[1]) < 1e-9
    (s, t), = node_pairs_of(ORACLE_CURVE)
    got = sorted([s.to_affine(), t.to_affine()], key=lambda z: z.imag)
    want = sorted([ORACLE_PAIR[0].to_affine(), ORACLE_PAIR[1].to_affine()], key=lambda z: z.imag)
    assert_allclose(got, want, atol=1e-10)
    assert is_ordinary_pair(ORACLE_CURVE, s, t)


def test_diagonal_map():
    c = ParamCurve(B([1, 0]), B([0, 1]), B([1, 0]), B([0, 1]))
    F = implicitize(c)
    assert proportionality_error(F.coeffs, np.array([[0, 1], [-1, 0]])) < 1e-14
    p = parametrize(ImplicitCurve(np.array([[0, -1], [1, 0]])))
    for t in (0.3, -1.2 + 0.4j):
        u, v = p.image(ProjPoint(1, t))
        assert u.distance(v) < 1e-12
    assert find_nodes(F) == []


def test_non_birational_map_rejected():
    with pytest.raises(DegenerateImage):
        implicitize(ParamCurve(B([1, 0, 0]), B([0, 0, 1]), B([1, 0, 0]), B([0, 0, 1])))


@pytest.mark.parametrize("m", [2, 3])
def test_reducible_seed(m):
    cfg = random_config(m, 1, 3)
    seed = reducible_seed(cfg)
    assert len(seed.nodes) == m and len(find_nodes(seed)) == m
    inter = transversality_check(cfg.curves)
    for p in inter:
        assert min(max(p[0].distance(q[0]), p[1].distance(q[1])) for q in seed.nodes) < 1e-8
    for p in cfg.points:
        assert abs(seed(p)) < 1e-10 * seed.scale()


@pytest.mark.parametrize("m", [2, 3, 4])
def test_smoothing_each_node(m):
    cfg = random_config(m, 1, 1)
    seed = reducible_seed(cfg)
    members = []
    for drop in range(m):
        keep = [i for i in range(m) if i != drop]
        sm = smooth_one_node(seed, keep, points=cfg.points)
        assert len(find_nodes(sm)) == m - 1
        for p in cfg.points:
            assert abs(sm(p)) < 1e-9 * sm.scale()
        members.append(sm.normalized().coeffs)
    for i in range(m):
        for j in range(i):
            assert proportionality_error(members[i], members[j]) > 1e-6


@pytest.mark.parametrize("m", [2, 3, 4])
def test_parametrize_round_trip(m):
    cfg = random_config(m, 1, 2)
    sm = smooth_one_node(reducible_seed(cfg), list(range(m - 1)), points=cfg.points)
    pc = parametrize(sm, points=cfg.points)
    assert pc.U0.degree == 2 and pc.V0.degree == m
    assert len(pc.node_pairs) == m - 1
    for s, t in pc.node_pairs:
        a, b = pc.image(s), pc.image(t)
        assert a[0].distance(b[0]) < 1e-8 and a[1].distance(b[1]) < 1e-8 and s.distance(t) > 1e-3
    for z, p in zip(pc.base_preimages, cfg.points):
        q = pc.image(z)
        assert q[0].distance(p[0]) < 1e-6 and q[1].distance(p[1]) < 1e-6
    assert proportionality_error(implicitize(pc).coeffs, sm.coeffs) < 1e-6
    # and the other way round
    pc2 = parametrize(implicitize(pc), points=cfg.points)
    assert proportionality_error(implicitize(pc2).coeffs, sm.coeffs) < 1e-6


def test_preimages_of_node_and_generic_point(member2):
    _, c = member2
    s, t = c.node_pairs[0]
    assert len(preimages_of(c, c.image(s))) == 2
    assert len(preimages_of(c, c.image(ProjPoint(1, 0.3 + 0.2j)))) == 1


def test_section_basis_example():
    sb = section_basis(2, [(0, 1)])
    assert len(sb.basis) == 2
    f2 = sb.basis[1] / sb.basis[1][2]
    assert_allclose(f2, [0, -1, 1], atol=1e-14)


def _brute_dim(k, pairs):
    A = np.array([[a ** d - b ** d for d in range(k + 1)] for a, b in pairs]).reshape(-1, k + 1)
    return k + 1 - np.linalg.matrix_rank(A, tol=1e-9)


@given(st.integers(2, 12), st.integers(1, 11), st.integers(0, 2 ** 31))
def test_section_basis_dimension_law(k, delta, seed):
    if delta >= k:
        return
    rng = np.random.default_rng(seed)
    pairs = [tuple(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(delta)]
    sb = section_basis(k, pairs)
    assert len(sb.basis) == k + 1 - delta == _brute_dim(k, pairs)
    degs = [int(np.max(np.nonzero(np.abs(f) > 1e-12)[0])) for f in sb.basis]
    assert degs == [0] + list(range(delta + 1, k + 1))
    for f in sb.basis:
        for a, b in pairs:
            pa = np.polyval(f[::-1], a)
            pb = np.polyval(f[::-1], b)
            assert abs(pa - pb) < 1e-7 * max(1.0, np.abs(f).max() * max(abs(a), abs(b), 1) ** k)
    # 1 and f_k have no common zero
    assert np.abs(sb.basis[-1][-1]) > 0


def test_section_basis_degenerate_pairs():
    with pytest.raises((DegreeUnachievable, ValueError)):
        section_basis(2, [(0, 1), (0, 1), (2, 3)])


def test_constraint_residual_and_corank(member2, member3):
    for cfg, c in (member2, member3):
        assert np.linalg.norm(constraint_residual(c, cfg)) < 1e-10
        assert severi_corank(c, cfg) == 3
        J, G = constraint_jacobian(c, cfg)
        assert np.linalg.matrix_rank(G, tol=1e-8) == 5
        assert np.abs(J @ G).max() < 1e-8 * np.abs(J).max() * np.abs(G).max()


def test_constraint_jacobian_finite_difference(member2):
    cfg, c = member2
    J, _ = constraint_jacobian(c, cfg)
    v = c.coeff_vector()
    r0 = constraint_residual(c, cfg)
    for idx in (0, 4, 7):
        errs = []
        for eps in (1e-4, 1e-5):
            w = v.copy()
            w[idx] += eps
            r = constraint_residual(c.with_coeffs(w), cfg)
            errs.append(np.abs(r - r0 - eps * J[:, idx]).max())
        # the remainder is second order in eps
        assert errs[1] < errs[0] / 50 + 1e-13
