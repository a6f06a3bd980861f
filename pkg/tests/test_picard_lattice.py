"""Intersection lattice of blow-ups of the quadric."""

import pytest
from hypothesis import given, strategies as st

from minitwistor.picard_lattice import (DivisorClass, HypothesisViolation, LatticeContext,
                                        LatticeContextMismatch, adjunction_nodes, canonical_class,
                                        enumerate_candidate_minus_one_classes, family_class, intersect,
                                        lattice_report, minimality_report, self_intersection,
                                        severi_dimension, system_dimension)

small = st.integers(-4, 4)


def classes(n):
    return st.builds(DivisorClass, small, small, st.tuples(*[small] * n))


def test_intersect_examples():
    O11 = DivisorClass(1, 1)
    assert intersect(O11, O11) == 2
    C = family_class(2)
    assert intersect(C, C) == 4
    for j in range(4):
        assert intersect(C, DivisorClass.exceptional(j, 4)) == 1


def test_context_mismatch():
    with pytest.raises(LatticeContextMismatch):
        intersect(DivisorClass(1, 1, (1,)), DivisorClass(1, 1))
    with pytest.raises(ValueError):
        LatticeContext(-1)


@given(st.integers(0, 10).flatmap(lambda n: st.tuples(classes(n), classes(n), classes(n), small)))
def test_intersect_symmetric_bilinear(t):
    A, B, C, s = t
    assert intersect(A, B) == intersect(B, A)
    assert intersect(A + s * B, C) == intersect(A, C) + s * intersect(B, C)


@given(st.integers(0, 8).flatmap(classes))
def test_adjunction_parity_always_even(C):
    # m - m^2 is even, so C^2 + C.K never raises for an integral class
    assert (self_intersection(C) + intersect(C, canonical_class(C.n))) % 2 == 0
    adjunction_nodes(C)


def test_canonical_class():
    assert canonical_class(0) == DivisorClass(-2, -2)
    K = canonical_class(LatticeContext(4))
    assert intersect(K, K) == 4
    assert intersect(K, DivisorClass.exceptional(2, 4)) == -1


def test_adjunction_nodes():
    assert adjunction_nodes(family_class(3)) == 2
    assert adjunction_nodes(DivisorClass(1, 1)) == 0
    for m in range(2, 6):
        for k in range(1, m):
            D1, D2 = DivisorClass(k, 1), DivisorClass(m - k, 1)
            # the reducible pair meets in m nodes; an irreducible rational member of the sum class has m - 1
            assert intersect(D1, D2) == m
            assert adjunction_nodes(D1 + D2) == m - 1


def test_dimensions():
    assert severi_dimension(4, 1) == 3
    assert severi_dimension(2 * 5 - 4, 5 - 2) == 1
    assert severi_dimension(2, 0) == 3
    assert system_dimension(4, 1) == 4
    assert system_dimension(2, 0) == 3
    for m in range(2, 7):
        assert system_dimension(2 * m, m - 1) == m + 2
    with pytest.raises(HypothesisViolation):
        system_dimension(2, 3)


@pytest.mark.parametrize("m", range(2, 7))
def test_family_identities(m):
    C = family_class(m)
    c2, d = self_intersection(C), adjunction_nodes(C)
    assert (c2, d) == (2 * m, m - 1)
    assert severi_dimension(c2, d) == 3
    # codimension of W in |C| is the node count
    assert system_dimension(c2, d) - severi_dimension(c2, d) == d
    assert enumerate_candidate_minus_one_classes(None, C) == []
    assert minimality_report(None, C)["numerically_minimal"]


def test_no_minus_one_class_for_small_family():
    # frozen from tools/oracles/lattice_oracle.py (box search up to 6, no bound used)
    assert enumerate_candidate_minus_one_classes(4, DivisorClass(2, 2, (1, 1, 1, 1))) == []


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.integers(0, 4), st.integers(0, 4),
                                                      st.tuples(*[st.integers(0, 2)] * n))))
def test_candidates_satisfy_equations(t):
    k, l, m = t
    C = DivisorClass(k, l, m)
    if self_intersection(C) <= 0:
        return
    K = canonical_class(C.n)
    for E in enumerate_candidate_minus_one_classes(None, C):
        assert intersect(E, E) == -1 and intersect(K, E) == -1 and intersect(C, E) == 0


def test_candidates_match_brute_force():
    # box search over all small classes agrees with the bounded enumeration
    import itertools
    C = DivisorClass(2, 1, (1, 1, 0))
    K = canonical_class(3)
    brute = []
    for k, l in itertools.product(range(4), repeat=2):
        for m in itertools.product(range(4), repeat=3):
            E = DivisorClass(k, l, m)
            if (k, l) != (0, 0) and intersect(E, E) == -1 and intersect(K, E) == -1 and intersect(C, E) == 0:
                brute.append(E)
    assert sorted(map(str, brute)) == sorted(map(str, enumerate_candidate_minus_one_classes(None, C)))


def test_idle_point_not_minimal():
    C = family_class(2, n=5)
    rep = minimality_report(None, C)
    assert not rep["numerically_minimal"]
    assert DivisorClass.exceptional(4, 5) in rep["candidates"]
    rep = minimality_report(1, DivisorClass(1, 1, (0,)))
    assert not rep["numerically_minimal"]
    assert rep["candidates"][0] == DivisorClass.exceptional(0, 1)


def test_lattice_report():
    rep = lattice_report(DivisorClass.parse("2,2:1,1,1,1"))
    assert rep["severi_dim"] == 3 and rep["minimal"] is True
    assert rep["self_intersection"] == 4 and rep["nodes"] == 1 and rep["system_dim"] == 4
    assert rep["index"] == 2
    assert DivisorClass.parse("1,1:") == DivisorClass(1, 1)
