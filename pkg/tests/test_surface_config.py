"""Blow-up configurations on a split pair of graph curves."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from minitwistor.binary_forms import BinaryForm, ProjPoint
from minitwistor.picard_lattice import adjunction_nodes, family_class, self_intersection, severi_dimension
from minitwistor.surface_config import (ConditionStarViolated, GraphCurve, InvalidConfig, PointConfig,
                                        SplitCurvePair, TangentialIntersection, condition_star_check,
                                        cstar_config, random_config, remark_config_values,
                                        tangential_constant, transversality_check, validate)


def test_random_config_counts():
    c = random_config(2, 1, 0)
    assert c.n == 4 and c.assignment.count(1) == 2 and c.assignment.count(2) == 2
    c = random_config(3, 1, 1)
    assert c.assignment.count(1) == 2 and c.assignment.count(2) == 4
    assert c.curves.D1.degree == 1 and c.curves.D2.degree == 2
    assert len(transversality_check(c.curves)) == 3


def test_random_config_m4_valid():
    c = random_config(4, 2, 5)
    assert c.n == 8
    validate(c)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_points_on_their_curves(m):
    c = random_config(m, 1, m)
    for p, a in zip(c.points, c.assignment):
        own = c.curves.D1 if a == 1 else c.curves.D2
        other = c.curves.D2 if a == 1 else c.curves.D1
        assert own.residual(p) < 1e-10
        assert other.residual(p) > 1e-6
    C = family_class(m)
    assert self_intersection(C) == 2 * m and adjunction_nodes(C) == m - 1
    assert severi_dimension(2 * m, m - 1) == 3


def test_deterministic_in_seed():
    a = json.dumps(random_config(3, 2, 11).to_json())
    b = json.dumps(random_config(3, 2, 11).to_json())
    assert a == b


def test_json_round_trip():
    c = random_config(3, 1, 4)
    d = PointConfig.from_json(json.loads(json.dumps(c.to_json())))
    for (u, v), (u2, v2) in zip(c.points, d.points):
        assert u.distance(u2) < 1e-14 and v.distance(v2) < 1e-14
    validate(d)


def test_bad_arguments():
    with pytest.raises(ValueError):
        random_config(1, 1, 0)
    with pytest.raises(ValueError):
        random_config(3, 3, 0)


def test_validate_rejects_moved_point():
    c = random_config(2, 1, 0)
    u, v = c.points[0]
    c.points[0] = (u, ProjPoint(1.0, v.to_affine() + 0.1) if not v.is_infinite else ProjPoint(1.0, 0.1))
    with pytest.raises(InvalidConfig):
        validate(c)


def test_cstar_config_valid():
    c = cstar_config(2, [1], [0, 1], [2, 3], 0.7 + 0.3j)
    assert c.flags["cstar"] and not c.flags["toric"]
    assert c.curves.D1.degree == 1


def test_cstar_invariant_under_rescaling():
    lam = 2.5
    c1 = cstar_config(2, [1], [0.5, 1], [2, 3], 0.7)
    c2 = cstar_config(2, [1], [0.5 * lam, 1 * lam], [2 * lam, 3 * lam], 0.7)
    for (u1, v1), (u2, v2) in zip(c1.points, c2.points):
        assert abs(u2.to_affine() - lam * u1.to_affine()) < 1e-12
        assert v1.distance(v2) < 1e-14


def test_toric_config():
    c = cstar_config(2, [1], [0, None], [None, 0], 0.7)
    assert c.flags["toric"]
    assert condition_star_check(2, [1], [0, None], [None, 0])


def test_condition_star():
    assert condition_star_check(3, [1], [0.1, 0.2, 0.3], [1.1, 1.2, 1.3])
    a, b = remark_config_values()
    assert not condition_star_check(3, None, a, b)
    with pytest.raises(ConditionStarViolated):
        cstar_config(3, [1], a, b, 0.7)


def _lines():
    # D1: v = u, D2: v = c (u - 3) / (u + 1)
    D1 = GraphCurve(BinaryForm([0, 1]), BinaryForm([1, 0]), 1.0)
    return D1, BinaryForm([-3, 1]), BinaryForm([1, 1])


def test_transversality_generic():
    D1, num, den = _lines()
    pts = transversality_check(SplitCurvePair(D1, GraphCurve(num, den, 0.5)))
    assert len(pts) == 2


def test_tangential_constant_matches_oracle():
    # frozen from tools/oracles/forms_oracle.py: c = 7 -+ 4 sqrt(3)
    D1, num, den = _lines()
    cs = sorted(tangential_constant(SplitCurvePair(D1, GraphCurve(num, den, 0.5))), key=abs)
    assert_allclose(cs, [7 - 4 * np.sqrt(3), 7 + 4 * np.sqrt(3)], rtol=1e-10)
    with pytest.raises(TangentialIntersection):
        transversality_check(SplitCurvePair(D1, GraphCurve(num, den, 7 + 4 * np.sqrt(3))))
