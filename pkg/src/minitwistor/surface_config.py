"""Blow-up configurations of 2m points on a transversal pair of graph curves.

``D1`` is the graph ``v = P1(u)/Q1(u)`` of bidegree ``(k, 1)`` and ``D2`` the
graph ``v = c P2(u)/Q2(u)`` of bidegree ``(m - k, 1)``.  Blowing up 2k points
of ``D1`` and ``2(m - k)`` points of ``D2`` gives the surfaces handled here.

Points of P^1 x P^1 are pairs of :class:`ProjPoint`.  In JSON each factor is
stored as one affine number together with its chart: chart 0 stores
``z1/z0``, chart 1 stores ``z0/z1`` (so the point at infinity is ``0`` in
chart 1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import io
from .binary_forms import (DEFAULT_TOL, BinaryForm, ProjPoint, as_point, coprimality,
                           disc_quadratic, root_clusters)

SEPARATION = 1e-6


class ConditionStarViolated(ValueError):
    pass


class TangentialIntersection(ValueError):
    pass


class InvalidConfig(ValueError):
    pass


Point2 = tuple[ProjPoint, ProjPoint]


@dataclass(frozen=True, eq=False)
class GraphCurve:
    """The curve ``den(u) v1 - c num(u) v0 = 0`` of bidegree ``(deg, 1)``."""

    num: BinaryForm
    den: BinaryForm
    c: complex = 1.0

    def __post_init__(self):
        if self.num.degree != self.den.degree:
            raise ValueError("numerator and denominator need equal degree")
        object.__setattr__(self, "c", complex(self.c))

    @property
    def degree(self) -> int:
        return self.num.degree

    def coeff_matrix(self) -> np.ndarray:
        """Bihomogeneous coefficients, shape ``(deg + 1, 2)``; column j multiplies ``v0^(1-j) v1^j``."""
        return np.column_stack([-self.c * self.num.coeffs, self.den.coeffs])

    def value_at(self, u) -> ProjPoint:
        u = as_point(u)
        return ProjPoint(self.den(u), self.c * self.num(u))

    def residual(self, p: Point2) -> float:
        u, v = (q.normalized() for q in p)
        val = self.den(u) * v.z1 - self.c * self.num(u) * v.z0
        scale = max(np.abs(self.num.coeffs).max() * abs(self.c), np.abs(self.den.coeffs).max())
        return float(abs(val) / scale)

    def is_irreducible(self, tol: float = 1e-8) -> bool:
        return coprimality(self.num, self.den) > tol

    def to_json(self) -> dict:
        return {"num": io.form_to_json(self.num), "den": io.form_to_json(self.den),
                "c": io.cpx(self.c)}

    @classmethod
    def from_json(cls, d: dict) -> "GraphCurve":
        return cls(io.form_from_json(d["num"]), io.form_from_json(d["den"]), io.from_cpx(d["c"]))


@dataclass(frozen=True, eq=False)
class SplitCurvePair:
    D1: GraphCurve
    D2: GraphCurve

    @property
    def c(self) -> complex:
        return self.D2.c

    @property
    def m(self) -> int:
        return self.D1.degree + self.D2.degree

    def intersection_form(self) -> BinaryForm:
        """Degree-m form in u whose roots are the u-coordinates of ``D1 ∩ D2``."""
        a = self.D1.c * self.D1.num * self.D2.den
        b = self.D2.c * self.D2.num * self.D1.den
        return a - b

    def to_json(self) -> dict:
        return {"D1": self.D1.to_json(), "D2": self.D2.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "SplitCurvePair":
        return cls(GraphCurve.from_json(d["D1"]), GraphCurve.from_json(d["D2"]))


@dataclass(eq=False)
class PointConfig:
    m: int
    k: int
    points: list[Point2]
    assignment: list[int]
    curves: SplitCurvePair
    seed: int | None = None
    flags: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.points)

    def points_on(self, which: int) -> list[Point2]:
        return [p for p, a in zip(self.points, self.assignment) if a == which]

    def to_json(self) -> dict:
        pts, charts = [], []
        for u, v in self.points:
            xu, cu = io.affine_chart(u)
            xv, cv = io.affine_chart(v)
            pts.append([io.cpx(xu), io.cpx(xv)])
            charts.append([cu, cv])
        return {"m": self.m, "k": self.k, "points": pts, "charts": charts,
                "assignment": list(self.assignment), "curves": self.curves.to_json(),
                "seed": self.seed, "flags": dict(self.flags)}

    @classmethod
    def from_json(cls, d: dict) -> "PointConfig":
        charts = d.get("charts") or [[0, 0]] * len(d["points"])
        pts = []
        for (xu, xv), (cu, cv) in zip(d["points"], charts):
            pts.append((io.from_affine_chart(io.from_cpx(xu), cu),
                        io.from_affine_chart(io.from_cpx(xv), cv)))
        return cls(int(d["m"]), int(d["k"]), pts, [int(a) for a in d["assignment"]],
                   SplitCurvePair.from_json(d["curves"]), d.get("seed"), dict(d.get("flags", {})))


def _chart_sep(p: Point2, q: Point2) -> float:
    return max(p[0].distance(q[0]), p[1].distance(q[1]))


def transversality_check(pair: SplitCurvePair, tol: float = 1e-7) -> list[Point2]:
    """The m intersection points of ``D1`` and ``D2``; raises on a tangency."""
    H = pair.intersection_form()
    if H.is_zero(tol * max(1.0, H.norm())):
        raise TangentialIntersection("the two curves share a component")
    clusters = root_clusters(H, cluster_tol=1e-6)
    out = []
    for u, mult, _ in clusters:
        if mult > 1:
            raise TangentialIntersection(f"intersection of multiplicity {mult} at u={u}")
        out.append((u, pair.D1.value_at(u)))
    if len(out) != pair.m:
        raise TangentialIntersection("intersection count differs from m")
    # the u-roots may coincide only if the intersection is tangent; the
    # Jacobian of the two graph equations is nondegenerate iff the slopes differ
    return out


def validate(config: PointConfig, tol: float = 1e-8) -> None:
    """Raise :class:`InvalidConfig` when an invariant of the configuration fails."""
    m, k = config.m, config.k
    if m < 2 or not 1 <= k < m:
        raise InvalidConfig(f"need m >= 2 and 1 <= k < m, got m={m}, k={k}")
    if len(config.points) != 2 * m or len(config.assignment) != 2 * m:
        raise InvalidConfig("need exactly 2m points")
    if config.assignment.count(1) != 2 * k or config.assignment.count(2) != 2 * (m - k):
        raise InvalidConfig("assignment does not split the points 2k / 2(m-k)")
    pair = config.curves
    if pair.D1.degree != k or pair.D2.degree != m - k:
        raise InvalidConfig("curve bidegrees do not match k")
    for D in (pair.D1, pair.D2):
        if not D.is_irreducible():
            raise InvalidConfig("a graph curve has a common root in numerator and denominator")
    curves = {1: pair.D1, 2: pair.D2}
    for p, a in zip(config.points, config.assignment):
        if curves[a].residual(p) > tol:
            raise InvalidConfig(f"point {p} is off its curve D{a}")
        if curves[3 - a].residual(p) < 1e3 * tol:
            raise InvalidConfig(f"point {p} lies on both curves")
    nodes = transversality_check(pair)
    if not config.flags.get("infinitely_near"):
        allp = list(config.points) + nodes
        for i, j in itertools.combinations(range(len(allp)), 2):
            if _chart_sep(allp[i], allp[j]) < SEPARATION:
                raise InvalidConfig("points are not separated")


def _random_form(rng: np.random.Generator, d: int) -> BinaryForm:
    return BinaryForm(rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1))


def _random_graph(rng, d: int, c: complex = 1.0) -> GraphCurve:
    while True:
        G = GraphCurve(_random_form(rng, d), _random_form(rng, d), c)
        if G.is_irreducible(1e-4):
            return G


def random_config(m: int, k: int, seed: int, retries: int = 20) -> PointConfig:
    """Generic curves and generic points; deterministic in ``seed``."""
    if m < 2 or not 1 <= k < m:
        raise ValueError(f"need m >= 2 and 1 <= k < m, got m={m}, k={k}")
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        D1 = _random_graph(rng, k)
        D2 = _random_graph(rng, m - k, complex(rng.normal() + 1j * rng.normal()))
        pair = SplitCurvePair(D1, D2)
        pts = [(ProjPoint.affine(u), D1.value_at(u))
               for u in rng.normal(size=2 * k) + 1j * rng.normal(size=2 * k)]
        pts += [(ProjPoint.affine(u), D2.value_at(u))
                for u in rng.normal(size=2 * (m - k)) + 1j * rng.normal(size=2 * (m - k))]
        config = PointConfig(m, k, pts, [1] * (2 * k) + [2] * (2 * (m - k)), pair, seed)
        try:
            validate(config)
        except (InvalidConfig, TangentialIntersection):
            continue
        return config
    raise InvalidConfig(f"no transversal configuration after {retries} draws")


def _linear_factor(a: complex) -> np.ndarray:
    """Coefficients of ``u - a`` in ``(u0, u1)``; for ``a = inf`` the factor is ``u0``."""
    return np.array([1.0, 0.0], dtype=complex) if np.isinf(a) else np.array([-a, 1.0])


def _product(vals: Sequence[complex]) -> BinaryForm:
    c = np.array([1.0 + 0j])
    for a in vals:
        c = np.convolve(c, _linear_factor(a))
    return BinaryForm(c)


def _val(x) -> complex:
    if x is None:
        return complex(np.inf)
    return complex(x)


def _same(a: complex, b: complex, tol: float = DEFAULT_TOL) -> bool:
    return as_point(a).equals(as_point(b), tol)


def _star_holds(aI, bI, aJ, bJ) -> bool:
    """The four disjointness conditions for a fixed split."""
    def disjoint(X, Y):
        return not any(_same(x, y) for x in X for y in Y)
    return disjoint(aI, bI) and disjoint(aJ, bJ) and disjoint(aI, aJ) and disjoint(bI, bJ)


def condition_star_check(m: int, I: Sequence[int] | None, a: Sequence, b: Sequence) -> bool:
    """Whether some renumbering of ``a`` and of ``b`` satisfies condition (*).

    Renumbering ``a`` and ``b`` independently amounts to choosing which |I|
    values of each go to the first curve, so subsets are enumerated instead
    of permutations.  With ``I = None`` every split size 1..m-1 is tried.
    """
    a = [_val(x) for x in a]
    b = [_val(x) for x in b]
    if len(a) != m or len(b) != m:
        raise ValueError("a and b need m entries each")
    sizes = range(1, m) if I is None else [len(set(I))]
    idx = range(m)
    for s in sizes:
        for A in itertools.combinations(idx, s):
            aI = [a[i] for i in A]
            aJ = [a[i] for i in idx if i not in A]
            for B in itertools.combinations(idx, s):
                bI = [b[i] for i in B]
                bJ = [b[i] for i in idx if i not in B]
                if _star_holds(aI, bI, aJ, bJ):
                    return True
    return False


def cstar_config(m: int, I: Sequence[int], a: Sequence, b: Sequence, c: complex,
                 seed: int | None = None) -> PointConfig:
    """Configuration invariant under ``(u, v) -> (lambda u, v)``.

    ``I`` holds 1-based indices; ``None`` or ``inf`` in ``a``/``b`` is the point
    at infinity.  The points are ``p_i = (a_i, 0)`` and ``q_i = (b_i, inf)``
    ordered as ``p_1..p_m, q_1..q_m``; ``D1`` is
    ``v = prod_{i in I}(u - a_i) / prod_{i in I}(u - b_i)`` and ``D2`` is ``c``
    times the analogous quotient over the complement.
    """
    I = sorted(set(int(i) for i in I))
    if not I or len(I) >= m or I[0] < 1 or I[-1] > m:
        raise ValueError("I must be a nonempty proper subset of {1..m}")
    a = [_val(x) for x in a]
    b = [_val(x) for x in b]
    if len(a) != m or len(b) != m:
        raise ValueError("a and b need m entries each")
    Ic = [i for i in range(1, m + 1) if i not in I]
    aI, bI = [a[i - 1] for i in I], [b[i - 1] for i in I]
    aJ, bJ = [a[i - 1] for i in Ic], [b[i - 1] for i in Ic]
    if not _star_holds(aI, bI, aJ, bJ):
        raise ConditionStarViolated("condition (*) fails for this split")
    D1 = GraphCurve(_product(aI), _product(bI), 1.0)
    D2 = GraphCurve(_product(aJ), _product(bJ), c)
    pair = SplitCurvePair(D1, D2)
    pts = [(as_point(x), ProjPoint(1.0, 0.0)) for x in a]
    pts += [(as_point(x), ProjPoint.infinity()) for x in b]
    assignment = [1 if i in I else 2 for i in range(1, m + 1)] * 2
    special = set()
    for x in a + b:
        special.add("inf" if np.isinf(x) else complex(x))
    toric = special <= {"inf", 0j}
    repeated = any(_same(x, y) for x, y in itertools.combinations(a, 2)) or \
        any(_same(x, y) for x, y in itertools.combinations(b, 2))
    flags = {"cstar": True, "toric": bool(toric), "infinitely_near": bool(repeated)}
    config = PointConfig(m, len(I), pts, assignment, pair, seed, flags)
    validate(config)
    return config


def tangential_constant(pair: SplitCurvePair) -> list[complex]:
    """Values of the constant of ``D2`` at which ``D1`` and ``D2`` become tangent (m = 2 only)."""
    if pair.m != 2:
        raise ValueError("closed form only for m = 2")
    a = pair.D1.c * pair.D1.num * pair.D2.den
    b = pair.D2.num * pair.D1.den
    # disc(a - c b) is quadratic in c
    cs = np.array([0.0, 1.0, 2.0])
    vals = [disc_quadratic(a - ci * b) for ci in cs]
    poly = np.polyfit(cs, vals, 2)
    return [complex(r) for r in np.roots(poly)]


def remark_config_values() -> tuple[list, list]:
    """The m = 3 values ``a = (0, 1, inf)``, ``b = (0, 1, inf)`` excluded by condition (*)."""
    return [0.0, 1.0, None], [0.0, 1.0, None]
