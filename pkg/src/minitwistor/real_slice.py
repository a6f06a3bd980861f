"""Real structures: the componentwise conjugation on P^1 x P^1 and its real members.

The real structure on the surface is ``(u, v) -> (conj u, conj v)``; on the
normalization of a real member it lifts to the antipodal map
``(z0, z1) -> (-conj z1, conj z0)``.  A member is real when its forms satisfy
``f = conj(f(-conj z1, conj z0))`` (possible only for even ``m``), and then
the real members near it are parametrized by a real vector: real coordinates
of ``U`` and ``V`` in the fixed subspaces, plus one complex chart coordinate
per conjugate pair of preimages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from . import io
from .binary_forms import (BinaryForm, ProjPoint, QuadraticClass, as_point, chart_coordinate,
                           from_roots)
from .conformal import Q_ABC, proportionality, theta_of, vc_element
from .geodesic_trace import TraceResult, node_at, through_point
from .nodal_curve import ParamCurve, is_ordinary_pair, node_pairs_of, preimages_of
from .severi import (CHART_SWITCH, Constraint, RankDrop, SeveriSystem, corank, newton,
                     null_basis, trace_path)
from .surface_config import (GraphCurve, InvalidConfig, PointConfig, Point2, SplitCurvePair,
                             TangentialIntersection, validate)

ANTIPODAL = np.array([[0, -1], [1, 0]], dtype=complex)
REFLECTION = np.eye(2, dtype=complex)
REAL_TOL = 1e-7


class NoRealSolutionFound(RuntimeError):
    pass


class NotInRealSubspace(ValueError):
    pass


class IndefiniteRealMetric(ValueError):
    pass


# ------------------------------------------------------------------ involutions

def sigma_param(z, lift: np.ndarray = ANTIPODAL) -> ProjPoint:
    """``z -> M conj(z)``; the default lift is the antipodal map."""
    z = as_point(z)
    w = lift @ np.conj(z.as_array())
    return ProjPoint(w[0], w[1]).normalized()


def sigma_surface(p: Point2) -> Point2:
    return tuple(ProjPoint(np.conj(q.z0), np.conj(q.z1)) for q in p)


def sigma_form(f: BinaryForm, lift: np.ndarray = ANTIPODAL) -> BinaryForm:
    """``z -> conj(f(M conj z))``."""
    return BinaryForm(np.conj(f.compose(lift).coeffs))


def sigma_quadratic(q: QuadraticClass, e2: complex) -> QuadraticClass:
    """The involution ``(a, b, c) -> (-e2 conj c, e2 conj b, -e2 conj a)`` on quadratic classes."""
    return QuadraticClass(-e2 * np.conj(q.c), e2 * np.conj(q.b), -e2 * np.conj(q.a))


def real_form_basis(d: int) -> np.ndarray:
    """Complex coefficient vectors (columns) spanning ``{f : sigma f = f}`` over the reals."""
    n = d + 1
    S = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = 1
        c = e[:n] + 1j * e[n:]
        s = BinaryForm(c).antipodal_conjugate().coeffs
        S[:, k] = np.concatenate([s.real, s.imag])
    N = null_space(S - np.eye(2 * n))
    if N.shape[1] != n:
        raise NoRealSolutionFound(f"degree {d} forms admit no antipodal real structure")
    return N[:n] + 1j * N[n:]


def _block(*blocks: np.ndarray) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def make_real_forms(curve: ParamCurve) -> ParamCurve:
    """Rescale ``U`` and ``V`` by unit phases so that ``sigma U = U`` and ``sigma V = V`` exactly."""
    out = []
    for pair in ((curve.U0, curve.U1), (curve.V0, curve.V1)):
        c = np.concatenate([f.coeffs for f in pair])
        s = np.concatenate([f.antipodal_conjugate().coeffs for f in pair])
        lam, res = proportionality(s, c)
        if res > REAL_TOL or abs(abs(lam) - 1) > REAL_TOL:
            raise NotInRealSubspace(f"forms are not antipodally real (residual {res:.2e})")
        mu = np.sqrt(lam / abs(lam))
        out += [f * mu for f in pair]
    return ParamCurve(*out, list(curve.base_preimages), list(curve.node_pairs))


# ------------------------------------------------------------------ structure data

@dataclass
class RealStructureData:
    """``h`` and the phase with ``exp(2 i theta) = (-1)^m h``, plus the antipodal node pairing.

    ``h`` is read off the quadratic classes of the normal-form model (see
    :func:`structure_data`); :func:`implicit_h` gives the same constant in the
    implicit model.
    """

    h: complex
    theta_phase: float
    node_pairing: list[tuple[ProjPoint, ProjPoint]]
    m: int

    @property
    def e2(self) -> complex:
        return np.exp(2j * self.theta_phase)

    def to_json(self) -> dict:
        return {"h": io.cpx(self.h), "theta_phase": self.theta_phase, "m": self.m,
                "node_pairing": [[io.point_to_json(s), io.point_to_json(t)] for s, t in self.node_pairing]}


def antipodal_pairing(curve: ParamCurve, tol: float = 1e-7) -> list[tuple[ProjPoint, ProjPoint]]:
    out = []
    for s, t in curve.node_pairs:
        if sigma_param(s).distance(t) > tol:
            raise NotInRealSubspace("a node preimage pair is not antipodal")
        out.append((s, t))
    return out


def structure_data(curve: ParamCurve) -> RealStructureData:
    """Phase of the involution on quadratic classes ``theta = n / prod(z - z_j)``.

    For a real member the normal form of a real tangent vector is itself real,
    and the base-preimage product satisfies ``sigma P = kappa P`` with
    ``|kappa| = 1``; hence ``sigma theta = theta / kappa`` and ``exp(2 i theta) = -kappa``.
    """
    P = from_roots(curve.base_preimages)
    kappa, res = proportionality(P.antipodal_conjugate().coeffs, P.coeffs)
    if res > REAL_TOL:
        raise NotInRealSubspace(f"base preimages are not closed under the antipodal map ({res:.2e})")
    e2 = -kappa / abs(kappa)
    m = curve.m
    pairing = antipodal_pairing(curve) if curve.node_pairs else []
    return RealStructureData(complex((-1) ** m * e2), float(np.angle(e2) / 2), pairing, m)


def paired_node_product(curve: ParamCurve) -> BinaryForm:
    """``f = prod (b_i z0 - a_i z1)(conj(a_i) z0 + conj(b_i) z1)`` over node pairs ``((a_i, b_i), sigma)``."""
    f = BinaryForm([1.0])
    for s, _ in antipodal_pairing(curve):
        a, b = s.z0, s.z1
        f = f * BinaryForm([b, -a]) * BinaryForm([np.conj(a), np.conj(b)])
    return f


def implicit_h(curve: ParamCurve, delta: np.ndarray) -> tuple[complex, complex, complex]:
    """``h`` from a real tangent vector in the implicit model, where ``s = h sigma(s)``.

    Returns ``(h, e2, kf)`` with ``sigma f = kf f`` for the paired node product
    and ``e2 = -kf h`` the phase of the induced involution on ``theta = s / f``;
    ``kf = (-1)^(m-1)`` gives ``e2 = (-1)^m h``.
    """
    s = vc_element(curve, delta)
    h, _ = proportionality(s.coeffs, s.antipodal_conjugate().coeffs)
    f = paired_node_product(curve)
    kf, _ = proportionality(f.antipodal_conjugate().coeffs, f.coeffs)
    return complex(h), complex(-kf * h), complex(kf)


def real_coordinates(q: QuadraticClass, data: RealStructureData, tol: float = 1e-7) -> np.ndarray:
    """``(x1, x2, x3)`` with ``a = e/2 (x2 + i x3)``, ``b = e x1``, ``c = e/2 (-x2 + i x3)``."""
    arr = q.as_array()
    fixed = sigma_quadratic(q, data.e2).as_array()
    scale = max(np.abs(arr).max(), 1e-300)
    if np.abs(fixed - arr).max() > tol * scale:
        raise NotInRealSubspace("quadratic class is not fixed by the real structure")
    e = np.exp(1j * data.theta_phase)
    a, b, c = arr
    x = np.array([b / e, (a - c) / e, (a + c) / (1j * e)])
    return x.real


def from_real_coordinates(x, data: RealStructureData) -> QuadraticClass:
    x1, x2, x3 = np.asarray(x, dtype=float)
    e = np.exp(1j * data.theta_phase)
    return QuadraticClass(e / 2 * (x2 + 1j * x3), e * x1, e / 2 * (-x2 + 1j * x3))


# ------------------------------------------------------------------ reality check

@dataclass
class RealityReport:
    invariant: bool
    conditions: list[bool]
    lift_type: str
    residuals: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.invariant and all(self.conditions)

    def to_json(self) -> dict:
        return {"invariant": self.invariant, "conditions": list(self.conditions),
                "lift_type": self.lift_type, "residuals": self.residuals}


def lift_type(M: np.ndarray) -> str:
    """``antipodal`` when ``M conj(M) = -c I`` (no fixed points), ``reflection`` when ``+c I``."""
    P = M @ np.conj(M)
    c = P[0, 0]
    if np.abs(P - c * np.eye(2)).max() > 1e-9 * np.abs(P).max():
        return "not an involution"
    return "antipodal" if c.real < 0 else "reflection"


def find_lift(curve: ParamCurve, seed: int = 0) -> np.ndarray:
    """Antiholomorphic lift ``z -> M conj z`` of the real structure, from three correspondences."""
    rng = np.random.default_rng(seed)
    src, dst = [], []
    while len(src) < 3:
        z = ProjPoint(1.0, complex(*rng.normal(size=2)))
        pre = preimages_of(curve, sigma_surface(curve.image(z)))
        if len(pre) != 1:
            continue
        src.append(ProjPoint(np.conj(z.z0), np.conj(z.z1)))
        dst.append(pre[0])
    from .binary_forms import mobius_through
    M = mobius_through(src, dst)
    return M / np.sqrt(np.linalg.det(M))


def reality_check(curve: ParamCurve, lift: np.ndarray | None = None, tol: float = 1e-7,
                  n_samples: int = 400, node_radius: float = 0.05) -> RealityReport:
    """Invariance of the curve and the three conditions for a real member.

    1: the forms transform by scalars under the lift (so the image curve is
    invariant) and every node is a real point.  2: the lift exchanges the two
    preimages of each node.  3: away from the node preimages, ``phi(z)`` and
    ``phi(M conj z)`` never agree on a sample grid, and the lift is fixed-point free.
    """
    M = ANTIPODAL if lift is None else np.asarray(lift, dtype=complex)
    res = {}
    ok = True
    for name, pair in (("U", (curve.U0, curve.U1)), ("V", (curve.V0, curve.V1))):
        c = np.concatenate([f.coeffs for f in pair])
        s = np.concatenate([sigma_form(f, M).coeffs for f in pair])
        _, r = proportionality(s, c)
        res[f"invariance_{name}"] = r
        ok &= r < tol
    pairs = curve.node_pairs or node_pairs_of(curve)
    node_real = max((max(q.distance(sq) for q, sq in zip(P, sigma_surface(P)))
                     for P in (curve.image(s) for s, _ in pairs)), default=0.0)
    res["node_reality"] = node_real
    c1 = bool(ok and node_real < tol)
    swap = max((sigma_param(s, M).distance(t) for s, t in pairs), default=0.0)
    res["branch_exchange"] = swap
    c2 = bool(swap < tol)
    # condition 3: real points of the image come from z with phi(M conj z) = phi(z)
    zs = _sphere_samples(n_samples)
    excl = [p for pair in pairs for p in pair]
    gaps = []
    for z in zs:
        if any(z.distance(p) < node_radius for p in excl):
            continue
        a, b = curve.image(z), curve.image(sigma_param(z, M))
        gaps.append(max(a[0].distance(b[0]), a[1].distance(b[1])))
    res["min_real_gap"] = float(min(gaps)) if gaps else 0.0
    kind = lift_type(M)
    c3 = bool(kind == "antipodal" and res["min_real_gap"] > 1e3 * tol)
    return RealityReport(bool(ok), [c1, c2, c3], kind, res)


def _sphere_samples(n: int) -> list[ProjPoint]:
    """Roughly uniform points on P^1 (Fibonacci sphere through stereographic projection)."""
    k = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * k / n)
    lon = np.pi * (1 + 5 ** 0.5) * k
    out = []
    for th, ph in zip(phi, lon):
        # (cos th/2, e^{i ph} sin th/2) is the unit representative of the sphere point
        out.append(ProjPoint(np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)))
    return out


# ------------------------------------------------------------------ real gauge

def conjugate_pairs(points: Sequence[ProjPoint], tol: float = 1e-7) -> list[tuple[int, int]]:
    pts = [as_point(p) for p in points]
    left = set(range(len(pts)))
    out = []
    while left:
        i = min(left)
        left.remove(i)
        si = sigma_param(pts[i])
        hit = [j for j in left if pts[j].distance(si) < tol]
        if not hit:
            raise NotInRealSubspace(f"preimage {i} has no antipodal partner")
        left.remove(hit[0])
        out.append((i, hit[0]))
    return out


def real_gauge(curve: ParamCurve) -> ParamCurve:
    """Rotate so that the first base preimage sits at 0 and the next pair has a positive real coordinate.

    Rotations commute with the antipodal map, so reality is preserved.
    """
    curve = make_real_forms(curve)
    pairs = conjugate_pairs(curve.base_preimages)
    z = curve.base_preimages[pairs[0][0]].as_array()
    z = z / np.linalg.norm(z)
    g = np.array([[np.conj(z[0]), np.conj(z[1])], [-z[1], z[0]]])
    c = curve.transformed(g)
    w = c.base_preimages[pairs[1][0]]
    x, ch = chart_coordinate(w)
    beta = np.angle(x) if ch == 0 else -np.angle(x)
    d = np.diag([np.exp(1j * beta / 2), np.exp(-1j * beta / 2)])
    c = c.transformed(d)
    return make_real_forms(c)


# ------------------------------------------------------------------ the real system

@dataclass(eq=False)
class RealSystem:
    """Real members near a real curve, as a real polynomial system.

    ``r = [rU, rV, (Re x, Im x) per free conjugate pair, (Re x, Im x) per auxiliary pair]``.
    The complex state of ``csys`` is ``B r``; the pinned pair sits at ``0, inf``
    and the first free pair has a real coordinate, which removes the rotations.
    """

    csys: SeveriSystem
    halves: list[int]
    partner: dict
    aux_pairs: int
    B: np.ndarray
    refU: np.ndarray
    refV: np.ndarray
    dU: int
    dV: int

    # -- interface shared with the complex system
    @property
    def m(self) -> int:
        return self.csys.m

    @property
    def ncoef(self) -> int:
        return self.dU + self.dV

    @property
    def n_unknowns(self) -> int:
        return self.B.shape[1]

    @property
    def charts(self) -> list[int]:
        return self.csys.charts

    @property
    def aux_charts(self) -> list[int]:
        return self.csys.aux_charts

    @property
    def constraints(self) -> list[Constraint]:
        return self.csys.constraints

    def complex_state(self, r: np.ndarray) -> np.ndarray:
        return self.B @ np.asarray(r, dtype=float)

    def curve(self, r: np.ndarray, with_nodes: bool = False) -> ParamCurve:
        return self.csys.curve(self.complex_state(r), with_nodes)

    def base_points(self, r):
        return self.csys.base_points(self.complex_state(r))

    def aux_points(self, r):
        return self.csys.aux_points(self.complex_state(r))

    def coefficient_delta(self, dr: np.ndarray) -> np.ndarray:
        return (self.B @ dr)[:self.csys.ncoef]

    def _rows(self) -> np.ndarray:
        n = self.csys.n_equations
        k = 2 * len(self.csys.points)
        return np.array([i for i in range(n) if i not in (k, k + 1)])

    def _gauge(self, r):
        g = np.array([r[self.dU + self.dV + 1],
                      self.refU @ r[:self.dU] - self.refU @ self.refU,
                      self.refV @ r[self.dU:self.ncoef] - self.refV @ self.refV])
        G = np.zeros((3, self.n_unknowns))
        G[0, self.dU + self.dV + 1] = 1
        G[1, :self.dU] = self.refU
        G[2, self.dU:self.ncoef] = self.refV
        return g, G

    def residual_and_jacobian(self, r):
        r = np.asarray(r, dtype=float)
        H, Jc = self.csys.residual_and_jacobian(self.complex_state(r))
        rows = self._rows()
        H, JB = H[rows], Jc[rows] @ self.B
        g, G = self._gauge(r)
        return (np.concatenate([H.real, H.imag, g]), np.vstack([JB.real, JB.imag, G]))

    def residual(self, r):
        r = np.asarray(r, dtype=float)
        H = self.csys.residual(self.complex_state(r))[self._rows()]
        return np.concatenate([H.real, H.imag, self._gauge(r)[0]])

    def jacobian(self, r):
        return self.residual_and_jacobian(r)[1]

    def second_derivative(self, r, d, n_fft: int = 16):
        D = self.csys.second_derivative(self.complex_state(r), self.B @ np.asarray(d, dtype=float),
                                        n_fft)[self._rows()]
        return np.concatenate([D.real, D.imag, np.zeros(3)])

    # -- construction
    def pack(self, curve: ParamCurve, aux: Sequence[ProjPoint] = ()) -> np.ndarray:
        y = self.csys.pack(curve, aux)
        A = np.vstack([self.B.real, self.B.imag])
        r = np.linalg.lstsq(A, np.concatenate([y.real, y.imag]), rcond=None)[0]
        if np.linalg.norm(self.B @ r - y) > 1e-8 * max(1.0, np.linalg.norm(y)):
            raise NotInRealSubspace("state is not real for this system")
        return r

    def with_constraints(self, constraints: Sequence[Constraint], aux: Sequence[ProjPoint]) -> "RealSystem":
        """Constraints with auxiliary parameters given in antipodal pairs ``[z, sigma z, ...]``."""
        return _build(self.csys.points, self.csys.m, self.csys.pins, self.halves, self.partner,
                      [self.csys.charts[j] for j in range(len(self.csys.points))],
                      np.concatenate([self.csys.ref]), list(constraints), list(aux), self.csys.du)

    def without_constraints(self) -> "RealSystem":
        return _build(self.csys.points, self.csys.m, self.csys.pins, self.halves, self.partner,
                      list(self.csys.charts), self.csys.ref, [], [], self.csys.du)

    def recharted(self, r, limit: float = CHART_SWITCH):
        y = self.complex_state(r)
        _, xs, aux = self.csys.split(y)
        if np.all(np.abs(xs) <= limit) and np.all(np.abs(aux) <= limit):
            return self, r
        bases = self.csys.base_points(y)
        auxp = self.csys.aux_points(y)
        charts = [chart_coordinate(z)[1] for z in bases]
        sys = _build(self.csys.points, self.csys.m, self.csys.pins, self.halves, self.partner, charts,
                     self.csys.ref, self.csys.constraints, auxp, self.csys.du)
        c = self.csys.curve(y)
        return sys, sys.pack(c, auxp)


def _build(points, m, pins, halves, partner, charts, ref, constraints, aux, du) -> RealSystem:
    charts = list(charts)
    for h in halves:
        charts[partner[h]] = 1 - charts[h]
    aux = [as_point(z) for z in aux]
    aux_charts = []
    for i in range(0, len(aux), 2):
        if aux[i + 1].distance(sigma_param(aux[i])) > 1e-7:
            raise NotInRealSubspace("auxiliary parameters must come in antipodal pairs")
        ch = chart_coordinate(aux[i])[1]
        aux_charts += [ch, 1 - ch]
    csys = SeveriSystem(list(points), m, dict(pins), charts, np.asarray(ref), list(constraints),
                        aux_charts, du)
    RU = _block(real_form_basis(du), real_form_basis(du))
    RV = _block(real_form_basis(m), real_form_basis(m))
    dU, dV = RU.shape[1], RV.shape[1]
    k = dU + dV + 2 * len(halves) + len(aux)
    B = np.zeros((csys.n_unknowns, k), dtype=complex)
    B[:2 * (du + 1), :dU] = RU
    B[2 * (du + 1):csys.ncoef, dU:dU + dV] = RV
    pos = {j: csys.ncoef + i for i, j in enumerate(csys.free)}
    q = dU + dV
    for h in halves:
        B[pos[h], q], B[pos[h], q + 1] = 1, 1j
        B[pos[partner[h]], q], B[pos[partner[h]], q + 1] = -1, 1j
        q += 2
    col = csys.ncoef + len(csys.free)
    for i in range(0, len(aux), 2):
        B[col + i, q], B[col + i, q + 1] = 1, 1j
        B[col + i + 1, q], B[col + i + 1, q + 1] = -1, 1j
        q += 2
    refc = np.asarray(ref)
    A = np.vstack([RU.real, RU.imag])
    refU = np.linalg.lstsq(A, np.concatenate([refc[:2 * (du + 1)].real, refc[:2 * (du + 1)].imag]),
                           rcond=None)[0]
    A = np.vstack([RV.real, RV.imag])
    rv = refc[2 * (du + 1):]
    refV = np.linalg.lstsq(A, np.concatenate([rv.real, rv.imag]), rcond=None)[0]
    return RealSystem(csys, list(halves), dict(partner), len(aux) // 2, B, refU, refV, dU, dV)


def real_system_for(curve: ParamCurve, gauge: bool = True) -> tuple[RealSystem, np.ndarray, ParamCurve]:
    """Real system at a real member; returns ``(system, r, gauged curve)``."""
    if curve.m % 2:
        raise NoRealSolutionFound("odd m admits no antipodally real member")
    c = real_gauge(curve) if gauge else make_real_forms(curve)
    zs = c.base_preimages
    pairs = conjugate_pairs(zs)
    a, a2 = pairs[0]
    if zs[a].distance(ProjPoint(1, 0)) > 1e-9:
        raise NotInRealSubspace("the curve is not in the real gauge")
    pins = {a: ProjPoint(1, 0), a2: ProjPoint(0, 1)}
    halves, partner = [], {}
    for i, j in pairs[1:]:
        halves.append(i)
        partner[i] = j
    charts = [chart_coordinate(z)[1] for z in zs]
    points = [c.image(z) for z in zs]
    sys = _build(points, c.m, pins, halves, partner, charts, c.coeff_vector(), [], [], c.U0.degree)
    r = sys.pack(c)
    return sys, r, c


def real_tangent_basis(sys: RealSystem, r: np.ndarray) -> np.ndarray:
    J = sys.jacobian(r)
    k = corank(J)
    if k != 3:
        raise RankDrop(f"real slice is not smooth of dimension 3 here (corank {k})")
    return null_basis(J, 3)


def real_gram(curve: ParamCurve, deltas: np.ndarray, index: int | None = None) -> np.ndarray:
    """Complex gram of the quadratic classes of the coefficient deltas (columns)."""
    T = np.array([theta_of(curve, d, index=index).as_array() for d in deltas.T]).T
    return T.T @ Q_ABC @ T


def phase_normalized(G: np.ndarray) -> tuple[np.ndarray, float]:
    """``G`` rotated by its trace phase, and the relative imaginary part that remains."""
    tr = np.trace(G)
    R = G * (abs(tr) / tr)
    return R.real, float(np.abs(R.imag).max() / np.abs(R).max())


def real_metric_at(curve: ParamCurve, data: RealStructureData | None = None,
                   tol: float = 1e-7) -> np.ndarray:
    """Gram of a real tangent basis, rotated by ``exp(-2 i theta)``; positive definite on real members.

    The overall sign is fixed so that the trace is positive.
    """
    try:
        sys, r, c = real_system_for(curve)
    except (NotInRealSubspace, NoRealSolutionFound) as exc:
        raise IndefiniteRealMetric(f"member fails the reality check: {exc}") from exc
    data = structure_data(c) if data is None else data
    N = real_tangent_basis(sys, r)
    G = real_gram(c, sys.coefficient_delta(N)) / data.e2
    scale = np.abs(G).max()
    if np.abs(G.imag).max() > tol * scale:
        raise IndefiniteRealMetric("restricted gram is not real after the phase rotation")
    G = G.real
    if np.trace(G) < 0:
        G = -G
    G = 0.5 * (G + G.T)
    ev = np.linalg.eigvalsh(G)
    if ev.min() <= tol * scale:
        raise IndefiniteRealMetric(f"eigenvalues {ev} are not all positive")
    return G


def real_coordinate_matrix(curve: ParamCurve) -> np.ndarray:
    """``(x1, x2, x3)`` of a real tangent basis (columns), in the normal-form model."""
    sys, r, c = real_system_for(curve)
    data = structure_data(c)
    N = real_tangent_basis(sys, r)
    return np.column_stack([real_coordinates(theta_of(c, d), data)
                            for d in sys.coefficient_delta(N).T])


def min_null_on_sphere(G: np.ndarray, n: int = 2000, seed: int = 0) -> float:
    """Minimum of ``|x^T G x|`` over random unit vectors (bounded away from 0 for definite metrics)."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    X /= np.linalg.norm(X, axis=1)[:, None]
    return float(np.abs(np.einsum("ni,ij,nj->n", X, G, X)).min())


# ------------------------------------------------------------------ construction

def _solve_real(rows: list[np.ndarray], basis: np.ndarray, rng) -> np.ndarray:
    """Random element of the real span of ``basis`` annihilated by the complex functionals ``rows``."""
    if rows:
        A = np.array(rows) @ basis
        K = null_space(np.vstack([A.real, A.imag]))
    else:
        K = np.eye(basis.shape[1])
    if K.shape[1] == 0:
        raise NoRealSolutionFound("no real forms satisfy the node conditions")
    return basis @ (K @ rng.normal(size=K.shape[1]))


def _real_graph(points: Sequence[Point2], d: int, rng) -> GraphCurve:
    """A (d, 1) curve with real coefficients through the points."""
    rows = []
    for u, v in points:
        mon = np.array([u.z0 ** (d - j) * u.z1 ** j for j in range(d + 1)])
        rows.append(np.concatenate([mon * v.z0, mon * v.z1]))
    A = np.array(rows)
    K = null_space(np.vstack([A.real, A.imag]))
    F = K @ rng.normal(size=K.shape[1])
    return GraphCurve(BinaryForm(-F[:d + 1]), BinaryForm(F[d + 1:]), 1.0)


def construct_real_member(m: int = 2, seed: int = 0, k: int | None = None,
                          max_tries: int = 50) -> tuple[PointConfig, ParamCurve]:
    """A real configuration and a real member through it with ``m - 1`` antipodal node pairs.

    For ``m = 2`` the node pair is generic and ``U`` is a random real form
    through it.  For larger even ``m`` all node pairs lie on the unit circle
    and ``U`` is invariant under ``z -> -z``, which makes every antipodal pair
    on the circle a fibre of ``U``; ``V`` is then fitted to real node values.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    if m % 2:
        raise NoRealSolutionFound("odd m: V cannot be antipodally real since sigma^2 = -1 on odd degree")
    k = m // 2 if k is None else k
    rng = np.random.default_rng(seed)
    bU, bV = real_form_basis(2), real_form_basis(m)
    for _ in range(max_tries):
        if m == 2:
            s = [ProjPoint(1.0, complex(*rng.normal(size=2) * 0.5))]
            u = rng.normal(size=1)
        else:
            ang = np.sort(rng.uniform(0, np.pi, size=m - 1))
            s = [ProjPoint(1.0, np.exp(1j * a)) for a in ang]
        # U: both U0, U1 real; one complex row per node
        if m == 2:
            rows = []
            for si, ui in zip(s, u):
                mon = np.array([si.z0 ** (2 - j) * si.z1 ** j for j in range(3)])
                rows.append(np.concatenate([-ui * mon, mon]))
            Uc = _solve_real(rows, _block(bU, bU), rng)
        else:
            even = np.zeros((6, 4), dtype=complex)
            # a z0^2 + conj(a) z1^2 in each component
            even[0, 0], even[2, 0], even[0, 1], even[2, 1] = 1, 1, 1j, -1j
            even[3, 2], even[5, 2], even[3, 3], even[5, 3] = 1, 1, 1j, -1j
            Uc = even @ rng.normal(size=4)
        rows = []
        for si in s:
            vi = rng.normal()
            mon = np.array([si.z0 ** (m - j) * si.z1 ** j for j in range(m + 1)])
            rows.append(np.concatenate([-vi * mon, mon]))
        Vc = _solve_real(rows, _block(bV, bV), rng)
        U0, U1 = BinaryForm(Uc[:3]), BinaryForm(Uc[3:])
        V0, V1 = BinaryForm(Vc[:m + 1]), BinaryForm(Vc[m + 1:])
        curve = ParamCurve(U0, U1, V0, V1)
        if not curve.is_coprime(1e-4):
            continue
        pairs = node_pairs_of(curve)
        if len(pairs) != m - 1 or not all(is_ordinary_pair(curve, a, b, 1e-4) for a, b in pairs):
            continue
        try:
            pairs = [(a, b) if sigma_param(a).distance(b) < 1e-7 else None for a, b in pairs]
        except Exception:
            continue
        if any(p is None for p in pairs):
            continue
        curve.node_pairs = pairs
        halves = [ProjPoint(1.0, complex(*rng.normal(size=2) * 0.7)) for _ in range(m)]
        zs = []
        for z in halves:
            zs += [z.normalized(), sigma_param(z)]
        if min(a.distance(b) for i, a in enumerate(zs + [p for q in pairs for p in q])
               for b in (zs + [p for q in pairs for p in q])[i + 1:]) < 0.05:
            continue
        pts = [curve.image(z) for z in zs]
        assignment = [1] * (2 * k) + [2] * (2 * (m - k))
        try:
            D1 = _real_graph(pts[:2 * k], k, rng)
            D2 = _real_graph(pts[2 * k:], m - k, rng)
            config = PointConfig(m, k, pts, assignment, SplitCurvePair(D1, D2), seed, {"real": True})
            validate(config)
        except (InvalidConfig, TangentialIntersection, ValueError):
            continue
        curve.base_preimages = zs
        rep = reality_check(curve)
        if not rep.passed:
            continue
        curve = real_gauge(curve)
        curve.node_pairs = [(a, b) for a, b in node_pairs_of(curve)]
        curve.node_pairs = [(a, b) if sigma_param(a).distance(b) < 1e-7 else (b, a)
                            for a, b in curve.node_pairs]
        return config, curve
    raise NoRealSolutionFound(f"no real member found after {max_tries} draws")


# ------------------------------------------------------------------ real geodesics

def is_real_point(p: Point2, tol: float = 1e-9) -> bool:
    return all(q.distance(sq) < tol for q, sq in zip(p, sigma_surface(p)))


def real_geodesic(curve: ParamCurve, p: Point2, steps: int = 40, h: float = 0.02,
                  direction: int = 1) -> TraceResult:
    """The real geodesic of real members through ``p`` and its conjugate (or with a node at ``p``)."""
    sys0, r0, c = real_system_for(curve)
    node = None
    if is_real_point(p):
        for s, t in c.node_pairs:
            P = c.image(s)
            if max(P[0].distance(p[0]), P[1].distance(p[1])) < 1e-8:
                node = (s, t)
        if node is None:
            raise NotInRealSubspace("a real point of a real member must be one of its nodes")
        cons, aux, mode = [node_at(p)], [node[0], node[1]], "real-nodal"
    else:
        pre = preimages_of(c, p)
        if len(pre) != 1:
            raise NotInRealSubspace("the point is not a simple point of the curve")
        z = pre[0]
        cons, aux, mode = [through_point(p), through_point(sigma_surface(p))], [z, sigma_param(z)], "real"
    sys = sys0.with_constraints(cons, aux)
    r = sys.pack(c, aux)
    r, _ = newton(sys, r)
    t0 = None
    pts, diag = trace_path(sys, r, steps, h=h, h_max=4 * h)
    if direction < 0:
        t0 = -pts[0].tangent
        pts, diag = trace_path(sys, r, steps, h=h, h_max=4 * h, direction=t0)
    states, arcs, tracked = [], [], []
    diag = dict(diag)
    reality, eig_min, resid, incid = [], [], [], []
    for pp in pts:
        s = pp.system
        cv = s.curve(pp.y, with_nodes=True)
        states.append(cv)
        arcs.append(pp.arc)
        auxp = s.aux_points(pp.y)
        tracked.append(auxp)
        resid.append(float(np.abs(s.residual(pp.y)).max()))
        incid.append(max(max(a.distance(b) for a, b in zip(cv.image(z), q))
                         for z, q in zip(auxp, [con.p for con in cons] if mode == "real"
                                          else [p, p])))
        rep = reality_check(cv, n_samples=100)
        reality.append(rep.passed)
        base = s.without_constraints()
        rb = pp.y[:base.n_unknowns]
        N = real_tangent_basis(base, rb)
        data = structure_data(cv)
        G = real_gram(cv, base.coefficient_delta(N)) / data.e2
        Gr = G.real if np.trace(G.real) > 0 else -G.real
        eig_min.append(float(np.linalg.eigvalsh(0.5 * (Gr + Gr.T)).min() / np.abs(Gr).max()))
    diag.update(max_residual=max(resid), incidence=max(incid), all_real=bool(all(reality)),
                reality=reality, min_eigenvalue=min(eig_min), positive=bool(min(eig_min) > 0))
    return TraceResult(mode, states, arcs, diag, cons, tracked, pts)


# ------------------------------------------------------------------ real chart and EW fit

@dataclass
class RealChart:
    """Chart ``x = L (r - r0)`` on the real slice, orthonormal for the real metric at the base."""

    base: ParamCurve
    system: RealSystem
    y0: np.ndarray
    directions: np.ndarray
    L: np.ndarray
    product_index: int = 0

    @classmethod
    def at(cls, curve: ParamCurve) -> "RealChart":
        sys, r0, c = real_system_for(curve)
        N = real_tangent_basis(sys, r0)
        k0 = int(np.abs(from_roots(c.base_preimages).coeffs).argmax())
        G, _ = phase_normalized(real_gram(c, sys.coefficient_delta(N), index=k0))
        G = 0.5 * (G + G.T)
        if np.trace(G) < 0:
            G = -G
        A = np.linalg.inv(np.linalg.cholesky(G)).T
        N = N @ A
        N = N / np.linalg.norm(N, axis=0).mean()
        return cls(c, sys, r0, N, np.linalg.pinv(N), k0)

    def coords(self, r):
        return self.L @ (np.asarray(r).real - self.y0)

    def state(self, x, guess=None):
        x = np.asarray(x).real
        r = self.y0 + self.directions @ x if guess is None else guess
        r, _ = newton(self.system, r, extra=self.L, extra_rhs=x + self.L @ self.y0, max_iter=20)
        return r

    def curve(self, r):
        return self.system.curve(r)

    def tangents(self, r):
        J = self.system.jacobian(r)
        A = np.vstack([J, self.L])
        rhs = np.zeros((A.shape[0], 3))
        rhs[J.shape[0]:] = np.eye(3)
        return np.linalg.lstsq(A, rhs, rcond=None)[0]

    def metric(self, r):
        c = self.curve(r)
        return real_gram(c, self.system.coefficient_delta(self.tangents(r)), index=self.product_index)


def _phase_normalizer(G):
    tr = np.trace(G, axis1=1, axis2=2)
    return G * (np.abs(tr) / tr)[:, None, None]


def _conjugate_lift(curve, rng):
    z = ProjPoint(1.0, complex(*rng.normal(size=2) * 0.6)).normalized()
    return [z, sigma_param(z)]


@dataclass
class RealEWResult:
    report: object
    gram_imag: float
    gamma_imag: float
    form_imag: float
    model: object = field(repr=False, default=None)

    def to_json(self) -> dict:
        return dict(self.report.to_json(), gram_imag=self.gram_imag, gamma_imag=self.gamma_imag,
                    form_imag=self.form_imag)


def real_ew_fit(curve: ParamCurve, radius: float = 0.05, n_samples: int = 500, n_arcs: int = 30,
                degree: int = 4, seed: int = 0) -> RealEWResult:
    """Einstein-Weyl fit in three real coordinates on the real slice.

    The fits use complex arithmetic throughout; the imaginary parts of the
    sampled metric, the connection and the Weyl form are reported, not imposed.
    """
    from .weyl_fit import (SurrogateModel, ew_residual, fit_metric, fit_weyl_form, geodesic_samples,
                           metric_samples, polydisc)
    rng = np.random.default_rng(seed)
    chart = RealChart.at(curve)
    X, G = metric_samples(chart, n_samples, radius, rng, real=True)
    Gn = _phase_normalizer(G)
    gram_imag = float(np.abs(Gn.imag).max() / np.abs(Gn).max())
    gm = fit_metric(chart, (X, Gn), degree=degree, radius=radius)
    gm = SurrogateModel(chart, gm.metric, None, radius, gm.g_fitter, residuals=gm.residuals, real=True)
    geo = geodesic_samples(chart, n_arcs, radius, rng, real=True, lift=_conjugate_lift)
    model = fit_weyl_form(chart, gm, geo, degree=degree)
    model.real = True
    rep = ew_residual(model, rng=rng)
    T = polydisc(100, 0.8 * radius, rng, real=True)
    Gam = model.gamma(T)
    a = model.weyl_form(T)
    gi = float(np.abs(Gam.imag).max() / max(np.abs(Gam).max(), 1e-300))
    ai = float(np.abs(a.imag).max() / max(np.abs(a).max(), 1e-300))
    return RealEWResult(rep, gram_imag, gi, ai, model)
