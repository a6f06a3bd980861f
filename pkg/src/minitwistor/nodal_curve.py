"""Nodal rational curves of bidegree (m, 2) through the configuration points.

Two models are kept side by side.  An :class:`ImplicitCurve` stores the
bihomogeneous form ``F``; row ``i`` multiplies ``u0^(du-i) u1^i`` and column
``j`` multiplies ``v0^(dv-j) v1^j``, so in affine coordinates
``F = A(u) v^2 + B(u) v + C(u)`` with ``C, B, A`` the three columns.

A :class:`ParamCurve` is the normalization ``z -> ((U0:U1), (V0:V1))``.  The
projection of a bidegree (m, 2) curve to the ``u`` line has degree 2, so the
``U`` pair is quadratic and the ``V`` pair has degree ``m``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from . import io
from .binary_forms import (BinaryForm, ProjPoint, as_point, chart_coordinate, chart_monomials,
                           chart_point, divide_exact, DivisionResidualTooLarge, from_roots,
                           interpolate_form, monomials, mobius_through, partial0, partial1,
                           root_clusters, simple_roots, sylvester, wronskian, coprimality)
from .surface_config import Point2, PointConfig, transversality_check

NODE_TOL = 1e-8


class NewtonDivergence(RuntimeError):
    pass


class NodeCountMismatch(RuntimeError):
    pass


class NonNodalSingularity(ValueError):
    pass


class DiscriminantFactorizationFailed(ValueError):
    pass


class ReductionFailed(ValueError):
    pass


class DegenerateImage(ValueError):
    pass


class DegreeUnachievable(ValueError):
    pass


# ---------------------------------------------------------------- implicit model

def bihom_eval(F: np.ndarray, u, v) -> complex:
    du, dv = F.shape[0] - 1, F.shape[1] - 1
    return complex(monomials(u, du) @ F @ monomials(v, dv))


def _chart_rows(charts: tuple[int, int], x: complex, y: complex, shape: tuple[int, int]) -> np.ndarray:
    """Linear functionals on flattened coefficients: F, F_x, F_y, F_xx, F_xy, F_yy in a chart."""
    du, dv = shape[0] - 1, shape[1] - 1
    cu, cv = charts
    mx = [chart_monomials(x, cu, du, k) for k in range(3)]
    my = [chart_monomials(y, cv, dv, k) for k in range(3)]
    orders = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    return np.array([np.outer(mx[a], my[b]).ravel() for a, b in orders])


@dataclass(eq=False)
class ImplicitCurve:
    coeffs: np.ndarray
    nodes: list[Point2] = field(default_factory=list)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)

    @property
    def bidegree(self) -> tuple[int, int]:
        return self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1

    def __call__(self, p: Point2) -> complex:
        return bihom_eval(self.coeffs, p[0], p[1])

    def scale(self) -> float:
        return float(np.abs(self.coeffs).max())

    def normalized(self) -> "ImplicitCurve":
        c = self.coeffs
        k = np.unravel_index(np.abs(c).argmax(), c.shape)
        return ImplicitCurve(c / c[k], list(self.nodes))

    def singular_residual(self, p: Point2) -> float:
        """Relative size of ``(F, F_x, F_y)`` at ``p`` in its best chart."""
        (x, cu), (y, cv) = chart_coordinate(p[0]), chart_coordinate(p[1])
        rows = _chart_rows((cu, cv), x, y, self.coeffs.shape)[:3]
        return float(np.abs(rows @ self.coeffs.ravel()).max() / self.scale())

    def to_json(self) -> dict:
        return {"coeffs": [io.cpx_array(row) for row in self.coeffs],
                "nodes": [[io.point_to_json(u), io.point_to_json(v)] for u, v in self.nodes]}

    @classmethod
    def from_json(cls, d: dict) -> "ImplicitCurve":
        coeffs = np.array([io.from_cpx_array(r) for r in d["coeffs"]])
        nodes = [(io.point_from_json(u), io.point_from_json(v)) for u, v in d.get("nodes", [])]
        return cls(coeffs, nodes)


def proportionality_error(F: np.ndarray, G: np.ndarray) -> float:
    """``min_s |F - s G| / |F|`` for coefficient arrays of equal shape."""
    f, g = np.ravel(F), np.ravel(G)
    s = np.vdot(g, f) / np.vdot(g, g)
    return float(np.linalg.norm(f - s * g) / np.linalg.norm(f))


def _dedupe(points: list[Point2], tol: float = 1e-6) -> list[Point2]:
    out: list[Point2] = []
    for p in points:
        if not any(p[0].distance(q[0]) < tol and p[1].distance(q[1]) < tol for q in out):
            out.append(p)
    return out


def polish_singular_point(F: np.ndarray, p: Point2, iters: int = 30):
    """Gauss-Newton on ``F = F_x = F_y = 0``; returns ``(point, relative residual)``."""
    (x, cu), (y, cv) = chart_coordinate(p[0]), chart_coordinate(p[1])
    c = F.ravel()
    scale = np.abs(c).max()
    best = None
    for _ in range(iters):
        R = _chart_rows((cu, cv), x, y, F.shape) @ c
        res = R[:3]
        nres = float(np.abs(res).max() / scale)
        if best is None or nres < best[1]:
            best = ((chart_point(x, cu), chart_point(y, cv)), nres)
        if nres < 1e-15:
            break
        J = np.array([[R[1], R[2]], [R[3], R[4]], [R[4], R[5]]])
        step, *_ = np.linalg.lstsq(J, -res, rcond=None)
        if not np.all(np.isfinite(step)) or np.abs(step).max() > 10:
            break
        x, y = x + step[0], y + step[1]
    return best


def hessian_condition(F: np.ndarray, p: Point2) -> float:
    """``|det H| / |H|^2`` of the Hessian in the best chart (0 means a non-nodal singularity)."""
    (x, cu), (y, cv) = chart_coordinate(p[0]), chart_coordinate(p[1])
    R = _chart_rows((cu, cv), x, y, F.shape) @ F.ravel()
    H = np.array([[R[3], R[4]], [R[4], R[5]]])
    nh = np.abs(H).max()
    if nh == 0:
        return 0.0
    return float(abs(np.linalg.det(H)) / nh ** 2)


def find_nodes(curve: ImplicitCurve | np.ndarray, tol: float = NODE_TOL,
               hessian_tol: float = 1e-7) -> list[Point2]:
    """Singular points of ``F``, each certified as an ordinary node.

    Candidates come from the roots of the u-discriminant ``B^2 - 4AC`` (every
    singular point projects to one of them) and the corresponding roots in
    ``v``; each candidate is polished by Gauss-Newton on ``F = F_u = F_v = 0``.
    """
    F = curve.coeffs if isinstance(curve, ImplicitCurve) else np.asarray(curve, dtype=complex)
    dv = F.shape[1] - 1
    if dv == 1:
        # a singular point of B(u) v + C(u) needs B(u) = C(u) = 0, i.e. a fibre component
        B, C = BinaryForm(F[:, 1]), BinaryForm(F[:, 0])
        if coprimality(B, C) > 1e-10:
            return []
        raise NonNodalSingularity("a v-linear curve with a fibre component")
    if dv != 2:
        raise ValueError("only v-degree 1 or 2 is supported")
    A, B, C = BinaryForm(F[:, 2]), BinaryForm(F[:, 1]), BinaryForm(F[:, 0])
    disc = B * B - 4 * (A * C)
    if disc.is_zero(1e-13 * np.abs(F).max() ** 2):
        raise NonNodalSingularity("discriminant vanishes identically (non-reduced curve)")
    cands = []
    for u, _, _ in root_clusters(disc, cluster_tol=1e-6):
        cands.append((u, None))
    return _polish_candidates(F, cands, tol, hessian_tol)


def _polish_candidates(F, cands, tol, hessian_tol) -> list[Point2]:
    dv = F.shape[1] - 1
    found: list[Point2] = []
    for u, _ in cands:
        g = BinaryForm(monomials(u, F.shape[0] - 1) @ F)
        if g.is_zero(1e-12 * np.abs(F).max()):
            raise NonNodalSingularity("a fibre of the u-projection is a component")
        vs = [p for p, _, _ in root_clusters(g, cluster_tol=1e-9)] if dv > 0 else []
        for v in vs:
            pt, res = polish_singular_point(F, (u, v))
            if res < tol:
                found.append(pt)
    found = _dedupe(found)
    for p in found:
        if hessian_condition(F, p) < hessian_tol:
            raise NonNodalSingularity(f"degenerate Hessian at {p}")
    return found


def reducible_seed(config: PointConfig) -> ImplicitCurve:
    """``F = F1 F2`` for the two graph curves; its nodes are ``D1 ∩ D2``."""
    F1 = config.curves.D1.coeff_matrix()
    F2 = config.curves.D2.coeff_matrix()
    m = config.m
    F = np.zeros((m + 1, 3), dtype=complex)
    for (i1, j1), (i2, j2) in itertools.product(np.ndindex(F1.shape), np.ndindex(F2.shape)):
        F[i1 + i2, j1 + j2] += F1[i1, j1] * F2[i2, j2]
    return ImplicitCurve(F, transversality_check(config.curves))


def point_conditions(points: Sequence[Point2], shape: tuple[int, int]) -> np.ndarray:
    du, dv = shape[0] - 1, shape[1] - 1
    return np.array([np.outer(monomials(u.normalized(), du),
                              monomials(v.normalized(), dv)).ravel() for u, v in points])


def _node_charts(p: Point2):
    (x, cu), (y, cv) = chart_coordinate(p[0]), chart_coordinate(p[1])
    return x, y, (cu, cv)


def smooth_one_node(seed: ImplicitCurve, keep: Sequence[int], step: float = 1e-2,
                    points: Sequence[Point2] | None = None, retries: int = 8,
                    info: dict | None = None) -> ImplicitCurve:
    """Deform ``seed`` inside the system through the points, keeping the nodes in ``keep``.

    The deformation direction is the projection, onto forms vanishing at the
    kept nodes, of the evaluation functional at the omitted node; its sign is
    the one that makes the value at the omitted node positive real, and it is
    recorded in ``info['direction_sign']``.  For each trial step ``h`` the kept
    nodes are re-solved by Newton's method with free positions.
    """
    F0 = seed.coeffs
    shape = F0.shape
    nodes = list(seed.nodes)
    keep = sorted(set(keep))
    omit = [i for i in range(len(nodes)) if i not in keep]
    if len(omit) != 1:
        raise ValueError("keep must omit exactly one node")
    if points is None:
        raise ValueError("the configuration points are required")
    N = null_space(point_conditions(points, shape))
    f0 = F0.ravel() / np.abs(F0).max()
    y0 = N.conj().T @ f0
    if np.linalg.norm(N @ y0 - f0) > 1e-8 * np.linalg.norm(f0):
        raise ValueError("seed does not pass through the points")
    kept = [nodes[i] for i in keep]
    charts = [_node_charts(p) for p in kept]
    E = np.array([_chart_rows(ch, x, y, shape)[0] @ N for x, y, ch in charts])
    T = null_space(E) if len(kept) else np.eye(N.shape[1])
    Bperp = null_space(T.conj().T) if T.shape[1] < N.shape[1] else np.zeros((N.shape[1], 0))
    p_om = nodes[omit[0]]
    x_om, y_om, ch_om = _node_charts(p_om)
    e_om = _chart_rows(ch_om, x_om, y_om, shape)[0] @ N
    d = T @ (T.conj().T @ e_om.conj())
    d = d / np.linalg.norm(d)
    val = e_om @ d
    d = d * (abs(val) / val)
    if info is not None:
        info["direction"] = d
    n_keep = len(kept)

    def solve(h, w, xy):
        w = w.copy()
        xy = xy.copy()
        for it in range(40):
            c = N @ (y0 + h * d + Bperp @ w)
            res = np.zeros(3 * n_keep, dtype=complex)
            J = np.zeros((3 * n_keep, Bperp.shape[1] + 2 * n_keep), dtype=complex)
            NB = N @ Bperp
            for i in range(n_keep):
                x, y = xy[2 * i], xy[2 * i + 1]
                R = _chart_rows(charts[i][2], x, y, shape)
                vals = R @ c
                res[3 * i:3 * i + 3] = vals[:3]
                J[3 * i:3 * i + 3, :Bperp.shape[1]] = R[:3] @ NB
                col = Bperp.shape[1] + 2 * i
                J[3 * i:3 * i + 3, col] = [vals[1], vals[3], vals[4]]
                J[3 * i:3 * i + 3, col + 1] = [vals[2], vals[4], vals[5]]
            nres = np.linalg.norm(res)
            if nres < 1e-13:
                return w, xy, it
            delta = np.linalg.solve(J, -res) if J.shape[0] == J.shape[1] else \
                np.linalg.lstsq(J, -res, rcond=None)[0]
            if not np.all(np.isfinite(delta)) or np.linalg.norm(delta) > 1.0:
                break
            w = w + delta[:Bperp.shape[1]]
            xy = xy + delta[Bperp.shape[1]:]
        raise NewtonDivergence(f"node correction did not converge at h={h:.3g}")

    w = np.zeros(Bperp.shape[1], dtype=complex)
    xy = np.array([v for ch in charts for v in ch[:2]], dtype=complex)
    h, dh = 0.0, step
    tries = 0
    while h < step * (1 - 1e-12):
        trial = min(h + dh, step)
        try:
            w, xy, _ = solve(trial, w, xy)
            h = trial
            dh = min(2 * dh, step)
        except NewtonDivergence:
            tries += 1
            if tries > retries:
                raise
            dh /= 2
    c = N @ (y0 + h * d + Bperp @ w)
    F = c.reshape(shape)
    new_nodes = [(chart_point(xy[2 * i], charts[i][2][0]), chart_point(xy[2 * i + 1], charts[i][2][1]))
                 for i in range(n_keep)]
    found = find_nodes(F)
    if len(found) != n_keep:
        raise NodeCountMismatch(f"expected {n_keep} nodes, found {len(found)}")
    if ImplicitCurve(F).singular_residual(p_om) < 1e-6:
        raise NodeCountMismatch("the omitted node persisted")
    return ImplicitCurve(F, _match_nodes(new_nodes, found))


def _match_nodes(ref: list[Point2], found: list[Point2]) -> list[Point2]:
    out = []
    rest = list(found)
    for p in ref:
        k = min(range(len(rest)), key=lambda i: p[0].distance(rest[i][0]) + p[1].distance(rest[i][1]))
        out.append(rest.pop(k))
    return out


# ---------------------------------------------------------------- parametric model

def _bezout(F0: BinaryForm, F1: BinaryForm, s: ProjPoint, t: ProjPoint) -> complex:
    num = F0(s) * F1(t) - F1(s) * F0(t)
    return num / (s.z0 * t.z1 - s.z1 * t.z0)


@dataclass(eq=False)
class ParamCurve:
    U0: BinaryForm
    U1: BinaryForm
    V0: BinaryForm
    V1: BinaryForm
    base_preimages: list[ProjPoint] = field(default_factory=list)
    node_pairs: list[tuple[ProjPoint, ProjPoint]] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.V0.degree

    def image(self, z) -> Point2:
        z = as_point(z)
        return ProjPoint(self.U0(z), self.U1(z)), ProjPoint(self.V0(z), self.V1(z))

    def coeff_vector(self) -> np.ndarray:
        return np.concatenate([self.U0.coeffs, self.U1.coeffs, self.V0.coeffs, self.V1.coeffs])

    @classmethod
    def from_vector(cls, c: np.ndarray, m: int, du: int = 2, **kw) -> "ParamCurve":
        a = du + 1
        b = m + 1
        return cls(BinaryForm(c[:a]), BinaryForm(c[a:2 * a]), BinaryForm(c[2 * a:2 * a + b]),
                   BinaryForm(c[2 * a + b:2 * a + 2 * b]), **kw)

    def with_coeffs(self, c: np.ndarray, **kw) -> "ParamCurve":
        base = dict(base_preimages=list(self.base_preimages), node_pairs=list(self.node_pairs))
        base.update(kw)
        return ParamCurve.from_vector(c, self.m, self.U0.degree, **base)

    def nodes(self) -> list[Point2]:
        return [self.image(s) for s, _ in self.node_pairs]

    def tangent(self, z) -> tuple[complex, complex]:
        """Image tangent ``(du/dt, dv/dt)`` in the affine chart ``u = u1/u0, v = v1/v0``."""
        z = as_point(z)
        WU, WV = wronskian(self.U0, self.U1)(z), wronskian(self.V0, self.V1)(z)
        u0, v0 = self.U0(z), self.V0(z)
        if u0 == 0 or v0 == 0:
            raise ValueError("image point is not in the affine chart")
        return WU / u0 ** 2, WV / v0 ** 2

    def is_coprime(self, tol: float = 1e-9) -> bool:
        return coprimality(self.U0, self.U1) > tol and coprimality(self.V0, self.V1) > tol

    def transformed(self, M: np.ndarray) -> "ParamCurve":
        """Reparametrize by ``w = M z``; preimages map accordingly."""
        Minv = np.linalg.inv(M)
        f = [g.compose(Minv) for g in (self.U0, self.U1, self.V0, self.V1)]

        def mv(p):
            return ProjPoint.from_array(M @ p.as_array()).normalized()
        return ParamCurve(*f, [mv(p) for p in self.base_preimages],
                          [(mv(s), mv(t)) for s, t in self.node_pairs])

    def to_json(self) -> dict:
        return {"m": self.m,
                "U0": io.form_to_json(self.U0), "U1": io.form_to_json(self.U1),
                "V0": io.form_to_json(self.V0), "V1": io.form_to_json(self.V1),
                "base_preimages": [io.point_to_json(p) for p in self.base_preimages],
                "node_pairs": [[io.point_to_json(s), io.point_to_json(t)] for s, t in self.node_pairs]}

    @classmethod
    def from_json(cls, d: dict) -> "ParamCurve":
        return cls(io.form_from_json(d["U0"]), io.form_from_json(d["U1"]),
                   io.form_from_json(d["V0"]), io.form_from_json(d["V1"]),
                   [io.point_from_json(p) for p in d.get("base_preimages", [])],
                   [(io.point_from_json(s), io.point_from_json(t)) for s, t in d.get("node_pairs", [])])


def incidence_values(curve: ParamCurve, z, p: Point2) -> np.ndarray:
    """The two cross products ``pu0 U1 - pu1 U0`` and ``pv0 V1 - pv1 V0`` at ``z``."""
    z = as_point(z)
    pu, pv = p[0].normalized(), p[1].normalized()
    return np.array([pu.z0 * curve.U1(z) - pu.z1 * curve.U0(z),
                     pv.z0 * curve.V1(z) - pv.z1 * curve.V0(z)])


def _gn_preimage(curve: ParamCurve, z: ProjPoint, p: Point2, iters: int = 30):
    x, ch = chart_coordinate(z)
    pu, pv = p[0].normalized(), p[1].normalized()
    forms = [(pu.z0 * curve.U1 - pu.z1 * curve.U0), (pv.z0 * curve.V1 - pv.z1 * curve.V0)]
    scale = max(np.abs(curve.coeff_vector()).max(), 1e-300)
    res = None
    for _ in range(iters):
        r = np.array([f.coeffs @ chart_monomials(x, ch, f.degree) for f in forms])
        res = float(np.abs(r).max() / scale)
        if res < 1e-15:
            break
        J = np.array([f.coeffs @ chart_monomials(x, ch, f.degree, 1) for f in forms])
        denom = np.vdot(J, J).real
        if denom == 0:
            break
        step = -np.vdot(J, r) / denom
        x = x + step
        if abs(x) > 1.5:
            z = chart_point(x, ch).normalized()
            x, ch = chart_coordinate(z)
    return chart_point(x, ch).normalized(), res


def preimages_of(curve: ParamCurve, p: Point2, tol: float = 1e-8) -> list[ProjPoint]:
    """All parameters ``z`` with ``phi(z) = p`` (two for a node, one for an ordinary point)."""
    pu = p[0].normalized()
    g = pu.z0 * curve.U1 - pu.z1 * curve.U0
    cands = simple_roots(g) if not g.is_zero(1e-14) else []
    out: list[ProjPoint] = []
    for z in cands:
        z2, res = _gn_preimage(curve, z, p)
        if res is not None and res < tol and not any(z2.distance(w) < 1e-7 for w in out):
            out.append(z2)
    return out


def solve_base_preimages(curve: ParamCurve, points: Sequence[Point2], tol: float = 1e-8) -> list[ProjPoint]:
    out = []
    for p in points:
        zs = preimages_of(curve, p, tol)
        if len(zs) != 1:
            raise ValueError(f"point {p} has {len(zs)} preimages on the curve")
        out.append(zs[0])
    return out


def _split_quadratic(q: np.ndarray) -> tuple[ProjPoint, ProjPoint]:
    """Roots ``s, t`` of ``q`` scaled so that ``(s1 z0 - s0 z1)(t1 z0 - t0 z1) = q``."""
    rs = simple_roots(BinaryForm(q), tol=1e-13)
    s, t = rs[0].normalized(), rs[1].normalized()
    prod = np.convolve([s.z1, -s.z0], [t.z1, -t.z0])
    rho = np.vdot(prod, q) / np.vdot(prod, prod)
    return ProjPoint(rho * s.z0, rho * s.z1), t


def node_pairs_of(curve: ParamCurve, rng: np.random.Generator | None = None,
                  tol: float = 1e-9) -> list[tuple[ProjPoint, ProjPoint]]:
    """Pairs ``s != t`` with ``phi(s) = phi(t)``.

    The unordered pair is encoded by the quadratic ``q`` with roots ``s, t``.
    The U-Bezoutian is linear in ``q`` and cuts out a line; on that line the
    V-Bezoutian is a binary form of degree ``m - 1`` whose roots are the nodes.
    """
    m = curve.m
    if m < 2:
        return []
    rng = np.random.default_rng(12345) if rng is None else rng

    def rand_q():
        return rng.normal(size=3) + 1j * rng.normal(size=3)

    Q = np.array([rand_q() for _ in range(3)])
    b = np.array([_bezout(curve.U0, curve.U1, *_split_quadratic(q)) for q in Q])
    ell = np.linalg.solve(Q, b)
    basis = null_space(ell[None, :])
    qa, qb = basis[:, 0], basis[:, 1]
    n_s = m + 3
    angles = 2 * np.pi * (np.arange(n_s) + 0.37) / n_s
    pts = [ProjPoint(1.0, np.exp(1j * a)) for a in angles]
    vals = [_bezout(curve.V0, curve.V1, *_split_quadratic(qa + p.z1 * qb)) for p in pts]
    form = interpolate_form(pts, vals, m - 1)
    pairs = []
    for r in simple_roots(form, tol=1e-12):
        q = r.z0 * qa + r.z1 * qb
        s, t = _split_quadratic(q)
        s, t = _polish_pair(curve, s.normalized(), t.normalized())
        pairs.append((s, t))
    return pairs


def _polish_pair(curve: ParamCurve, s: ProjPoint, t: ProjPoint, iters: int = 20):
    xs, cs = chart_coordinate(s)
    xt, ct = chart_coordinate(t)

    def G(a, b):
        S, T = chart_point(a, cs), chart_point(b, ct)
        return np.array([_bezout(curve.U0, curve.U1, S, T), _bezout(curve.V0, curve.V1, S, T)])

    for _ in range(iters):
        g = G(xs, xt)
        if np.abs(g).max() < 1e-15 * np.abs(curve.coeff_vector()).max():
            break
        eps = 1e-7
        J = np.column_stack([(G(xs + eps, xt) - G(xs - eps, xt)) / (2 * eps),
                             (G(xs, xt + eps) - G(xs, xt - eps)) / (2 * eps)])
        try:
            dx = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            break
        if np.abs(dx).max() > 0.5:
            break
        xs, xt = xs + dx[0], xt + dx[1]
        if np.abs(dx).max() < 1e-15:
            break
    return chart_point(xs, cs).normalized(), chart_point(xt, ct).normalized()


def _chart_tangent(curve: ParamCurve, z: ProjPoint, chu: bool, chv: bool) -> np.ndarray:
    WU, WV = wronskian(curve.U0, curve.U1)(z), wronskian(curve.V0, curve.V1)(z)
    tu = WU / curve.U0(z) ** 2 if chu else -WU / curve.U1(z) ** 2
    tv = WV / curve.V0(z) ** 2 if chv else -WV / curve.V1(z) ** 2
    return np.array([tu, tv])


def is_ordinary_pair(curve: ParamCurve, s: ProjPoint, t: ProjPoint, tol: float = 1e-6) -> bool:
    P = curve.image(s)
    chu, chv = abs(P[0].z0) >= abs(P[0].z1), abs(P[1].z0) >= abs(P[1].z1)
    a = _chart_tangent(curve, s, chu, chv)
    b = _chart_tangent(curve, t, chu, chv)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return False
    return abs(a[0] * b[1] - a[1] * b[0]) / (na * nb) > tol


def implicitize_raw(U0: BinaryForm, U1: BinaryForm, V0: BinaryForm, V1: BinaryForm) -> np.ndarray:
    """Unnormalized ``Res_z(u0 U1 - u1 U0, v0 V1 - v1 V0)`` as a ``(deg V + 1, deg U + 1)`` array.

    Rows index the u-monomials and columns the v-monomials; the resultant is
    sampled at roots of unity in each factor and interpolated by an inverse DFT.
    """
    du = V0.degree  # degree of F in u equals the degree of the v-map
    dv = U0.degree
    nu, nv = du + 1, dv + 1
    wu = np.exp(2j * np.pi * np.arange(nu) / nu)
    wv = np.exp(2j * np.pi * np.arange(nv) / nv)
    vals = np.empty((nu, nv), dtype=complex)
    for a in range(nu):
        gu = U1.coeffs - wu[a] * U0.coeffs
        for b in range(nv):
            gv = V1.coeffs - wv[b] * V0.coeffs
            vals[a, b] = np.linalg.det(sylvester(gu, gv))
    # vals[a, b] = sum_ij F[i, j] wu[a]^i wv[b]^j
    Vu = np.vander(wu, increasing=True)
    Vv = np.vander(wv, increasing=True)
    return np.linalg.solve(Vu, np.linalg.solve(Vv, vals.T).T)


def implicitize(curve: ParamCurve, rng: np.random.Generator | None = None) -> ImplicitCurve:
    """Bidegree ``(m, 2)`` equation of the image, scaled so its largest coefficient is 1."""
    F = implicitize_raw(curve.U0, curve.U1, curve.V0, curve.V1)
    scale = np.abs(F).max()
    ref = max(np.abs(curve.coeff_vector()).max(), 1e-300)
    if scale <= 1e-12 * ref ** (curve.U0.degree + curve.V0.degree):
        raise DegenerateImage("the image equation vanishes identically")
    rng = np.random.default_rng(7) if rng is None else rng
    z = ProjPoint(1.0, complex(rng.normal(), rng.normal()))
    if len(preimages_of(curve, curve.image(z), tol=1e-7)) > 1:
        raise DegenerateImage("the map is not birational onto its image")
    k = np.unravel_index(np.abs(F).argmax(), F.shape)
    out = ImplicitCurve(F / F[k])
    if curve.node_pairs:
        out.nodes = curve.nodes()
    return out


def parametrize(curve: ImplicitCurve, points: Sequence[Point2] | None = None,
                cluster_tol: float = 1e-5) -> ParamCurve:
    """Normalization of an irreducible rational curve of bidegree (m, 2) (or a (1, 1) graph)."""
    F = curve.coeffs
    du, dv = F.shape[0] - 1, F.shape[1] - 1
    if dv == 1:
        if du != 1:
            raise ValueError("v-linear curves are supported for bidegree (1, 1) only")
        U0, U1 = BinaryForm([1.0, 0.0]), BinaryForm([0.0, 1.0])
        B, C = BinaryForm(F[:, 1]), BinaryForm(F[:, 0])
        pc = ParamCurve(U0, U1, B, -C)
    elif dv == 2:
        pc = _parametrize_conic_bundle(F, cluster_tol)
    else:
        raise ValueError("only v-degree 1 or 2 is supported")
    if points is not None:
        pc.base_preimages = solve_base_preimages(pc, points)
    pc.node_pairs = node_pairs_of(pc)
    return pc


def _parametrize_conic_bundle(F: np.ndarray, cluster_tol: float) -> ParamCurve:
    m = F.shape[0] - 1
    A, B, C = BinaryForm(F[:, 2]), BinaryForm(F[:, 1]), BinaryForm(F[:, 0])
    disc = B * B - 4 * (A * C)
    clusters = root_clusters(disc, cluster_tol=cluster_tol)
    r_roots, d_roots = [], []
    for p, k, _ in clusters:
        r_roots += [p] * (k // 2)
        d_roots += [p] * (k % 2)
    if len(d_roots) != 2 or len(r_roots) != m - 1:
        raise DiscriminantFactorizationFailed(
            f"discriminant splits as {len(r_roots)} double and {len(d_roots)} simple roots")
    R = from_roots(r_roots)
    try:
        D = divide_exact(disc, R * R, tol=1e-6)
    except DivisionResidualTooLarge as exc:
        raise DiscriminantFactorizationFailed(str(exc)) from exc
    r1, r2 = (p.normalized().as_array() for p in d_roots)
    # U(z) = z0^2 r1 - z1^2 r2 puts the branch points of the u-projection at z = 0 and inf
    U0 = BinaryForm([r1[0], 0.0, -r2[0]])
    U1 = BinaryForm([r1[1], 0.0, -r2[1]])
    c12 = r1[1] * r2[0] - r1[0] * r2[1]
    probe = ProjPoint(0.8 + 0.3j, 1.1 - 0.2j)
    dval = D(probe) / ((r1[1] * probe.z0 - r1[0] * probe.z1) * (r2[1] * probe.z0 - r2[0] * probe.z1))
    w = BinaryForm([0.0, np.sqrt(dval) * c12, 0.0])
    Bz, Az = _compose_u(B, U0, U1), _compose_u(A, U0, U1)
    Rz = _compose_u(R, U0, U1)
    num = Rz * w - Bz
    den = 2 * Az
    # reduce num/den (degree 2m) to a quotient of degree-m forms: num V0 - den V1 = 0
    M = np.hstack([_conv(num.coeffs, m + 1), -_conv(den.coeffs, m + 1)])
    _, sv, Vh = np.linalg.svd(M)
    if sv[-1] > 1e-7 * sv[0] or sv[-2] < 1e-9 * sv[0]:
        raise ReductionFailed(f"reduction singular values {sv[-2]:.2e}, {sv[-1]:.2e}")
    vec = Vh[-1].conj()
    V0, V1 = BinaryForm(vec[:m + 1]), BinaryForm(vec[m + 1:])
    return ParamCurve(U0, U1, V0, V1)


def _conv(d: np.ndarray, n_cols: int) -> np.ndarray:
    rows = d.size + n_cols - 1
    M = np.zeros((rows, n_cols), dtype=complex)
    for k in range(n_cols):
        M[k:k + d.size, k] = d
    return M


def _compose_u(G: BinaryForm, U0: BinaryForm, U1: BinaryForm) -> BinaryForm:
    """``G(U0(z), U1(z))``."""
    d = G.degree
    out = BinaryForm.zero(d * U0.degree)
    for i, c in enumerate(G.coeffs):
        if c != 0:
            out = out + c * (U0 ** (d - i)) * (U1 ** i)
    return out


def compose_bihom(F: np.ndarray, curve: ParamCurve) -> BinaryForm:
    """``F(U(z), V(z))`` as a binary form in ``z``."""
    du, dv = F.shape[0] - 1, F.shape[1] - 1
    deg = du * curve.U0.degree + dv * curve.V0.degree
    out = BinaryForm.zero(deg)
    for i in range(du + 1):
        ui = (curve.U0 ** (du - i)) * (curve.U1 ** i)
        for j in range(dv + 1):
            if F[i, j] != 0:
                out = out + F[i, j] * ui * (curve.V0 ** (dv - j)) * (curve.V1 ** j)
    return out


def gauge_fix(curve: ParamCurve, pins: Sequence[int] = (0, 1, 2)) -> ParamCurve:
    """Move base preimages ``pins`` to ``(0,1), (1,1), (1,0)`` and normalize scalings.

    After the Moebius change each of the pairs ``U`` and ``V`` is scaled to unit
    norm with its largest coefficient real positive.
    """
    src = [curve.base_preimages[i] for i in pins]
    M = mobius_through(src, [ProjPoint(0, 1), ProjPoint(1, 1), ProjPoint(1, 0)])
    out = curve.transformed(M)
    for names in (("U0", "U1"), ("V0", "V1")):
        a, b = getattr(out, names[0]), getattr(out, names[1])
        v = np.concatenate([a.coeffs, b.coeffs])
        k = np.abs(v).argmax()
        s = np.linalg.norm(v) * v[k] / abs(v[k])
        setattr(out, names[0], a / s)
        setattr(out, names[1], b / s)
    return out


def preimage_spread(curve: ParamCurve) -> float:
    """Smallest chordal distance among base and node preimages."""
    pts = list(curve.base_preimages) + [p for pair in curve.node_pairs for p in pair]
    return min((pts[i].distance(pts[j]) for i in range(len(pts)) for j in range(i + 1, len(pts))),
               default=1.0)


def balanced_gauge(curve: ParamCurve) -> tuple[ParamCurve, tuple[int, int, int]]:
    """:func:`gauge_fix` with the ordered pin triple that spreads the preimages most."""
    best = None
    for pins in itertools.permutations(range(len(curve.base_preimages)), 3):
        c = gauge_fix(curve, pins)
        s = preimage_spread(c)
        if best is None or s > best[0] + 1e-12:
            best = (s, c, pins)
    return best[1], best[2]


# ------------------------------------------------------------- incidence system

def _state_charts(zs: Sequence[ProjPoint]):
    return [chart_coordinate(z) for z in zs]


def constraint_residual(curve: ParamCurve, config: PointConfig | Sequence[Point2]) -> np.ndarray:
    points = config.points if isinstance(config, PointConfig) else config
    return np.concatenate([incidence_values(curve, z, p)
                           for z, p in zip(curve.base_preimages, points)])


def constraint_jacobian(curve: ParamCurve, config: PointConfig | Sequence[Point2]):
    """Jacobian of :func:`constraint_residual` and the five gauge directions.

    Unknowns are ordered ``U0, U1, V0, V1`` coefficients followed by the affine
    chart coordinate of each base preimage (chart of largest coordinate).  The
    gauge matrix has columns: scaling of ``U``, scaling of ``V`` and the three
    infinitesimal Moebius reparametrizations.
    """
    points = config.points if isinstance(config, PointConfig) else config
    m, du = curve.m, curve.U0.degree
    nU, nV = du + 1, m + 1
    ncoef = 2 * nU + 2 * nV
    zs = curve.base_preimages
    charts = _state_charts(zs)
    n = ncoef + len(zs)
    J = np.zeros((2 * len(zs), n), dtype=complex)
    for j, ((x, ch), p) in enumerate(zip(charts, points)):
        pu, pv = p[0].normalized(), p[1].normalized()
        mu = chart_monomials(x, ch, du)
        mv = chart_monomials(x, ch, m)
        dmu = chart_monomials(x, ch, du, 1)
        dmv = chart_monomials(x, ch, m, 1)
        r = 2 * j
        J[r, 0:nU] = -pu.z1 * mu
        J[r, nU:2 * nU] = pu.z0 * mu
        J[r, ncoef + j] = pu.z0 * (curve.U1.coeffs @ dmu) - pu.z1 * (curve.U0.coeffs @ dmu)
        J[r + 1, 2 * nU:2 * nU + nV] = -pv.z1 * mv
        J[r + 1, 2 * nU + nV:ncoef] = pv.z0 * mv
        J[r + 1, ncoef + j] = pv.z0 * (curve.V1.coeffs @ dmv) - pv.z1 * (curve.V0.coeffs @ dmv)
    return J, gauge_directions(curve)


def _vector_field_form(f: BinaryForm, X: np.ndarray) -> BinaryForm:
    """Coefficients of ``z -> grad f(z) . (X z)``."""
    l0 = BinaryForm([X[0, 0], X[0, 1]])
    l1 = BinaryForm([X[1, 0], X[1, 1]])
    return partial0(f) * l0 + partial1(f) * l1


SL2_BASIS = (np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([[0.0, 1.0], [0.0, 0.0]]),
             np.array([[0.0, 0.0], [1.0, 0.0]]))


def gauge_directions(curve: ParamCurve, charts=None) -> np.ndarray:
    m, du = curve.m, curve.U0.degree
    nU, nV = du + 1, m + 1
    ncoef = 2 * nU + 2 * nV
    zs = curve.base_preimages
    charts = _state_charts(zs) if charts is None else charts
    G = np.zeros((ncoef + len(zs), 5), dtype=complex)
    G[:2 * nU, 0] = np.concatenate([curve.U0.coeffs, curve.U1.coeffs])
    G[2 * nU:ncoef, 1] = np.concatenate([curve.V0.coeffs, curve.V1.coeffs])
    for k, X in enumerate(SL2_BASIS):
        col = np.concatenate([_vector_field_form(f, X).coeffs
                              for f in (curve.U0, curve.U1, curve.V0, curve.V1)])
        G[:ncoef, 2 + k] = col
        for j, (z, (x, ch)) in enumerate(zip(zs, charts)):
            zz = chart_point(x, ch).as_array()
            dz = -X @ zz
            if ch == 0:
                G[ncoef + j, 2 + k] = (dz[1] * zz[0] - zz[1] * dz[0]) / zz[0] ** 2
            else:
                G[ncoef + j, 2 + k] = (dz[0] * zz[1] - zz[0] * dz[1]) / zz[1] ** 2
    return G


def severi_corank(curve: ParamCurve, config, tol: float = 1e-8) -> int:
    """Nullity of the incidence Jacobian minus the rank of the gauge directions."""
    J, G = constraint_jacobian(curve, config)
    s = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    nullity = J.shape[1] - rank
    gs = np.linalg.svd(G, compute_uv=False)
    grank = int(np.sum(gs > tol * gs[0]))
    return nullity - grank


# ------------------------------------------------------------- section basis

@dataclass(eq=False)
class SectionBasis:
    k: int
    node_params: list[tuple[complex, complex]]
    basis: list[np.ndarray]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def evaluate(self, i: int, z) -> complex:
        return complex(np.polyval(self.basis[i][::-1], z))

    def basepoint_free(self, tol: float = 1e-12) -> bool:
        """``1`` and ``f_k`` have no common zero: ``f_k`` has exact degree ``k``."""
        return abs(self.basis[-1][-1]) > tol


def section_basis(k: int, node_params: Sequence[tuple[complex, complex]],
                  tol: float = 1e-9) -> SectionBasis:
    """``{1, f_{delta+1}, ..., f_k}`` spanning polynomials of degree <= k with ``f(a_i) = f(b_i)``.

    Coefficients are ascending; each ``f_d`` is monic of exact degree ``d``
    with a zero constant term.
    """
    pairs = [(complex(a), complex(b)) for a, b in node_params]
    delta = len(pairs)
    if delta >= k:
        raise DegreeUnachievable("need fewer node pairs than the degree")
    for a, b in pairs:
        if abs(a - b) <= tol * max(1.0, abs(a), abs(b)):
            raise DegreeUnachievable("a node pair has coincident parameters")

    def cond(d):
        return np.array([[a ** j - b ** j for j in range(d + 1)] for a, b in pairs],
                        dtype=complex).reshape(delta, d + 1)

    Ck = cond(k)
    if delta and np.linalg.matrix_rank(Ck[:, 1:], tol=tol * max(1.0, np.abs(Ck).max())) < delta:
        raise DegreeUnachievable("node conditions are dependent")
    basis = [np.concatenate([[1.0], np.zeros(k)]).astype(complex)]
    for d in range(delta + 1, k + 1):
        M = cond(d)
        if delta:
            A, rhs = M[:, 1:d], -M[:, d]
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.linalg.norm(A @ sol - rhs) > tol * max(1.0, np.linalg.norm(rhs)):
                raise DegreeUnachievable(f"no section of exact degree {d}")
        else:
            sol = np.zeros(d - 1, dtype=complex)
        f = np.zeros(k + 1, dtype=complex)
        f[1:d] = sol
        f[d] = 1.0
        basis.append(f)
    return SectionBasis(k, pairs, basis)


def affine_node_params(curve: ParamCurve) -> list[tuple[complex, complex]]:
    return [(s.to_affine(), t.to_affine()) for s, t in curve.node_pairs]
