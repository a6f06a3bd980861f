"""Continuation of the distinguished subvarieties of W.

* ``W_{p,q}``: members through two points (geodesics);
* ``W_p``: members through one point (null surfaces);
* ``W_p^1``: members with a node at ``p`` (nodal geodesics);
* members through ``p`` with a prescribed tangent there (null geodesics).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import io
from .binary_forms import ProjPoint, chart_coordinate, from_roots, mobius_through
from .conformal import gram_of, null_plane_to_point, tangent_vector, theta_of
from .nodal_curve import (ParamCurve, balanced_gauge, is_ordinary_pair, node_pairs_of, parametrize,
                          preimage_spread, preimages_of, reducible_seed, smooth_one_node)
from .severi import (Constraint, RankDrop, SeveriSystem, StepFailure, corank, min_preimage_separation,
                     _align, newton, null_basis, system_for, trace_path)
from .surface_config import Point2, PointConfig

__all__ = ["IncidenceConstraint", "through_point", "node_at", "tangent_at", "TraceResult",
           "ChartFrame", "trace_geodesic", "trace_null_surface", "trace_nodal_locus",
           "trace_null_geodesic", "branch_enumerate", "empty_locus_probe",
           "render_displacement_svg", "move_through", "StepFailure", "RankDrop"]

IncidenceConstraint = Constraint


class DegenerateInput(ValueError):
    pass


def through_point(p: Point2) -> Constraint:
    return Constraint("through", p)


def node_at(p: Point2) -> Constraint:
    return Constraint("node", p)


def tangent_at(p: Point2, direction) -> Constraint:
    return Constraint("tangent", p, tuple(complex(d) for d in direction))


@dataclass
class TraceResult:
    mode: str
    states: list[ParamCurve]
    arc_params: list[float]
    diagnostics: dict
    constraints: list[Constraint] = field(default_factory=list)
    tracked: list[list[ProjPoint]] = field(default_factory=list)   # auxiliary preimages per state
    path: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"mode": self.mode,
                "constraints": [{"kind": c.kind, "p": [io.point_to_json(x) for x in c.p],
                                 "direction": None if c.direction is None else [io.cpx(d) for d in c.direction]}
                                for c in self.constraints],
                "states": [dict(s.to_json(), arc=a, tracked=[io.point_to_json(z) for z in t])
                           for s, a, t in zip(self.states, self.arc_params, self.tracked)],
                "diagnostics": self.diagnostics}

    @classmethod
    def from_json(cls, d: dict) -> "TraceResult":
        cons = [Constraint(c["kind"], tuple(io.point_from_json(x) for x in c["p"]),
                           None if c.get("direction") is None else tuple(io.from_cpx(v) for v in c["direction"]))
                for c in d.get("constraints", [])]
        states = [ParamCurve.from_json(s) for s in d["states"]]
        tracked = [[io.point_from_json(z) for z in s.get("tracked", [])] for s in d["states"]]
        return cls(d["mode"], states, [s.get("arc", 0.0) for s in d["states"]], d.get("diagnostics", {}),
                   cons, tracked)


def _prepare(base: ParamCurve, constraints: Sequence[Constraint], aux: Sequence[ProjPoint]):
    sys, _ = system_for(base)
    sys = sys.with_constraints(constraints, aux)
    y = sys.pack(base, aux)
    r = sys.residual(y)
    if np.abs(r).max() > 1e-7 * max(1.0, np.linalg.norm(y)):
        raise DegenerateInput(f"base member does not satisfy the constraints (residual {np.abs(r).max():.2e})")
    y, _ = newton(sys, y)
    return sys, y


def _preimage(curve: ParamCurve, p: Point2, which: int = 0) -> ProjPoint:
    pre = preimages_of(curve, p)
    if not pre:
        raise DegenerateInput("the point is not on the curve")
    return pre[min(which, len(pre) - 1)]


def _backward(sys: SeveriSystem, y: np.ndarray) -> np.ndarray:
    """Opposite of the default starting tangent of :func:`trace_path`."""
    return -_align(null_basis(sys.jacobian(y), 1)[:, 0], None, sys.ncoef)


def _relative_disc(theta) -> float:
    a, b, c = theta.as_array()
    return float(abs(b * b - 4 * a * c) / max(abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2, 1e-300))


def _collect(mode, sys, points, diag, constraints, null_check=True):
    states, arcs, tracked, nulls, incid = [], [], [], [], []
    for pp in points:
        s = pp.system
        c = s.curve(pp.y, with_nodes=True)
        states.append(c)
        arcs.append(pp.arc)
        aux = s.aux_points(pp.y)
        tracked.append(aux)
        r = s.residual(pp.y)
        incid.append(float(np.abs(r).max()))
        if null_check:
            nulls.append(_relative_disc(theta_of(c, pp.tangent[:s.ncoef])))
    diag = dict(diag)
    diag["max_residual"] = max(incid) if incid else None
    diag["null_measure"] = nulls
    diag["iterations"] = [pp.iterations for pp in points]
    diag["node_counts"] = [int(n) for n in diag.get("node_counts", [])]
    return TraceResult(mode, states, arcs, diag, list(constraints), tracked, list(points))


def trace_geodesic(base: ParamCurve, p: Point2, q: Point2, steps: int = 50, h: float = 0.02,
                   zp: ProjPoint | None = None, zq: ProjPoint | None = None,
                   direction: np.ndarray | None = None, reverse: bool = False) -> TraceResult:
    """Continuation of ``W_{p,q}`` from ``base``; ``zp, zq`` pick branches at nodes."""
    if p[0].equals(q[0]) and p[1].equals(q[1]):
        raise DegenerateInput("p and q coincide")
    zp = _preimage(base, p) if zp is None else zp
    zq = _preimage(base, q) if zq is None else zq
    cons = [through_point(p), through_point(q)]
    sys, y = _prepare(base, cons, [zp, zq])
    direction = _backward(sys, y) if reverse else direction
    points, diag = trace_path(sys, y, steps, h=h, direction=direction)
    out = _collect("geodesic", sys, points, diag, cons)
    out.diagnostics["non_null"] = all(v > 1e-8 for v in out.diagnostics["null_measure"])
    return out


def trace_nodal_locus(base: ParamCurve, p: Point2, steps: int = 50, h: float = 0.02,
                      reverse: bool = False) -> TraceResult:
    """Continuation of ``W_p^1``: the node stays at ``p``."""
    pairs = base.node_pairs or node_pairs_of(base)
    best = min(pairs, key=lambda st: _image_distance(base.image(st[0]), p))
    if _image_distance(base.image(best[0]), p) > 1e-6:
        raise DegenerateInput("p is not a node of the base member")
    cons = [node_at(p)]
    sys, y = _prepare(base, cons, list(best))
    points, diag = trace_path(sys, y, steps, h=h, direction=_backward(sys, y) if reverse else None)
    out = _collect("nodal", sys, points, diag, cons)
    roots_ok = []
    for pp in points:
        s, t = pp.system.aux_points(pp.y)
        th = theta_of(pp.system.curve(pp.y), pp.tangent[:sys.ncoef]).as_form()
        scale = th.norm()
        roots_ok.append(float(max(abs(th(s)), abs(th(t))) / scale))
    out.diagnostics["theta_at_pair"] = roots_ok
    out.diagnostics["non_null"] = all(v > 1e-8 for v in out.diagnostics["null_measure"])
    return out


def trace_null_geodesic(base: ParamCurve, p: Point2, direction=None, steps: int = 50,
                        h: float = 0.02, zp: ProjPoint | None = None, reverse: bool = False) -> TraceResult:
    """Members through ``p`` with a fixed tangent direction there (``q`` infinitely near ``p``)."""
    zp = _preimage(base, p) if zp is None else zp
    direction = base.tangent(zp) if direction is None else direction
    cons = [tangent_at(p, direction)]
    sys, y = _prepare(base, cons, [zp])
    points, diag = trace_path(sys, y, steps, h=h, direction=_backward(sys, y) if reverse else None)
    out = _collect("nullgeo", sys, points, diag, cons)
    out.diagnostics["null"] = all(v < 1e-8 for v in out.diagnostics["null_measure"])
    return out


@dataclass
class NullSurfaceResult:
    states: list[ParamCurve]
    grid: list[tuple[float, float]]
    degeneracy: list[float]
    witness_error: list[float]
    tracked: list[ProjPoint]
    systems: list = field(default_factory=list, repr=False)
    ys: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"mode": "nullsurf",
                "states": [dict(c.to_json(), grid=list(g), tracked=[io.point_to_json(z)])
                           for c, g, z in zip(self.states, self.grid, self.tracked)],
                "diagnostics": {"degeneracy": self.degeneracy, "witness_error": self.witness_error,
                                "max_degeneracy": max(self.degeneracy),
                                "max_witness_error": max(self.witness_error)}}


def trace_null_surface(base: ParamCurve, p: Point2, grid: int = 5, h: float = 0.05,
                       zp: ProjPoint | None = None) -> NullSurfaceResult:
    """States of ``W_p`` on a ``grid x grid`` patch of the tangent plane at ``base``.

    At every state the tangent plane is checked to be null: the restricted gram
    is degenerate (relative determinant) and its common root is the tracked
    preimage of ``p``.
    """
    zp = _preimage(base, p) if zp is None else zp
    cons = [through_point(p)]
    sys, y0 = _prepare(base, cons, [zp])
    J = sys.jacobian(y0)
    if corank(J) != 2:
        raise RankDrop(f"null surface is not smooth at the base (corank {corank(J)})")
    T = null_basis(J, 2)
    offs = (np.arange(grid) - (grid - 1) / 2) * h
    out = NullSurfaceResult([], [], [], [], [])
    for s in offs:
        for t in offs:
            y = y0 + s * T[:, 0] + t * T[:, 1]
            y, _ = newton(sys, y, extra=T.conj().T, extra_rhs=np.array([s, t]) + T.conj().T @ y0)
            Jy = sys.jacobian(y)
            if corank(Jy) != 2:
                raise RankDrop("rank drop on the null surface patch")
            c = sys.curve(y, with_nodes=True)
            Ty = null_basis(Jy, 2)[:sys.ncoef]
            tv = [tangent_vector(c, d) for d in Ty.T]
            G = gram_of([v.theta for v in tv])
            deg = abs(np.linalg.det(G)) / max(np.linalg.norm(G) ** 2, 1e-300)
            z = sys.aux_points(y)[0]
            wit = null_plane_to_point(c, tv)
            out.states.append(c)
            out.grid.append((float(s), float(t)))
            out.degeneracy.append(float(deg))
            out.witness_error.append(float(wit.witness_root.distance(z)))
            out.tracked.append(z)
            out.systems.append(sys)
            out.ys.append(y)
    return out


@dataclass
class BranchSeed:
    zp: ProjPoint
    zq: ProjPoint
    p_is_node: bool
    q_is_node: bool


def branch_enumerate(curve: ParamCurve, p: Point2, q: Point2) -> list[BranchSeed]:
    """One seed per choice of preimages of ``p`` and ``q`` (1, 2 or 4 germs)."""
    P = preimages_of(curve, p)
    Q = preimages_of(curve, q)
    if not P or not Q:
        raise DegenerateInput("the curve does not pass through both points")
    return [BranchSeed(a, b, len(P) > 1, len(Q) > 1) for a in P for b in Q]


def _image_distance(a: Point2, b: Point2) -> float:
    return max(a[0].distance(b[0]), a[1].distance(b[1]))


# ------------------------------------------------------------------ moving a member through points

def _affine(p: ProjPoint) -> tuple[complex, int]:
    return chart_coordinate(p)


def _path_point(p0: Point2, p1: Point2, tau: float, gamma: complex) -> Point2:
    out = []
    for a, b in zip(p0, p1):
        xb, ch = _affine(b)
        a = a.normalized()
        den = a.z0 if ch == 0 else a.z1
        if abs(den) < 1e-12:
            raise StepFailure("start point is at infinity in the target chart")
        xa = (a.z1 if ch == 0 else a.z0) / den
        x = (1 - tau) * xa + tau * xb + gamma * tau * (1 - tau)
        out.append(ProjPoint(1.0, x) if ch == 0 else ProjPoint(x, 1.0))
    return tuple(out)


def valid_member(sys: SeveriSystem, y: np.ndarray, tol: float = 1e-9) -> tuple[bool, str]:
    """Coprime maps, separated preimages and ``m - 1`` ordinary nodes."""
    c = sys.curve(y)
    if np.abs(sys.residual(y)).max() > tol * max(1.0, np.linalg.norm(y)):
        return False, "residual"
    if not c.is_coprime(1e-6):
        return False, "maps share a factor"
    try:
        pairs = node_pairs_of(c)
    except Exception:   # noqa: BLE001 - any failure here means a degenerate member
        return False, "node pairs failed"
    if min_preimage_separation(sys, y, pairs) < 1e-4:
        return False, "preimages collide"
    if sum(is_ordinary_pair(c, s, t) for s, t in pairs) != c.m - 1:
        return False, "node count"
    return True, "ok"


def move_through(curve: ParamCurve, targets: Sequence[Point2], starts: Sequence[ProjPoint] | None = None,
                 gamma: Sequence[complex] | None = None, max_halvings: int = 12,
                 rng: np.random.Generator | None = None):
    """Homotopy moving the images of ``starts`` to ``targets`` inside W.

    Returns ``(curve, preimages)``; raises :class:`StepFailure` when the path
    cannot be followed or ends at a degenerate member.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if starts is None:
        starts = [ProjPoint(1.0, complex(*rng.normal(size=2) * 0.5)) for _ in targets]
    if gamma is None:
        gamma = [complex(*rng.normal(size=2) * 0.3) for _ in targets]
    p0 = [curve.image(z) for z in starts]
    sys, y = system_for(curve)
    cons = [through_point(p) for p in p0]
    sys = sys.with_constraints(cons, starts)
    y = sys.pack(curve, starts)
    tau, dtau, halvings = 0.0, 0.05, 0
    while tau < 1.0:
        nt = min(1.0, tau + dtau)
        cs = [through_point(_path_point(a, b, nt, g)) for a, b, g in zip(p0, targets, gamma)]
        s2 = SeveriSystem(sys.points, sys.m, sys.pins, sys.charts, sys.ref, cs, sys.aux_charts, sys.du)
        try:
            y2, its = newton(s2, y, max_iter=10, max_step=0.5)
        except StepFailure:
            its = 99
        if its > 6:
            dtau /= 2
            halvings += 1
            if halvings > max_halvings:
                raise StepFailure(f"homotopy stalled at tau = {tau:.4f}")
            continue
        tau, y = nt, y2
        s3, y = s2.recharted(y)
        sys = s3
        if its <= 3:
            dtau = min(2 * dtau, 0.2)
    ok, why = valid_member(sys, y)
    if not ok:
        raise StepFailure(f"homotopy ended at a degenerate member ({why})")
    out = sys.curve(y, with_nodes=True)
    return out, sys.aux_points(y)


def member_of(config: PointConfig, steps: Sequence[float] = (1.0, 3.0, 10.0),
              keep: Sequence[int] | None = None) -> ParamCurve:
    """A member of W for ``config``, obtained by smoothing one node of ``D1 + D2``.

    Several smoothing amplitudes are tried; the member whose preimages are
    best separated (after choosing the gauge pins) is returned, since members
    close to the reducible seed make badly scaled charts.
    """
    if config.flags.get("infinitely_near"):
        raise DegenerateInput("configurations with infinitely near points are not solved")
    seed = reducible_seed(config)
    keep = list(range(config.m - 1)) if keep is None else list(keep)
    best, err = None, None
    for step in steps:
        try:
            sm = smooth_one_node(seed, keep, step=step, points=config.points)
            c, _ = balanced_gauge(parametrize(sm, points=config.points))
        except Exception as exc:   # noqa: BLE001 - try the next amplitude
            err = exc
            continue
        if best is None or preimage_spread(c) > preimage_spread(best):
            best = c
    if best is None:
        raise err
    return best


@dataclass
class ProbeReport:
    n_starts: int
    converged: int
    reasons: dict
    note: str = "numerical evidence only; a failed start proves nothing by itself"

    def to_json(self) -> dict:
        return {"n_starts": self.n_starts, "converged": self.converged, "reasons": self.reasons,
                "note": self.note}


def empty_locus_probe(config: PointConfig, p: Point2, q: Point2 | None = None, n_starts: int = 50,
                      seed: int = 0, base: ParamCurve | None = None) -> ProbeReport:
    """Try ``n_starts`` randomized homotopies moving a member of W through ``p`` (and ``q``)."""
    if q is not None and p[0].equals(q[0]) and p[1].equals(q[1]):
        raise DegenerateInput("p and q coincide")
    base = member_of(config) if base is None else base
    rng = np.random.default_rng(seed)
    targets = [p] if q is None else [p, q]
    conv, reasons = 0, {}
    for _ in range(n_starts):
        try:
            move_through(base, targets, rng=rng)
            conv += 1
        except (StepFailure, RankDrop, np.linalg.LinAlgError, ValueError) as exc:
            key = str(exc).split(" at ")[0].split(" (")[0]
            reasons[key] = reasons.get(key, 0) + 1
    return ProbeReport(n_starts, conv, reasons)


# ------------------------------------------------------------------ SVG

_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _circle_samples(zs: Sequence[ProjPoint], n: int) -> list[ProjPoint]:
    M = mobius_through([ProjPoint(0, 1), ProjPoint(1, 0), ProjPoint(1, 1)], zs)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False) + 1e-3
    out = []
    for a in th:
        w = M @ np.array([np.cos(a / 2), np.sin(a / 2)], dtype=complex)
        out.append(ProjPoint(w[0], w[1]))
    return out


def _xy(P: Point2) -> tuple[float, float] | None:
    u, v = P
    if abs(u.z0) < 1e-12 or abs(v.z0) < 1e-12:
        return None
    return (u.z1 / u.z0).real, (v.z1 / v.z0).real


def render_displacement_svg(trace: TraceResult, chart: tuple[int, int] = (0, 0), n_curves: int = 8,
                            n_samples: int = 400, clip: float = 6.0, size: int = 480) -> str:
    """Overlay of image curves (real parts in the affine chart) at evenly spaced states."""
    if not trace.states:
        raise ValueError("empty trace")
    del chart  # only the standard affine chart is drawn
    idx = np.unique(np.linspace(0, len(trace.states) - 1, min(n_curves, len(trace.states))).astype(int))
    pts = [c.p for c in trace.constraints]
    polys, marks = [], []
    for k, i in enumerate(idx):
        c = trace.states[i]
        tracked = trace.tracked[i] if trace.tracked else []
        third = c.base_preimages[0] if c.base_preimages else ProjPoint(1, 0.5)
        ring = (list(tracked) + [third, ProjPoint(1, 0.3 + 0.7j), ProjPoint(1, -1.1)])[:3]
        if len(ring) < 3 or min(ring[a].distance(ring[b]) for a in range(3) for b in range(a + 1, 3)) < 1e-6:
            ring = [ProjPoint(1, 0), ProjPoint(1, 1), ProjPoint(0, 1)]
        seg, segs = [], []
        for z in _circle_samples(ring, n_samples):
            xy = _xy(c.image(z))
            if xy is None or max(abs(xy[0]), abs(xy[1])) > clip:
                if len(seg) > 1:
                    segs.append(seg)
                seg = []
            else:
                seg.append(xy)
        if len(seg) > 1:
            segs.append(seg)
        polys.append((k, segs))
        for s, _ in c.node_pairs:
            xy = _xy(c.image(s))
            if xy is not None and max(abs(xy[0]), abs(xy[1])) <= clip:
                marks.append((k, xy))

    def sx(x):
        return (x + clip) / (2 * clip) * size

    def sy(y):
        return size - (y + clip) / (2 * clip) * size

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>',
             f'<line x1="0" y1="{sy(0):.2f}" x2="{size}" y2="{sy(0):.2f}" stroke="#ccc"/>',
             f'<line x1="{sx(0):.2f}" y1="0" x2="{sx(0):.2f}" y2="{size}" stroke="#ccc"/>',
             f'<text x="6" y="16" font-size="12">{trace.mode}: Re u (horizontal), Re v (vertical)</text>']
    for k, segs in polys:
        col = _COLORS[k % len(_COLORS)]
        for seg in segs:
            d = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in seg)
            lines.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.2"/>')
    for k, (x, y) in marks:
        col = _COLORS[k % len(_COLORS)]
        lines.append(f'<circle class="node" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{col}"/>')
    for P in pts:
        xy = _xy(P)
        if xy is not None:
            lines.append(f'<circle class="fixed" cx="{sx(xy[0]):.2f}" cy="{sy(xy[1]):.2f}" r="5" '
                         f'fill="none" stroke="black" stroke-width="2"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ local coordinates on W

def _congruence_to_identity(G: np.ndarray) -> np.ndarray:
    """``A`` with ``A^T G A = I`` for a nondegenerate complex symmetric ``G``."""
    from scipy.linalg import ldl
    Lf, D, perm = ldl(G, lower=True, hermitian=False)
    if not np.allclose(D, np.diag(np.diag(D))):
        # 2x2 pivot blocks: diagonalize them by a complex rotation-free step
        w, V = np.linalg.eig(D)
        D = np.diag(w)
        Lf = Lf @ V
    d = np.sqrt(np.diag(D).astype(complex))
    return np.linalg.inv(Lf).T / d[None, :]


@dataclass
class ChartFrame:
    """Chart ``x = L (y - y0)`` on W around ``base``.

    With ``orthonormal`` the directions are orthogonal for the gram at ``base``
    and the gram there is a multiple of the identity.
    """

    base: ParamCurve
    system: SeveriSystem
    y0: np.ndarray
    directions: np.ndarray
    L: np.ndarray
    pins: tuple = (0, 1, 2)
    product_index: int = 0

    @classmethod
    def at(cls, base: ParamCurve, pins: Sequence[int] | None = None, orthonormal: bool = True) -> "ChartFrame":
        sys, y0 = system_for(base, pins=pins)
        J = sys.jacobian(y0)
        if corank(J) != 3:
            raise RankDrop(f"W is not smooth of dimension 3 here (corank {corank(J)})")
        N = null_basis(J, 3)
        k0 = int(np.abs(from_roots(base.base_preimages).coeffs).argmax())
        if orthonormal:
            G = gram_of([theta_of(base, d, index=k0) for d in N[:sys.ncoef].T])
            N = N @ _congruence_to_identity(G)
            # the trivialization scale is arbitrary: keep unit-size directions, gram = const * I
            N = N / np.linalg.norm(N, axis=0).mean()
        L = np.linalg.solve(N.conj().T @ N, N.conj().T)
        return cls(base, sys, y0, N, L, tuple(sys.pins), k0)

    def coords(self, y: np.ndarray) -> np.ndarray:
        return self.L @ (y - self.y0)

    def state(self, x, guess: np.ndarray | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        y = self.y0 + self.directions @ x if guess is None else guess
        y, _ = newton(self.system, y, extra=self.L, extra_rhs=x + self.L @ self.y0, max_iter=20)
        return y

    def curve(self, y: np.ndarray) -> ParamCurve:
        return self.system.curve(y)

    def tangents(self, y: np.ndarray) -> np.ndarray:
        """``dy/dx`` at ``y`` (columns), from ``[J; L] dy = [0; e_a]``."""
        J = self.system.jacobian(y)
        A = np.vstack([J, self.L])
        rhs = np.zeros((A.shape[0], 3), dtype=complex)
        rhs[J.shape[0]:] = np.eye(3)
        return np.linalg.solve(A, rhs)

    def metric(self, y: np.ndarray) -> np.ndarray:
        """Gram matrix of the chart coordinate vectors at ``y``."""
        c = self.curve(y)
        T = self.tangents(y)[:self.system.ncoef]
        return gram_of([theta_of(c, d, index=self.product_index) for d in T.T])
