"""Gauge-fixed polynomial system for members of the Severi variety and its continuation.

The unknown vector holds the coefficients of ``U0, U1, V0, V1``, the affine
chart coordinates of the base preimages that are not pinned, and the chart
coordinates of auxiliary parameters introduced by incidence constraints.
Three base preimages are held fixed (this removes reparametrizations) and two
linear normalizations remove the scalings of ``U`` and ``V``; what remains is a
square-minus-three system whose solution set is the 3-dimensional Severi
variety (or a subvariety of it once constraints are added).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .binary_forms import (BinaryForm, ProjPoint, as_point, chart_coordinate, chart_monomials,
                           chart_point, monomials)
from .nodal_curve import ParamCurve, is_ordinary_pair, node_pairs_of
from .surface_config import Point2

CHART_SWITCH = 1.5


class StepFailure(RuntimeError):
    pass


class RankDrop(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Constraint:
    """``through`` (curve passes p), ``node`` (node at p) or ``tangent`` (through p with a given direction).

    ``direction`` is ``(du, dv)`` in the affine chart ``u = u1/u0, v = v1/v0``.
    """

    kind: str
    p: Point2
    direction: tuple[complex, complex] | None = None

    def __post_init__(self):
        if self.kind not in ("through", "node", "tangent"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "tangent" and self.direction is None:
            raise ValueError("tangent constraint needs a direction")

    @property
    def n_aux(self) -> int:
        return 2 if self.kind == "node" else 1

    @property
    def n_eq(self) -> int:
        return {"through": 2, "node": 4, "tangent": 3}[self.kind]


def _dmon1(z: ProjPoint, d: int) -> np.ndarray:
    """Derivative in ``z1`` of the monomials at ``z``."""
    j = np.arange(d + 1)
    out = np.zeros(d + 1, dtype=complex)
    out[1:] = j[1:] * z.z0 ** (d - j[1:]) * z.z1 ** (j[1:] - 1)
    return out


@dataclass(eq=False)
class SeveriSystem:
    points: list[Point2]
    m: int
    pins: dict[int, ProjPoint]
    charts: list[int]                  # chart of every base preimage (ignored for pins)
    ref: np.ndarray                    # reference coefficient vector for the scalings
    constraints: list[Constraint] = field(default_factory=list)
    aux_charts: list[int] = field(default_factory=list)
    du: int = 2

    # -- layout
    @property
    def nU(self) -> int:
        return self.du + 1

    @property
    def nV(self) -> int:
        return self.m + 1

    @property
    def ncoef(self) -> int:
        return 2 * self.nU + 2 * self.nV

    @property
    def free(self) -> list[int]:
        return [j for j in range(len(self.points)) if j not in self.pins]

    @property
    def n_unknowns(self) -> int:
        return self.ncoef + len(self.free) + sum(c.n_aux for c in self.constraints)

    @property
    def n_equations(self) -> int:
        return 2 * len(self.points) + 2 + sum(c.n_eq for c in self.constraints)

    def split(self, y: np.ndarray):
        c = y[:self.ncoef]
        xs = y[self.ncoef:self.ncoef + len(self.free)]
        aux = y[self.ncoef + len(self.free):]
        return c, xs, aux

    def forms(self, c: np.ndarray):
        a, b = self.nU, self.nV
        return (BinaryForm(c[:a]), BinaryForm(c[a:2 * a]), BinaryForm(c[2 * a:2 * a + b]),
                BinaryForm(c[2 * a + b:]))

    def base_points(self, y: np.ndarray) -> list[ProjPoint]:
        _, xs, _ = self.split(y)
        out, it = [], iter(xs)
        for j in range(len(self.points)):
            out.append(self.pins[j] if j in self.pins else chart_point(next(it), self.charts[j]))
        return out

    def aux_points(self, y: np.ndarray) -> list[ProjPoint]:
        _, _, aux = self.split(y)
        return [chart_point(x, ch) for x, ch in zip(aux, self.aux_charts)]

    def curve(self, y: np.ndarray, with_nodes: bool = False) -> ParamCurve:
        c, _, _ = self.split(y)
        pc = ParamCurve(*self.forms(c), [p.normalized() for p in self.base_points(y)])
        if with_nodes:
            pc.node_pairs = node_pairs_of(pc)
        return pc

    def pack(self, curve: ParamCurve, aux: Sequence[ProjPoint] = ()) -> np.ndarray:
        xs = []
        for j in self.free:
            z = curve.base_preimages[j]
            ch = self.charts[j]
            xs.append(z.z1 / z.z0 if ch == 0 else z.z0 / z.z1)
        ax = []
        for z, ch in zip(aux, self.aux_charts):
            z = as_point(z)
            ax.append(z.z1 / z.z0 if ch == 0 else z.z0 / z.z1)
        return np.concatenate([curve.coeff_vector(), np.array(xs, dtype=complex),
                               np.array(ax, dtype=complex)])

    # -- equations
    def _incidence(self, U0, U1, V0, V1, c, x, ch, z, p, want_jac):
        """Rows for ``phi(z) = p``; ``x, ch`` is the chart of ``z`` (``ch`` None for a pin)."""
        pu, pv = p[0].normalized(), p[1].normalized()
        if ch is None:
            mu, mv = monomials(z, self.du), monomials(z, self.m)
        else:
            mu, mv = chart_monomials(x, ch, self.du), chart_monomials(x, ch, self.m)
        res = np.array([pu.z0 * (U1.coeffs @ mu) - pu.z1 * (U0.coeffs @ mu),
                        pv.z0 * (V1.coeffs @ mv) - pv.z1 * (V0.coeffs @ mv)])
        if not want_jac:
            return res, None, None
        a, b = self.nU, self.nV
        Jc = np.zeros((2, self.ncoef), dtype=complex)
        Jc[0, :a] = -pu.z1 * mu
        Jc[0, a:2 * a] = pu.z0 * mu
        Jc[1, 2 * a:2 * a + b] = -pv.z1 * mv
        Jc[1, 2 * a + b:] = pv.z0 * mv
        if ch is None:
            return res, Jc, None
        dmu, dmv = chart_monomials(x, ch, self.du, 1), chart_monomials(x, ch, self.m, 1)
        Jx = np.array([pu.z0 * (U1.coeffs @ dmu) - pu.z1 * (U0.coeffs @ dmu),
                       pv.z0 * (V1.coeffs @ dmv) - pv.z1 * (V0.coeffs @ dmv)])
        return res, Jc, Jx

    def _tangent_row(self, U0, U1, V0, V1, x, ch, direction, want_jac):
        du_, dv_ = direction
        z = chart_point(x, ch)
        mu, mv = monomials(z, self.du), monomials(z, self.m)
        d1u, d1v = _dmon1(z, self.du), _dmon1(z, self.m)
        u0, u1, v0, v1 = U0.coeffs @ mu, U1.coeffs @ mu, V0.coeffs @ mv, V1.coeffs @ mv
        u0p, u1p, v0p, v1p = U0.coeffs @ d1u, U1.coeffs @ d1u, V0.coeffs @ d1v, V1.coeffs @ d1v
        WU = u0 * u1p - u0p * u1
        WV = v0 * v1p - v0p * v1
        res = du_ * WV * u0 ** 2 - dv_ * WU * v0 ** 2
        if not want_jac:
            return res, None, None
        a, b = self.nU, self.nV
        Jc = np.zeros(self.ncoef, dtype=complex)
        # d/dU0_i and d/dU1_i
        dWU_dU0 = mu * u1p - d1u * u1
        dWU_dU1 = u0 * d1u - u0p * mu
        dWV_dV0 = mv * v1p - d1v * v1
        dWV_dV1 = v0 * d1v - v0p * mv
        Jc[:a] = du_ * WV * 2 * u0 * mu - dv_ * v0 ** 2 * dWU_dU0
        Jc[a:2 * a] = -dv_ * v0 ** 2 * dWU_dU1
        Jc[2 * a:2 * a + b] = du_ * u0 ** 2 * dWV_dV0 - dv_ * WU * 2 * v0 * mv
        Jc[2 * a + b:] = du_ * u0 ** 2 * dWV_dV1
        # derivative along the chart coordinate: differentiate the residual as a form
        from .binary_forms import wronskian
        G = du_ * wronskian(V0, V1) * U0 * U0 - dv_ * wronskian(U0, U1) * V0 * V0
        Jx = G.coeffs @ chart_monomials(x, ch, G.degree, 1)
        return res, Jc, Jx

    def residual(self, y: np.ndarray) -> np.ndarray:
        return self._assemble(y, False)[0]

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        return self._assemble(y, True)[1]

    def residual_and_jacobian(self, y: np.ndarray):
        return self._assemble(y, True)

    def _assemble(self, y: np.ndarray, want_jac: bool):
        c, xs, aux = self.split(y)
        U0, U1, V0, V1 = self.forms(c)
        n = self.n_unknowns
        res = np.zeros(self.n_equations, dtype=complex)
        J = np.zeros((self.n_equations, n), dtype=complex) if want_jac else None
        row = 0
        free_index = {j: k for k, j in enumerate(self.free)}
        for j, p in enumerate(self.points):
            if j in self.pins:
                r, Jc, Jx = self._incidence(U0, U1, V0, V1, c, None, None, self.pins[j], p, want_jac)
            else:
                k = free_index[j]
                r, Jc, Jx = self._incidence(U0, U1, V0, V1, c, xs[k], self.charts[j], None, p, want_jac)
            res[row:row + 2] = r
            if want_jac:
                J[row:row + 2, :self.ncoef] = Jc
                if Jx is not None:
                    J[row:row + 2, self.ncoef + free_index[j]] = Jx
            row += 2
        a = 2 * self.nU
        refU, refV = self.ref[:a], self.ref[a:]
        res[row] = np.vdot(refU, c[:a]) - np.vdot(refU, refU)
        res[row + 1] = np.vdot(refV, c[a:]) - np.vdot(refV, refV)
        if want_jac:
            J[row, :a] = refU.conj()
            J[row + 1, a:self.ncoef] = refV.conj()
        row += 2
        col = self.ncoef + len(self.free)
        k = 0
        for con in self.constraints:
            if con.kind in ("through", "tangent"):
                x, ch = aux[k], self.aux_charts[k]
                r, Jc, Jx = self._incidence(U0, U1, V0, V1, c, x, ch, None, con.p, want_jac)
                res[row:row + 2] = r
                if want_jac:
                    J[row:row + 2, :self.ncoef] = Jc
                    J[row:row + 2, col + k] = Jx
                row += 2
                if con.kind == "tangent":
                    r, Jc, Jx = self._tangent_row(U0, U1, V0, V1, x, ch, con.direction, want_jac)
                    res[row] = r
                    if want_jac:
                        J[row, :self.ncoef] = Jc
                        J[row, col + k] = Jx
                    row += 1
                k += 1
            else:
                for kk in (k, k + 1):
                    x, ch = aux[kk], self.aux_charts[kk]
                    r, Jc, Jx = self._incidence(U0, U1, V0, V1, c, x, ch, None, con.p, want_jac)
                    res[row:row + 2] = r
                    if want_jac:
                        J[row:row + 2, :self.ncoef] = Jc
                        J[row:row + 2, col + kk] = Jx
                    row += 2
                k += 2
        return res, J

    def second_derivative(self, y: np.ndarray, d: np.ndarray, n_fft: int = 16) -> np.ndarray:
        """``D^2 H(y)[d, d]`` exactly, from the residual on a circle (it is polynomial in the step)."""
        r = 0.25 / max(np.linalg.norm(d), 1e-300)
        w = np.exp(2j * np.pi * np.arange(n_fft) / n_fft)
        vals = np.array([self.residual(y + r * wk * d) for wk in w])
        c2 = (vals * (w ** -2)[:, None]).mean(axis=0) / r ** 2
        return 2 * c2

    def with_constraints(self, constraints: Sequence[Constraint], aux: Sequence[ProjPoint]):
        charts = [chart_coordinate(z)[1] for z in aux]
        return SeveriSystem(self.points, self.m, self.pins, self.charts, self.ref,
                            list(constraints), charts, self.du)

    def recharted(self, y: np.ndarray, limit: float = CHART_SWITCH):
        """Switch charts of coordinates whose modulus exceeds ``limit``; returns ``(system, y)``."""
        _, xs, aux = self.split(y)
        if np.all(np.abs(xs) <= limit) and np.all(np.abs(aux) <= limit):
            return self, y
        bases = self.base_points(y)
        auxp = self.aux_points(y)
        charts = list(self.charts)
        for j in self.free:
            charts[j] = chart_coordinate(bases[j])[1]
        sys = SeveriSystem(self.points, self.m, self.pins, charts, self.ref, self.constraints,
                           [chart_coordinate(z)[1] for z in auxp], self.du)
        c = self.split(y)[0]
        pc = ParamCurve(*self.forms(c), bases)
        return sys, sys.pack(pc, auxp)


STANDARD_PINS = (ProjPoint(0, 1), ProjPoint(1, 1), ProjPoint(1, 0))


def default_pins(curve: ParamCurve) -> tuple[int, ...]:
    """Indices of the base preimages sitting at ``inf, 1, 0`` if all three are present."""
    out = []
    for target in STANDARD_PINS:
        hit = [j for j, z in enumerate(curve.base_preimages) if z.distance(target) < 1e-9]
        if not hit:
            return (0, 1, 2)
        out.append(hit[0])
    return tuple(out)


def system_for(curve: ParamCurve, points: Sequence[Point2] | None = None,
               pins: Sequence[int] | None = None) -> tuple[SeveriSystem, np.ndarray]:
    """Gauge-fixed system through the images of the base preimages, and the packed state."""
    zs = curve.base_preimages
    pins = default_pins(curve) if pins is None else pins
    if points is None:
        points = [curve.image(z) for z in zs]
    pin_map = {j: zs[j].normalized() for j in pins}
    charts = [chart_coordinate(z)[1] for z in zs]
    sys = SeveriSystem(list(points), curve.m, pin_map, charts, curve.coeff_vector().copy(),
                       du=curve.U0.degree)
    return sys, sys.pack(curve)


# ------------------------------------------------------------------ Newton

def newton(sys: SeveriSystem, y: np.ndarray, extra: np.ndarray | None = None,
           extra_rhs: np.ndarray | None = None, tol: float = 1e-12, max_iter: int = 12,
           max_step: float = 1.0):
    """Newton/Gauss-Newton on ``H(y) = 0`` plus linear rows ``extra @ y = extra_rhs``.

    Returns ``(y, iterations)``; raises :class:`StepFailure` if it does not converge.
    """
    scale = max(1.0, np.linalg.norm(y[:sys.ncoef]))
    for it in range(1, max_iter + 1):
        r, J = sys.residual_and_jacobian(y)
        if extra is not None:
            r = np.concatenate([r, extra @ y - extra_rhs])
            J = np.vstack([J, extra])
        if J.shape[0] == J.shape[1]:
            try:
                dy = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError as exc:
                raise StepFailure("singular Newton matrix") from exc
        else:
            dy = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(dy)) or np.linalg.norm(dy) > max_step * scale:
            raise StepFailure("Newton step blew up")
        y = y + dy
        if np.linalg.norm(dy) <= tol * scale:
            rr = sys.residual(y)
            if extra is not None:
                rr = np.concatenate([rr, extra @ y - extra_rhs])
            if np.abs(rr).max() < 1e-9 * scale:
                return y, it
    rr = sys.residual(y)
    if extra is not None:
        rr = np.concatenate([rr, extra @ y - extra_rhs])
    if np.abs(rr).max() < 1e-10 * scale:
        return y, max_iter
    raise StepFailure(f"Newton did not converge (residual {np.abs(rr).max():.2e})")


def null_basis(J: np.ndarray, k: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the right null space (``k`` columns if given)."""
    _, s, Vh = np.linalg.svd(J)
    n = J.shape[1]
    if k is None:
        rank = int(np.sum(s > tol * s[0]))
        k = n - rank
    return Vh[n - k:].conj().T


def corank(J: np.ndarray, tol: float = 1e-8) -> int:
    s = np.linalg.svd(J, compute_uv=False)
    return J.shape[1] - int(np.sum(s > tol * s[0]))


def singular_values(J: np.ndarray) -> np.ndarray:
    return np.linalg.svd(J, compute_uv=False)


# ------------------------------------------------------------------ continuation

@dataclass
class PathPoint:
    y: np.ndarray
    system: SeveriSystem
    arc: float
    iterations: int
    tangent: np.ndarray


def min_preimage_separation(sys: SeveriSystem, y: np.ndarray,
                            node_pairs: Sequence[tuple[ProjPoint, ProjPoint]] = ()) -> float:
    pts = sys.base_points(y) + sys.aux_points(y)
    aux = sys.aux_points(y)
    # node preimages that are themselves tracked auxiliaries are counted once
    pts += [p for pair in node_pairs for p in pair if all(p.distance(a) > 1e-7 for a in aux)]
    best = np.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = min(best, pts[i].distance(pts[j]))
    return float(best)


def _align(t: np.ndarray, ref: np.ndarray | None, ncoef: int) -> np.ndarray:
    if ref is None:
        k = np.abs(t[:ncoef]).argmax()
        return t * (abs(t[k]) / t[k])
    ip = np.vdot(ref[:ncoef], t[:ncoef])
    if abs(ip) == 0:
        return t
    return t * (abs(ip) / ip)


def trace_path(sys: SeveriSystem, y0: np.ndarray, steps: int, h: float = 0.02,
               direction: np.ndarray | None = None, h_max: float | None = None,
               h_min: float = 1e-6, branch_tol: float = 1e-4, check_nodes: bool = True,
               node_every: int = 1) -> tuple[list[PathPoint], dict]:
    """Pseudo-arclength continuation along a one-dimensional solution set.

    The tangent is the null vector of the Jacobian with its phase aligned to the
    previous tangent on the coefficient block, so the trace follows a real path
    inside the complex curve.  The step is halved after more than six corrector
    iterations and grown by 1.3 after at most two.
    """
    h_max = 8 * h if h_max is None else h_max
    m = sys.m
    points: list[PathPoint] = []
    diag = {"halvings": 0, "node_counts": [], "stopped": None}
    J = sys.jacobian(y0)
    if corank(J) != 1:
        raise RankDrop(f"solution set is not one-dimensional at the start (corank {corank(J)})")
    t = _align(null_basis(J, 1)[:, 0], direction, sys.ncoef)
    points.append(PathPoint(y0, sys, 0.0, 0, t))
    arc = 0.0
    y = y0
    for step in range(steps):
        while True:
            yp = y + h * t
            try:
                yn, its = newton(sys, yp, extra=t.conj()[None, :], extra_rhs=np.array([np.vdot(t, yp)]),
                                 max_iter=10, max_step=0.5)
            except StepFailure:
                its = 99
            if its > 6:
                h /= 2
                diag["halvings"] += 1
                if h < h_min:
                    diag["stopped"] = "step size underflow"
                    return points, diag
                continue
            break
        arc += h
        if its <= 2:
            h = min(1.3 * h, h_max)
        # tangents are aligned on the coefficient block, which no chart change touches
        sys, yn = sys.recharted(yn)
        J = sys.jacobian(yn)
        s = singular_values(J)
        tn = null_basis(J, 1)[:, 0]
        tn = _align(tn, t, sys.ncoef)
        y, t = yn, tn
        pairs = ()
        if check_nodes and m >= 2 and step % node_every == 0:
            pc = sys.curve(y, with_nodes=True)
            pairs = pc.node_pairs
            ok = sum(is_ordinary_pair(pc, a, b) for a, b in pairs)
            diag["node_counts"].append(ok)
            if ok != m - 1:
                diag["stopped"] = f"node count {ok} != {m - 1}"
                points.append(PathPoint(y, sys, arc, its, t))
                return points, diag
        points.append(PathPoint(y, sys, arc, its, t))
        if s[-2] < 1e-9 * s[0]:
            diag["stopped"] = "rank drop"
            return points, diag
        if min_preimage_separation(sys, y, pairs) < branch_tol:
            diag["stopped"] = "preimage collision (branch point)"
            return points, diag
    return points, diag


def solve_target(sys: SeveriSystem, y: np.ndarray, steps: int = 20):
    """Follow the constrained system while its target points move linearly to ``sys.constraints``.

    ``sys`` must carry the final constraints; the initial constraints are
    obtained by replacing each target point by the image of the current
    auxiliary parameter.
    """
    curve = sys.curve(y)
    aux = sys.aux_points(y)
    starts = []
    k = 0
    for con in sys.constraints:
        starts.append(curve.image(aux[k]))
        k += con.n_aux
    for step in range(1, steps + 1):
        tau = step / steps
        cons = []
        for con, p0 in zip(sys.constraints, starts):
            cons.append(Constraint(con.kind, _lerp_point(p0, con.p, tau), con.direction))
        s_tau = SeveriSystem(sys.points, sys.m, sys.pins, sys.charts, sys.ref, cons,
                             sys.aux_charts, sys.du)
        y, _ = newton(s_tau, y, max_iter=20, max_step=2.0)
    return y


def _lerp_point(p: Point2, q: Point2, tau: float) -> Point2:
    out = []
    for a, b in zip(p, q):
        a, b = a.normalized(), b.normalized()
        # interpolate in the chart where the target is finite
        if abs(b.z0) >= abs(b.z1):
            xa = a.z1 / a.z0 if a.z0 != 0 else np.inf
            xb = b.z1 / b.z0
            out.append(ProjPoint(1.0, (1 - tau) * xa + tau * xb))
        else:
            xa = a.z0 / a.z1 if a.z1 != 0 else np.inf
            xb = b.z0 / b.z1
            out.append(ProjPoint((1 - tau) * xa + tau * xb, 1.0))
    return tuple(out)
