"""Tangent spaces of W, the quadratic class of a tangent vector, and the conformal metric.

A first-order deformation ``delta`` of a member ``phi`` moves the image curve
along the normal form ``n = A W_V - B W_U`` (degree ``2m + 2``).  For tangent
vectors of W it vanishes at every base preimage; dividing by their product
leaves a quadratic ``theta = a z0^2 + b z0 z1 + c z1^2`` whose discriminant is
the null cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .binary_forms import (BinaryForm, ProjPoint, QuadraticClass, as_point, disc_quadratic,
                           divide_exact, from_roots, roots, wronskian)
from .nodal_curve import ParamCurve, compose_bihom, implicitize_raw
from .severi import Constraint, corank, null_basis, system_for

Q_ABC = np.array([[0, 0, -2], [0, 1, 0], [-2, 0, 0]], dtype=float)
THETA_TOL = 1e-7


class DegenerateMetric(ValueError):
    pass


class NoCommonRoot(ValueError):
    pass


@dataclass
class TangentVector:
    delta: np.ndarray
    normal_form: BinaryForm
    theta: QuadraticClass

    @property
    def abc(self) -> np.ndarray:
        return self.theta.as_array()


@dataclass
class MetricAtPoint:
    gram: np.ndarray
    basis: list[TangentVector]
    scale_convention: str = "base-preimage product monic in its first nonvanishing coefficient"

    @property
    def rank(self) -> int:
        s = np.linalg.svd(self.gram, compute_uv=False)
        return int(np.sum(s > 1e-10 * s[0]))

    def quadratic(self, x: np.ndarray) -> complex:
        x = np.asarray(x)
        return complex(x @ self.gram @ x)


@dataclass
class NullPlane:
    span: list[TangentVector]
    witness_root: ProjPoint
    coords: np.ndarray = field(default=None, repr=False)   # 3x2 coordinates in the metric basis


def _split(curve: ParamCurve, delta: np.ndarray):
    a, b = curve.U0.degree + 1, curve.m + 1
    delta = np.asarray(delta, dtype=complex)
    if delta.size != 2 * a + 2 * b:
        raise ValueError(f"delta must have {2 * a + 2 * b} entries, got {delta.size}")
    return (BinaryForm(delta[:a]), BinaryForm(delta[a:2 * a]), BinaryForm(delta[2 * a:2 * a + b]),
            BinaryForm(delta[2 * a + b:]))


def normal_component(curve: ParamCurve, delta) -> BinaryForm:
    """``A W_V - B W_U`` with ``A = dU1 U0 - U1 dU0`` and ``B = dV1 V0 - V1 dV0``."""
    dU0, dU1, dV0, dV1 = _split(curve, delta)
    A = dU1 * curve.U0 - curve.U1 * dU0
    B = dV1 * curve.V0 - curve.V1 * dV0
    return A * wronskian(curve.V0, curve.V1) - B * wronskian(curve.U0, curve.U1)


def base_product(curve: ParamCurve, index: int | None = None) -> BinaryForm:
    """Product of the base-preimage factors.

    By default it is monic in its first nonvanishing coefficient; with
    ``index`` that coefficient is scaled to 1 instead, which keeps the
    trivialization holomorphic along a family (used by charts).
    """
    f = from_roots(curve.base_preimages)
    return f if index is None else f / f.coeffs[index]


def theta_of(curve: ParamCurve, delta, tol: float = THETA_TOL, index: int | None = None) -> QuadraticClass:
    """Quadratic class of ``delta``: the normal form divided by the base-preimage product.

    Raises ``DivisionResidualTooLarge`` when ``delta`` is not tangent to W.
    """
    n = normal_component(curve, delta)
    q = divide_exact(n, base_product(curve, index), tol=tol)
    return QuadraticClass.from_form(q)


def tangent_vector(curve: ParamCurve, delta) -> TangentVector:
    delta = np.asarray(delta, dtype=complex)
    return TangentVector(delta, normal_component(curve, delta), theta_of(curve, delta))


def tangent_deltas(curve: ParamCurve, constraints: Sequence[Constraint] = (),
                   aux: Sequence[ProjPoint] = ()) -> np.ndarray:
    """Coefficient parts of a basis of the (constrained) tangent space, one per column."""
    sys, y = system_for(curve)
    if constraints:
        sys = sys.with_constraints(constraints, aux)
        y = sys.pack(curve, aux)
    J = sys.jacobian(y)
    return null_basis(J, corank(J))[:sys.ncoef]


def tangent_basis(curve: ParamCurve) -> list[TangentVector]:
    return [tangent_vector(curve, d) for d in tangent_deltas(curve).T]


def gram_of(thetas: Sequence[QuadraticClass]) -> np.ndarray:
    """Polarized discriminant ``theta_a^T Q theta_b``."""
    T = np.array([t.as_array() for t in thetas]).T
    return T.T @ Q_ABC @ T


def metric_at(curve: ParamCurve, basis: Sequence[TangentVector] | None = None) -> MetricAtPoint:
    basis = tangent_basis(curve) if basis is None else list(basis)
    G = gram_of([t.theta for t in basis])
    out = MetricAtPoint(G, basis)
    if out.rank < 3:
        raise DegenerateMetric(f"gram has rank {out.rank}")
    return out


def is_null(theta: QuadraticClass, tol: float = 1e-9) -> bool:
    a = theta.as_array()
    return abs(disc_quadratic(theta)) <= tol * max(np.abs(a).max() ** 2, 1e-300)


def null_plane(curve: ParamCurve, z, metric: MetricAtPoint | None = None) -> NullPlane:
    """The plane of tangent vectors whose quadratic vanishes at ``z``."""
    z = as_point(z)
    metric = metric_at(curve) if metric is None else metric
    vals = np.array([t.theta.as_form()(z) for t in metric.basis])
    C = null_basis(vals[None, :], 2)
    span = [tangent_vector(curve, sum(c * t.delta for c, t in zip(col, metric.basis))) for col in C.T]
    return NullPlane(span, z.normalized(), C)


def common_root(thetas: Sequence[QuadraticClass], tol: float = 1e-7) -> ProjPoint:
    """The unique common root of a 2-dimensional family of quadratics."""
    forms = [t.as_form() for t in thetas]
    T = np.array([f.coeffs for f in forms])
    # the span is null iff it equals {theta : theta(z) = 0} for one z, i.e. its
    # annihilator is a Veronese vector (1, t, t^2) up to the chart
    ann = null_basis(T, 1)[:, 0]
    # theta(z) = a z0^2 + b z0 z1 + c z1^2 = <(a,b,c), (z0^2, z0 z1, z1^2)>
    w = ann
    if abs(w[1] ** 2 - w[0] * w[2]) > tol * np.abs(w).max() ** 2:
        raise NoCommonRoot("the plane is not null")
    if abs(w[0]) >= abs(w[2]):
        z = ProjPoint(w[0], w[1])
    else:
        z = ProjPoint(w[1], w[2])
    for f in forms:
        if abs(f(z.normalized())) > tol * max(f.norm(), 1e-300):
            raise NoCommonRoot("quadratics have no common root")
    return z.normalized()


@dataclass
class PlanePoint:
    point: tuple
    witness_root: ProjPoint
    branch: bool
    node_index: int | None = None


def null_plane_to_point(curve: ParamCurve, plane: NullPlane | Sequence[TangentVector],
                        node_tol: float = 1e-6) -> PlanePoint:
    """Surface point of a null plane; ``branch`` is set when the root is a node preimage."""
    span = plane.span if isinstance(plane, NullPlane) else list(plane)
    z = common_root([t.theta for t in span])
    for i, (s, t) in enumerate(curve.node_pairs):
        if z.distance(s) < node_tol or z.distance(t) < node_tol:
            return PlanePoint(curve.image(z), z, True, i)
    return PlanePoint(curve.image(z), z, False)


def point_to_plane(curve: ParamCurve, z, metric: MetricAtPoint | None = None) -> NullPlane:
    return null_plane(curve, z, metric)


# ----------------------------------------------------------- implicit-model oracle

@dataclass
class VCSpace:
    """Degree-``2m`` forms ``f * theta`` with ``f`` the node-preimage product."""

    f: BinaryForm
    basis: list[BinaryForm]

    @property
    def dimension(self) -> int:
        M = np.array([b.coeffs for b in self.basis])
        s = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(s > 1e-10 * s[0]))

    def contains(self, g: BinaryForm, tol: float = 1e-7) -> bool:
        M = np.array([b.coeffs for b in self.basis]).T
        x = np.linalg.lstsq(M, g.coeffs, rcond=None)[0]
        return np.linalg.norm(M @ x - g.coeffs) <= tol * max(g.norm(), 1e-300)


def vc_oracle(curve: ParamCurve) -> VCSpace:
    if len(curve.node_pairs) != curve.m - 1:
        raise ValueError("node pairs are required")
    f = from_roots([p for pair in curve.node_pairs for p in pair])
    basis = [f * BinaryForm.monomial(2, j) for j in range(3)]
    return VCSpace(f, basis)


def implicit_variation(curve: ParamCurve, delta, n_fft: int = 16) -> np.ndarray:
    """First variation of the unnormalized implicit equation along ``delta``.

    ``implicitize_raw`` is polynomial in the coefficients, so the derivative is
    read off exactly from samples on a circle in the step parameter.
    """
    dU0, dU1, dV0, dV1 = _split(curve, delta)
    scale = max(np.linalg.norm(curve.coeff_vector()), 1e-300)
    r = 0.1 * scale / max(np.linalg.norm(np.asarray(delta)), 1e-300)
    w = np.exp(2j * np.pi * np.arange(n_fft) / n_fft)
    acc = 0
    for wk in w:
        e = r * wk
        F = implicitize_raw(curve.U0 + e * dU0, curve.U1 + e * dU1, curve.V0 + e * dV0,
                            curve.V1 + e * dV1)
        acc = acc + F / wk
    return acc / (n_fft * r)


def vc_element(curve: ParamCurve, delta) -> BinaryForm:
    """The 𝒱_C element ``dF(phi(z)) / prod(z - z_j)`` of a tangent vector (degree ``2m``)."""
    dF = implicit_variation(curve, delta)
    s = compose_bihom(dF, curve)
    return divide_exact(s, base_product(curve), tol=1e-6)


def vc_theta(curve: ParamCurve, delta, f: BinaryForm | None = None) -> QuadraticClass:
    """Quadratic class computed through the implicit model (independent of the normal form)."""
    f = vc_oracle(curve).f if f is None else f
    return QuadraticClass.from_form(divide_exact(vc_element(curve, delta), f, tol=1e-6))


def proportionality(a: np.ndarray, b: np.ndarray) -> tuple[complex, float]:
    """Least-squares scalar ``lam`` with ``a ~ lam b`` and the relative residual."""
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    lam = np.vdot(b, a) / np.vdot(b, b)
    return lam, float(np.linalg.norm(a - lam * b) / max(np.linalg.norm(a), 1e-300))


def root_multiplicities(theta: QuadraticClass) -> list[int]:
    return [mult for _, mult in roots(theta.as_form())]
