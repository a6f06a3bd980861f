"""Binary forms on the projective line.

A binary form of degree ``d`` is stored by its coefficient vector ``c`` with
``c[j]`` multiplying ``z0**(d - j) * z1**j``.  The affine parameter used for
derivatives and for dehomogenization is ``t = z1 / z0``, so ``c`` is also the
ascending coefficient vector of the polynomial ``f(1, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
CLUSTER_TOL = 1e-5
# set by the command line to refine every root with mpmath
EXTENDED_PRECISION = False


class DivisionResidualTooLarge(ValueError):
    """The numerator is not divisible by the denominator within tolerance."""


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """A point of P^1 in homogeneous coordinates ``(z0, z1)``."""

    z0: complex
    z1: complex

    def __post_init__(self):
        z0, z1 = complex(self.z0), complex(self.z1)
        if z0 == 0 and z1 == 0:
            raise ValueError("ProjPoint needs a nonzero coordinate")
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "z1", z1)

    @classmethod
    def affine(cls, t: complex) -> "ProjPoint":
        return cls(1.0, t)

    @classmethod
    def infinity(cls) -> "ProjPoint":
        return cls(0.0, 1.0)

    @classmethod
    def from_array(cls, z) -> "ProjPoint":
        return cls(z[0], z[1])

    def as_array(self) -> np.ndarray:
        return np.array([self.z0, self.z1], dtype=complex)

    def normalized(self) -> "ProjPoint":
        """Representative whose largest-modulus coordinate equals 1."""
        big = self.z0 if abs(self.z0) >= abs(self.z1) else self.z1
        return ProjPoint(self.z0 / big, self.z1 / big)

    @property
    def is_infinite(self) -> bool:
        return self.z0 == 0

    def to_affine(self) -> complex:
        """The parameter ``t = z1 / z0`` (``inf`` at the point at infinity)."""
        if self.z0 == 0:
            return complex(np.inf)
        return self.z1 / self.z0

    def distance(self, other: "ProjPoint") -> float:
        """Chordal distance, in [0, 1]."""
        a, b = self.as_array(), other.as_array()
        return abs(a[0] * b[1] - a[1] * b[0]) / (np.linalg.norm(a) * np.linalg.norm(b))

    def equals(self, other: "ProjPoint", tol: float = DEFAULT_TOL) -> bool:
        a, b = self.as_array(), other.as_array()
        scale = max(np.abs(a).max(), 1e-300) * max(np.abs(b).max(), 1e-300)
        return abs(a[0] * b[1] - a[1] * b[0]) <= tol * scale

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        return f"ProjPoint({self.z0:.6g}, {self.z1:.6g})"


def as_point(p) -> ProjPoint:
    """Coerce a ProjPoint, a pair, or an affine scalar into a ProjPoint."""
    if isinstance(p, ProjPoint):
        return p
    if np.ndim(p) == 0:
        t = complex(p)
        return ProjPoint.infinity() if np.isinf(t) else ProjPoint.affine(t)
    return ProjPoint(p[0], p[1])


class BinaryForm:
    """Homogeneous polynomial in ``(z0, z1)`` with complex coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[complex], degree: int | None = None):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                     dtype=complex).ravel()
        if degree is not None:
            if degree < 0:
                raise ValueError("degree must be nonnegative")
            if c.size > degree + 1:
                raise ValueError(f"{c.size} coefficients do not fit degree {degree}")
            c = np.concatenate([c, np.zeros(degree + 1 - c.size, dtype=complex)])
        if c.size == 0:
            raise ValueError("a binary form needs at least one coefficient")
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zero(cls, degree: int) -> "BinaryForm":
        return cls(np.zeros(degree + 1, dtype=complex))

    @classmethod
    def monomial(cls, degree: int, j: int) -> "BinaryForm":
        c = np.zeros(degree + 1, dtype=complex)
        c[j] = 1.0
        return cls(c)

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, p) -> complex:
        return eval_form(self, p)

    def __add__(self, other: "BinaryForm") -> "BinaryForm":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return BinaryForm(self.coeffs + other.coeffs)

    def __sub__(self, other: "BinaryForm") -> "BinaryForm":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return BinaryForm(self.coeffs - other.coeffs)

    def __neg__(self) -> "BinaryForm":
        return BinaryForm(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, BinaryForm):
            return BinaryForm(np.convolve(self.coeffs, other.coeffs))
        return BinaryForm(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "BinaryForm":
        return BinaryForm(self.coeffs / complex(scalar))

    def __pow__(self, n: int) -> "BinaryForm":
        out = BinaryForm([1.0])
        for _ in range(n):
            out = out * self
        return out

    def scaled_max(self) -> "BinaryForm":
        """Rescale so the largest coefficient modulus is 1."""
        big = np.abs(self.coeffs).max()
        return BinaryForm(self.coeffs / big) if big > 0 else BinaryForm(self.coeffs)

    def derivative_t(self) -> "BinaryForm":
        """d/dt of ``f(1, t)`` re-homogenized to degree ``d - 1``."""
        d = self.degree
        if d == 0:
            return BinaryForm([0.0])
        return BinaryForm(self.coeffs[1:] * np.arange(1, d + 1))

    def compose(self, M) -> "BinaryForm":
        """The form ``z -> f(M z)`` for a 2x2 matrix ``M``."""
        M = np.asarray(M, dtype=complex)
        l0 = np.array([M[0, 0], M[0, 1]])
        l1 = np.array([M[1, 0], M[1, 1]])
        d = self.degree
        pow0 = [np.array([1.0 + 0j])]
        pow1 = [np.array([1.0 + 0j])]
        for _ in range(d):
            pow0.append(np.convolve(pow0[-1], l0))
            pow1.append(np.convolve(pow1[-1], l1))
        out = np.zeros(d + 1, dtype=complex)
        for j, c in enumerate(self.coeffs):
            if c != 0:
                out += c * np.convolve(pow0[d - j], pow1[j])
        return BinaryForm(out)

    def antipodal_conjugate(self) -> "BinaryForm":
        """The form ``conj(f(-conj(z1), conj(z0)))``."""
        d = self.degree
        signs = (-1.0) ** (d - np.arange(d + 1))
        return BinaryForm((np.conj(self.coeffs) * signs)[::-1])

    def __repr__(self):
        return f"BinaryForm(degree={self.degree}, coeffs={np.array2string(self.coeffs, precision=4)})"


@dataclass(frozen=True)
class QuadraticClass:
    """``a z0^2 + b z0 z1 + c z1^2``."""

    a: complex
    b: complex
    c: complex

    @classmethod
    def from_form(cls, f: BinaryForm) -> "QuadraticClass":
        if f.degree != 2:
            raise ValueError("quadratic class needs a degree-2 form")
        a, b, c = f.coeffs
        return cls(complex(a), complex(b), complex(c))

    def as_form(self) -> BinaryForm:
        return BinaryForm([self.a, self.b, self.c])

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=complex)

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.as_array()) <= tol))


def eval_coeffs(c: np.ndarray, z0, z1):
    """Evaluate coefficient array(s) at ``(z0, z1)``; broadcasts over points."""
    c = np.asarray(c)
    d = c.shape[-1] - 1
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    j = np.arange(d + 1)
    mon = z0[..., None] ** (d - j) * z1[..., None] ** j
    return mon @ c if c.ndim == 1 else np.einsum("...j,kj->...k", mon, c)


def eval_form(f: BinaryForm, p) -> complex:
    """``sum_j c_j z0^(d-j) z1^j``; scales like ``lambda**d`` under ``p -> lambda p``."""
    p = as_point(p)
    return complex(eval_coeffs(f.coeffs, p.z0, p.z1))


def _relevant_max(c: np.ndarray) -> float:
    big = float(np.abs(c).max()) if c.size else 0.0
    return big if big > 0 else 1.0


def from_roots(points: Sequence, tol: float = DEFAULT_TOL) -> BinaryForm:
    """Form vanishing at the given points, monic in its first nonvanishing coefficient.

    Each root ``(a, b)`` contributes the factor ``b z0 - a z1``.
    """
    c = np.array([1.0 + 0j])
    for p in points:
        q = as_point(p).normalized()
        c = np.convolve(c, np.array([q.z1, -q.z0]))
    big = _relevant_max(c)
    nz = np.flatnonzero(np.abs(c) > tol * big)
    lead = c[nz[0]] if nz.size else 1.0
    return BinaryForm(c / lead)


def disc_quadratic(q) -> complex:
    """``b^2 - 4ac``; zero exactly when the quadratic has a double root."""
    if isinstance(q, BinaryForm):
        q = QuadraticClass.from_form(q)
    return complex(q.b * q.b - 4 * q.a * q.c)


def _cluster(points: list[ProjPoint], tol: float) -> list[tuple[ProjPoint, int, float]]:
    groups: list[list[ProjPoint]] = []
    for p in points:
        for g in groups:
            if p.distance(g[0]) < tol:
                g.append(p)
                break
        else:
            groups.append([p])
    out = []
    for g in groups:
        ref = g[0].normalized()
        # average representatives in the chart where ref is finite
        if abs(ref.z0) >= abs(ref.z1):
            vals = np.array([q.z1 / q.z0 for q in g])
            centre = ProjPoint(1.0, vals.mean())
            spread = float(np.abs(vals - vals.mean()).max())
        else:
            vals = np.array([q.z0 / q.z1 for q in g])
            centre = ProjPoint(vals.mean(), 1.0)
            spread = float(np.abs(vals - vals.mean()).max())
        out.append((centre.normalized(), len(g), spread))
    return out


def root_clusters(f: BinaryForm, tol: float = DEFAULT_TOL,
                  cluster_tol: float = CLUSTER_TOL,
                  extended: bool | None = None) -> list[tuple[ProjPoint, int, float]]:
    """Roots with multiplicities and the spread of each cluster.

    A large spread for a multiple root signals an ill-conditioned cluster; it is
    reported rather than treated as an error.
    """
    c = np.asarray(f.coeffs, dtype=complex)
    big = _relevant_max(c)
    if np.all(np.abs(c) <= tol * big) or not np.any(c):
        raise ValueError("roots of the zero form are undefined")
    # coefficients of t^j for j = d, d-1, ... small at the top mean roots at infinity
    top = c.size - 1
    while top > 0 and abs(c[top]) <= tol * big:
        top -= 1
    n_inf = c.size - 1 - top
    finite = c[: top + 1]
    pts: list[ProjPoint] = []
    if top > 0:
        ts = np.roots(finite[::-1])
        use_mp = EXTENDED_PRECISION if extended is None else extended
        if use_mp:
            ts = _refine_mp(finite, ts)
        pts.extend(ProjPoint(1.0, t) for t in ts)
    pts.extend(ProjPoint.infinity() for _ in range(n_inf))
    return _cluster(pts, cluster_tol)


def roots(f: BinaryForm, tol: float = DEFAULT_TOL, cluster_tol: float = CLUSTER_TOL,
          extended: bool | None = None) -> list[tuple[ProjPoint, int]]:
    """Roots of ``f`` as ``(point, multiplicity)`` pairs; multiplicities sum to the degree."""
    return [(p, k) for p, k, _ in root_clusters(f, tol, cluster_tol, extended)]


def simple_roots(f: BinaryForm, tol: float = DEFAULT_TOL) -> list[ProjPoint]:
    """All roots repeated by multiplicity, without clustering."""
    return [p for p, k, _ in root_clusters(f, tol, cluster_tol=0.0)]


def _refine_mp(asc: np.ndarray, ts: np.ndarray, dps: int = 40) -> np.ndarray:
    import mpmath

    with mpmath.workdps(dps):
        coeffs = [mpmath.mpc(complex(a)) for a in asc[::-1]]
        out = []
        for t in ts:
            x = mpmath.mpc(complex(t))
            for _ in range(20):
                val = mpmath.polyval(coeffs, x, derivative=True)
                if val[1] == 0:
                    break
                step = val[0] / val[1]
                x -= step
                if abs(step) < mpmath.mpf(10) ** (-dps + 5) * max(1, abs(x)):
                    break
            out.append(complex(x))
    return np.array(out)


def convolution_matrix(d: np.ndarray, n_cols: int) -> np.ndarray:
    """Matrix of ``q -> d * q`` on coefficient vectors of length ``n_cols``."""
    rows = d.size + n_cols - 1
    M = np.zeros((rows, n_cols), dtype=complex)
    for k in range(n_cols):
        M[k:k + d.size, k] = d
    return M


def divide_exact(n: BinaryForm, d: BinaryForm, tol: float = DEFAULT_TOL) -> BinaryForm:
    """Least-squares quotient ``q`` with ``||n - d q|| <= tol ||n||``."""
    if n.degree < d.degree:
        raise ValueError("numerator degree is smaller than denominator degree")
    if d.is_zero():
        raise ZeroDivisionError("division by the zero form")
    M = convolution_matrix(d.coeffs, n.degree - d.degree + 1)
    q, *_ = np.linalg.lstsq(M, n.coeffs, rcond=None)
    resid = np.linalg.norm(n.coeffs - M @ q)
    scale = np.linalg.norm(n.coeffs)
    if resid > tol * scale:
        raise DivisionResidualTooLarge(
            f"residual {resid:.3e} exceeds {tol:.1e} * |n| = {tol * scale:.3e}")
    return BinaryForm(q)


def wronskian(p: BinaryForm, q: BinaryForm) -> BinaryForm:
    """``p q' - p' q`` with ``'`` = d/dt, ``t = z1/z0``, as a form of degree ``deg p + deg q - 2``.

    With this convention ``wronskian(z0, z1) = 1``; differentiating in the
    other affine parameter ``z0/z1`` flips the sign.
    """
    dp, dq = p.derivative_t().coeffs, q.derivative_t().coeffs
    out = np.convolve(p.coeffs, dq) - np.convolve(dp, q.coeffs)
    deg = p.degree + q.degree - 2
    if deg < 0:
        return BinaryForm([0.0])
    return BinaryForm(out[: deg + 1], degree=deg)


def veronese(p) -> np.ndarray:
    """``(z0^2, z0 z1, z1^2)``; a quadratic vanishes at ``p`` iff orthogonal to it (bilinearly)."""
    p = as_point(p)
    return np.array([p.z0 ** 2, p.z0 * p.z1, p.z1 ** 2], dtype=complex)


def sylvester(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Sylvester matrix of two coefficient vectors (descending-agnostic)."""
    m, n = f.size - 1, g.size - 1
    S = np.zeros((m + n, m + n), dtype=complex)
    for i in range(n):
        S[i, i:i + m + 1] = f
    for i in range(m):
        S[n + i, i:i + n + 1] = g
    return S


def resultant(f: BinaryForm, g: BinaryForm) -> complex:
    """Resultant of two binary forms via the Sylvester determinant."""
    return complex(np.linalg.det(sylvester(f.coeffs, g.coeffs)))


def interpolate_form(points: Sequence, values: Sequence[complex], degree: int) -> BinaryForm:
    """Binary form of the given degree taking ``values`` at the representatives ``points``."""
    rows = []
    for p in points:
        p = as_point(p)
        rows.append([p.z0 ** (degree - j) * p.z1 ** j for j in range(degree + 1)])
    c, *_ = np.linalg.lstsq(np.array(rows, dtype=complex), np.asarray(values, dtype=complex),
                            rcond=None)
    return BinaryForm(c)


def mobius_through(src: Sequence, dst: Sequence) -> np.ndarray:
    """Matrix ``M`` with ``M src_k ~ dst_k`` for three distinct points on each side."""
    def to_std(pts):
        # columns sending (1,0),(0,1),(1,1) to the three points
        a, b, c = (as_point(p).as_array() for p in pts)
        A = np.column_stack([a, b])
        lam = np.linalg.solve(A, c)
        return A * lam
    S, D = to_std(src), to_std(dst)
    return D @ np.linalg.inv(S)


def monomials(p, d: int) -> np.ndarray:
    """``(z0^d, z0^(d-1) z1, ..., z1^d)`` at the representative ``p``."""
    p = as_point(p)
    j = np.arange(d + 1)
    return p.z0 ** (d - j) * p.z1 ** j


def chart_coordinate(p) -> tuple[complex, int]:
    """Affine coordinate of ``p`` in the chart where it has modulus <= 1."""
    p = as_point(p)
    if abs(p.z0) >= abs(p.z1):
        return p.z1 / p.z0, 0
    return p.z0 / p.z1, 1


def chart_point(x: complex, chart: int) -> ProjPoint:
    return ProjPoint(1.0, x) if chart == 0 else ProjPoint(x, 1.0)


def chart_monomials(x: complex, chart: int, d: int, order: int = 0) -> np.ndarray:
    """``order``-th derivative in ``x`` of the monomials at ``(1, x)`` (chart 0) or ``(x, 1)``."""
    j = np.arange(d + 1)
    e = j if chart == 0 else d - j
    coef = np.ones(d + 1)
    for k in range(order):
        coef = coef * (e - k)
    pw = np.where(e - order >= 0, e - order, 0)
    out = coef * np.asarray(x, dtype=complex) ** pw
    return np.where(e - order >= 0, out, 0.0)


def partial0(f: BinaryForm) -> BinaryForm:
    d = f.degree
    if d == 0:
        return BinaryForm([0.0])
    return BinaryForm(f.coeffs[:d] * (d - np.arange(d)))


def partial1(f: BinaryForm) -> BinaryForm:
    return f.derivative_t()


def coprimality(f: BinaryForm, g: BinaryForm) -> float:
    """Smallest over largest singular value of the Sylvester matrix (0 iff a common root)."""
    if f.degree == 0 or g.degree == 0:
        return 1.0
    s = np.linalg.svd(sylvester(f.coeffs, g.coeffs), compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0
