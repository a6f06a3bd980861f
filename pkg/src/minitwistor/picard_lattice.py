"""Intersection theory on blow-ups of P^1 x P^1.

A class ``(k, l; m_1, ..., m_n)`` stands for ``mu^* O(k, l) - sum m_i E_i``,
where ``k`` is the degree in the first coordinate ``u`` and ``l`` the degree
in ``v``.  Multiplicities of subtracted exceptional classes are stored as
given, so an exceptional curve ``E_j`` itself is ``(0, 0; 0, .., -1, .., 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class LatticeContextMismatch(ValueError):
    pass


class ParityError(ValueError):
    pass


class HypothesisViolation(ValueError):
    pass


@dataclass(frozen=True)
class LatticeContext:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("number of blow-ups must be nonnegative")


@dataclass(frozen=True)
class DivisorClass:
    k: int
    l: int
    mults: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "mults", tuple(int(x) for x in self.mults))

    @property
    def n(self) -> int:
        return len(self.mults)

    @classmethod
    def exceptional(cls, j: int, n: int) -> "DivisorClass":
        mults = [0] * n
        mults[j] = -1
        return cls(0, 0, tuple(mults))

    @classmethod
    def parse(cls, text: str) -> "DivisorClass":
        """Parse ``"k,l:m1,...,mn"`` (the multiplicity part may be empty)."""
        head, _, tail = text.partition(":")
        k, l = (int(x) for x in head.split(","))
        mults = tuple(int(x) for x in tail.split(",") if x.strip()) if tail.strip() else ()
        return cls(k, l, mults)

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        _check(self, other)
        return DivisorClass(self.k + other.k, self.l + other.l,
                            tuple(a + b for a, b in zip(self.mults, other.mults)))

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        _check(self, other)
        return DivisorClass(self.k - other.k, self.l - other.l,
                            tuple(a - b for a, b in zip(self.mults, other.mults)))

    def __mul__(self, s: int) -> "DivisorClass":
        return DivisorClass(s * self.k, s * self.l, tuple(s * a for a in self.mults))

    __rmul__ = __mul__

    def __str__(self):
        return f"({self.k},{self.l};{','.join(map(str, self.mults))})"

    def as_vector(self) -> np.ndarray:
        return np.array([self.k, self.l, *self.mults], dtype=np.int64)


def _check(A: DivisorClass, B: DivisorClass):
    if A.n != B.n:
        raise LatticeContextMismatch(f"classes live on {A.n} and {B.n} blow-ups")


def intersect(A: DivisorClass, B: DivisorClass) -> int:
    """``k l' + k' l - sum m_i m_i'``."""
    _check(A, B)
    return A.k * B.l + B.k * A.l - sum(a * b for a, b in zip(A.mults, B.mults))


def self_intersection(A: DivisorClass) -> int:
    return intersect(A, A)


def gram_matrix(n: int) -> np.ndarray:
    G = np.zeros((n + 2, n + 2), dtype=np.int64)
    G[0, 1] = G[1, 0] = 1
    G[2:, 2:] = -np.eye(n, dtype=np.int64)
    return G


def canonical_class(ctx: LatticeContext | int) -> DivisorClass:
    n = ctx.n if isinstance(ctx, LatticeContext) else int(ctx)
    return DivisorClass(-2, -2, (-1,) * n)


def adjunction_nodes(C: DivisorClass) -> int:
    """Arithmetic genus ``(C^2 + C.K)/2 + 1``: the node count of a rational member."""
    total = self_intersection(C) + intersect(C, canonical_class(C.n))
    if total % 2:
        raise ParityError(f"C^2 + C.K = {total} is odd")
    return total // 2 + 1


def severi_dimension(c2: int, delta: int) -> int:
    """``c2 + 1 - 2 delta``; use :func:`severi_hypothesis_holds` for the positivity flag."""
    return c2 + 1 - 2 * delta


def severi_hypothesis_holds(c2: int, delta: int) -> bool:
    return c2 + 1 - 2 * delta > 0


def system_dimension(c2: int, delta: int) -> int:
    """``dim |C| = c2 + 1 - delta``, valid when ``c2 > 2 delta - 2``."""
    if not c2 > 2 * delta - 2:
        raise HypothesisViolation(f"need C^2 > 2 delta - 2, got C^2={c2}, delta={delta}")
    return c2 + 1 - delta


def index_of(C: DivisorClass) -> float:
    c2 = self_intersection(C)
    return c2 // 2 if c2 % 2 == 0 else c2 / 2


def _compositions(total: int, sq: int, n: int, cap: int):
    """Nonnegative integer vectors of length n with given sum and sum of squares."""
    if n == 0:
        if total == 0 and sq == 0:
            yield ()
        return
    if total < 0 or sq < 0:
        return
    hi = min(cap, total, math.isqrt(sq))
    for x in range(hi, -1, -1):
        # remaining n-1 entries must fit: sum^2 <= (n-1) * sumsq
        rt, rs = total - x, sq - x * x
        if n == 1:
            if rt or rs:
                continue
        elif rt * rt > (n - 1) * rs:
            continue
        for rest in _compositions(rt, rs, n - 1, x):
            yield (x,) + rest


def _distinct_permutations(seq):
    counts: dict[int, int] = {}
    for x in seq:
        counts[x] = counts.get(x, 0) + 1
    keys = sorted(counts, reverse=True)
    n = len(seq)

    def rec(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for key in keys:
            if counts[key]:
                counts[key] -= 1
                prefix.append(key)
                yield from rec(prefix)
                prefix.pop()
                counts[key] += 1

    yield from rec([])


def _bidegree_bound(C: DivisorClass) -> tuple[int, int]:
    """Bounds on k', l' for E in C-perp with E^2 = -1 (Hodge index: C-perp is negative definite)."""
    n = C.n
    G = gram_matrix(n).astype(float)
    c = C.as_vector().astype(float)
    c2 = c @ G @ c
    if c2 <= 0:
        raise HypothesisViolation("candidate search needs C^2 > 0")
    Gc = G @ c
    Qp = -G + 2.0 * np.outer(Gc, Gc) / c2
    Qinv = np.linalg.inv(Qp)
    bk = int(math.floor(math.sqrt(max(Qinv[0, 0], 0.0)) + 1e-9))
    bl = int(math.floor(math.sqrt(max(Qinv[1, 1], 0.0)) + 1e-9))
    return bk, bl


def enumerate_candidate_minus_one_classes(ctx: LatticeContext | int | None,
                                          C: DivisorClass) -> list[DivisorClass]:
    """Classes E = (k', l'; m') with k', l', m'_i >= 0, E^2 = K.E = -1 and C.E = 0.

    Pure exceptional classes ``E_j`` are excluded here and handled by
    :func:`minimality_report`.  The search is finite: on the orthogonal
    complement of C (C^2 > 0) the form is negative definite, which bounds k'
    and l'; for fixed (k', l') the multiplicities have prescribed sum
    ``2k'+2l'-1`` and sum of squares ``2k'l'+1``.
    """
    n = C.n if ctx is None else (ctx.n if isinstance(ctx, LatticeContext) else int(ctx))
    if n != C.n:
        raise LatticeContextMismatch("class length does not match context")
    if C.k < 0 or C.l < 0:
        raise ValueError("C must have nonnegative bidegree")
    bk, bl = _bidegree_bound(C)
    out = []
    for kp in range(bk + 1):
        for lp in range(bl + 1):
            s1 = 2 * kp + 2 * lp - 1
            s2 = 2 * kp * lp + 1
            if s1 < 0:
                continue
            if s1 * s1 > 2 * n * s2:
                continue
            for mp in _compositions(s1, s2, n, s1):
                for perm in _distinct_permutations(mp):
                    E = DivisorClass(kp, lp, perm)
                    if intersect(C, E) == 0:
                        out.append(E)
    out.sort(key=lambda E: (E.k, E.l, tuple(-x for x in E.mults)))
    return out


def minimality_report(ctx: LatticeContext | int | None, C: DivisorClass) -> dict:
    """Numerical minimality of the pair (S, |C|).

    ``numerically_minimal`` is true iff no candidate (-1)-class is orthogonal to
    C and no exceptional curve E_j has C.E_j = 0.  A listed candidate is only a
    numerical class; whether it carries an irreducible (-1)-curve needs a
    geometric check.
    """
    n = C.n
    idle = [DivisorClass.exceptional(j, n) for j in range(n)
            if intersect(C, DivisorClass.exceptional(j, n)) == 0]
    cands = enumerate_candidate_minus_one_classes(ctx, C)
    return {
        "numerically_minimal": not idle and not cands,
        "candidates": idle + cands,
        "caveat": "numerical classes only; effectivity of a candidate is not certified",
    }


def family_class(m: int, n: int | None = None) -> DivisorClass:
    """``(m, 2; 1, ..., 1)`` on ``n = 2m`` blow-ups (extra entries are idle points)."""
    n = 2 * m if n is None else n
    if n < 2 * m:
        raise ValueError("need at least 2m blow-ups")
    return DivisorClass(m, 2, (1,) * (2 * m) + (0,) * (n - 2 * m))


def lattice_report(C: DivisorClass) -> dict:
    c2 = self_intersection(C)
    delta = adjunction_nodes(C)
    sev = severi_dimension(c2, delta)
    try:
        sysdim = system_dimension(c2, delta)
    except HypothesisViolation:
        sysdim = None
    mini = minimality_report(None, C)
    return {
        "class": {"k": C.k, "l": C.l, "mults": list(C.mults)},
        "self_intersection": c2,
        "canonical_degree": intersect(C, canonical_class(C.n)),
        "nodes": delta,
        "severi_dim": sev,
        "severi_hypothesis": severi_hypothesis_holds(c2, delta),
        "system_dim": sysdim,
        "index": index_of(C),
        "minimal": mini["numerically_minimal"],
        "candidates": [str(E) for E in mini["candidates"]],
    }
