"""Surrogate metric and Weyl connection on a chart of W, and the Einstein-Weyl residual.

The gram field is sampled on a polydisc in chart coordinates and fitted by
holomorphic polynomials.  Geodesic data (position, velocity, acceleration) come
from traced ``W_{p,q}`` arcs.  For a Weyl connection

    Gamma = LC(g) + S(w),   S(w)^k_ij = (d^k_i w_j + d^k_j w_i - g_ij w^k) / 2,

the component of the geodesic equation normal to the velocity ``T`` is linear
in ``w``:

    P (x'' + LC(T, T)) = g(T, T) P w^# / 2,    P v = v - T (T^H v) / (T^H T),

which is the least-squares problem solved for ``w``.  With this sign
``nabla g = a (x) g`` holds for ``a = -w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .geodesic_trace import ChartFrame, through_point
from .nodal_curve import ParamCurve
from .severi import RankDrop, StepFailure, trace_path

DEFAULT_RADIUS = 0.05
DEFAULT_DEGREE = 4
TRIU = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


class IllConditionedFit(RuntimeError):
    pass


class RankDeficientFit(RuntimeError):
    pass


class ProjectionFailure(RuntimeError):
    pass


# ------------------------------------------------------------------ polynomial basis

def exponents(degree: int, nvars: int = 3) -> np.ndarray:
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(e)
    return np.array(out, dtype=int)


def _powers(s: np.ndarray, degree: int) -> np.ndarray:
    P = np.ones(s.shape + (degree + 1,), dtype=complex)
    for k in range(1, degree + 1):
        P[..., k] = P[..., k - 1] * s
    return P


def design(X: np.ndarray, E: np.ndarray, radius: float, order: int = 0):
    """Monomials of ``X / radius`` and their first/second derivatives in ``X``.

    Returns ``(V, dV, ddV)`` with shapes ``(N, K)``, ``(N, 3, K)``, ``(N, 3, 3, K)``
    (derivatives only up to ``order``).
    """
    S = np.asarray(X, dtype=complex) / radius
    deg = int(E.max()) if E.size else 0
    P = _powers(S, deg + 2)
    n, nv = S.shape
    cols = np.arange(nv)

    def mono(Eshift, coef):
        out = coef.astype(complex)
        for v in range(nv):
            ev = Eshift[:, v]
            ok = ev >= 0
            vals = np.zeros((n, E.shape[0]), dtype=complex)
            vals[:, ok] = P[:, v, ev[ok]]
            out = out * vals
        return out

    ones = np.ones(E.shape[0])
    V = mono(E, ones[None, :])
    if order == 0:
        return V, None, None
    dV = np.zeros((n, nv, E.shape[0]), dtype=complex)
    for i in cols:
        Ei = E.copy()
        Ei[:, i] -= 1
        dV[:, i] = mono(Ei, E[:, i][None, :] * ones) / radius
    if order == 1:
        return V, dV, None
    ddV = np.zeros((n, nv, nv, E.shape[0]), dtype=complex)
    for i in cols:
        for j in cols:
            Eij = E.copy()
            Eij[:, i] -= 1
            Eij[:, j] -= 1
            c = E[:, i] * (E[:, j] - (1 if i == j else 0))
            ddV[:, i, j] = mono(Eij, c[None, :] * ones) / radius ** 2
    return V, dV, ddV


def _lstsq(A: np.ndarray, b: np.ndarray, cond_max: float, what: str):
    # column scaling keeps the condition estimate meaningful
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    s = np.linalg.svd(As, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > cond_max:
        raise IllConditionedFit(f"{what}: condition number {s[0] / max(s[-1], 1e-300):.2e}")
    x = np.linalg.lstsq(As, b, rcond=None)[0]
    return x / (scale[:, None] if x.ndim == 2 else scale)


# ------------------------------------------------------------------ estimators

class MetricFitter(BaseEstimator, RegressorMixin):
    """Holomorphic polynomial fit of a symmetric 3x3 matrix field.

    ``fit(X, G)`` takes chart points ``X`` of shape ``(N, 3)`` and matrices ``G``
    of shape ``(N, 3, 3)``.
    """

    def __init__(self, degree: int = DEFAULT_DEGREE, radius: float = DEFAULT_RADIUS,
                 cond_max: float = 1e12):
        self.degree = degree
        self.radius = radius
        self.cond_max = cond_max

    def fit(self, X, G):
        X = np.asarray(X, dtype=complex)
        G = np.asarray(G, dtype=complex)
        self.exponents_ = exponents(self.degree)
        if X.shape[0] < self.exponents_.shape[0]:
            raise IllConditionedFit("fewer samples than monomials")
        V, _, _ = design(X, self.exponents_, self.radius)
        Y = np.stack([G[:, i, j] for i, j in TRIU], axis=1)
        self.coef_ = _lstsq(V, Y, self.cond_max, "metric fit")
        R = V @ self.coef_ - Y
        self.residual_ = float(np.linalg.norm(R) / np.linalg.norm(Y))
        self.max_residual_ = float(np.abs(R).max() / np.abs(Y).max())
        return self

    def _assemble(self, flat):
        out = np.empty(flat.shape[:-1] + (3, 3), dtype=complex)
        for k, (i, j) in enumerate(TRIU):
            out[..., i, j] = flat[..., k]
            out[..., j, i] = flat[..., k]
        return out

    def predict(self, X):
        check_is_fitted(self, "coef_")
        V, _, _ = design(np.atleast_2d(X), self.exponents_, self.radius)
        return self._assemble(V @ self.coef_)

    def derivatives(self, X):
        """``(g, dg, ddg)`` with ``dg[n, i, j, k] = d_i g_jk`` and ``ddg[n, i, l, j, k] = d_i d_l g_jk``."""
        check_is_fitted(self, "coef_")
        V, dV, ddV = design(np.atleast_2d(X), self.exponents_, self.radius, order=2)
        g = self._assemble(V @ self.coef_)
        dg = self._assemble(np.einsum("nik,kc->nic", dV, self.coef_))
        ddg = self._assemble(np.einsum("nilk,kc->nilc", ddV, self.coef_))
        return g, dg, ddg

    def score(self, X, G, sample_weight=None):
        return 1.0 - float(np.linalg.norm(self.predict(X) - G) / np.linalg.norm(G))


class WeylFormFitter(BaseEstimator, RegressorMixin):
    """Fit of the 1-form ``w`` from geodesic data given a metric field.

    ``metric`` is a callable ``X -> (g, dg, ddg)``; ``fit(X, TA)`` takes the
    chart points and an ``(N, 2, 3)`` array of velocities and accelerations.
    """

    def __init__(self, metric: Callable | None = None, degree: int = DEFAULT_DEGREE,
                 radius: float = DEFAULT_RADIUS, cond_max: float = 1e12):
        self.metric = metric
        self.degree = degree
        self.radius = radius
        self.cond_max = cond_max

    def _system(self, X, T, A):
        g, dg, _ = self.metric(X)
        gi = np.linalg.inv(g)
        rhs_vec = A + np.einsum("nkij,ni,nj->nk", levi_civita(g, dg, gi), T, T)
        gTT = np.einsum("nij,ni,nj->n", g, T, T)
        TT = np.einsum("ni,ni->n", T.conj(), T)
        P = np.eye(3)[None] - np.einsum("ni,nj->nij", T, T.conj()) / TT[:, None, None]
        V, _, _ = design(X, self.exponents_, self.radius)
        M = 0.5 * gTT[:, None, None] * np.einsum("nij,njl->nil", P, gi)
        K = V.shape[1]
        # rows (n, i), unknowns (k, l) for w_l = sum_k c[k, l] V_k
        A_mat = np.einsum("nil,nk->nikl", M, V).reshape(X.shape[0] * 3, K * 3)
        b = np.einsum("nij,nj->ni", P, rhs_vec).reshape(-1)
        return A_mat, b, K

    def fit(self, X, TA):
        X = np.asarray(X, dtype=complex)
        TA = np.asarray(TA, dtype=complex)
        # the equation is invariant under T -> cT, A -> c^2 A + mu T: normalize |T| = 1
        nt = np.linalg.norm(TA[:, 0], axis=1)
        T, A = TA[:, 0] / nt[:, None], TA[:, 1] / (nt ** 2)[:, None]
        self.exponents_ = exponents(self.degree)
        A_mat, b, K = self._system(X, T, A)
        if A_mat.shape[0] < 3 * K:
            raise RankDeficientFit("too few geodesic samples")
        s = np.linalg.svd(A_mat, compute_uv=False)
        if s[-1] < 1e-12 * s[0]:
            raise RankDeficientFit("geodesic directions do not determine the form")
        c = _lstsq(A_mat, b, self.cond_max, "weyl form fit")
        self.coef_ = c.reshape(K, 3)
        nb = np.linalg.norm(b)
        self.residual_ = float(np.linalg.norm(A_mat @ c - b) / nb) if nb > 0 else float(np.linalg.norm(A_mat @ c))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        V, _, _ = design(np.atleast_2d(X), self.exponents_, self.radius)
        return V @ self.coef_

    def derivatives(self, X):
        """``(w, dw)`` with ``dw[n, i, j] = d_i w_j``."""
        check_is_fitted(self, "coef_")
        V, dV, _ = design(np.atleast_2d(X), self.exponents_, self.radius, order=1)
        return V @ self.coef_, np.einsum("nik,kj->nij", dV, self.coef_)


# ------------------------------------------------------------------ connection algebra

def levi_civita(g, dg, gi=None):
    """``Gamma[n, k, i, j]`` of the Levi-Civita connection."""
    gi = np.linalg.inv(g) if gi is None else gi
    # d_i g_lj + d_j g_li - d_l g_ij
    t = np.einsum("nilj->nlij", dg) + np.einsum("njli->nlij", dg) - dg
    return 0.5 * np.einsum("nkl,nlij->nkij", gi, t)


def weyl_term(g, gi, w):
    d = np.eye(3)
    wsharp = np.einsum("nkl,nl->nk", gi, w)
    return 0.5 * (np.einsum("ki,nj->nkij", d, w) + np.einsum("kj,ni->nkij", d, w)
                  - np.einsum("nij,nk->nkij", g, wsharp))


def connection(g, dg, w):
    gi = np.linalg.inv(g)
    return levi_civita(g, dg, gi) + weyl_term(g, gi, w)


def connection_derivative(g, dg, ddg, w, dw):
    """``dGamma[n, m, k, i, j] = d_m Gamma^k_ij`` by exact differentiation."""
    gi = np.linalg.inv(g)
    dgi = -np.einsum("nab,nmbc,ncd->nmad", gi, dg, gi)
    t = np.einsum("nilj->nlij", dg) + np.einsum("njli->nlij", dg) - dg
    dt = (np.einsum("nmilj->nmlij", ddg) + np.einsum("nmjli->nmlij", ddg) - ddg)
    dlc = 0.5 * (np.einsum("nmkl,nlij->nmkij", dgi, t) + np.einsum("nkl,nmlij->nmkij", gi, dt))
    d = np.eye(3)
    wsharp = np.einsum("nkl,nl->nk", gi, w)
    dwsharp = np.einsum("nmkl,nl->nmk", dgi, w) + np.einsum("nkl,nml->nmk", gi, dw)
    dS = 0.5 * (np.einsum("ki,nmj->nmkij", d, dw) + np.einsum("kj,nmi->nmkij", d, dw)
                - np.einsum("nmij,nk->nmkij", dg, wsharp) - np.einsum("nij,nmk->nmkij", g, dwsharp))
    return dlc + dS


def ricci(G, dG):
    """Symmetrized Ricci tensor of a connection with symbols ``G`` and derivatives ``dG``."""
    # R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik ; Ric_jk = R^i_ijk
    r = (np.einsum("niijk->njk", dG) - np.einsum("njiik->njk", dG)
         + np.einsum("niim,nmjk->njk", G, G) - np.einsum("nijm,nmik->njk", G, G))
    return 0.5 * (r + np.swapaxes(r, 1, 2))


# ------------------------------------------------------------------ model and report

@dataclass
class SurrogateModel:
    chart: ChartFrame | None
    metric: Callable                      # X -> (g, dg, ddg)
    form: Callable | None = None          # X -> (w, dw)
    domain_radius: float = DEFAULT_RADIUS
    g_fitter: MetricFitter | None = None
    a_fitter: WeylFormFitter | None = None
    residuals: dict = field(default_factory=dict)
    real: bool = False

    def weyl_form(self, X):
        """The 1-form ``a`` with ``nabla g = a (x) g``."""
        w, _ = self.form(X)
        return -w

    def gamma(self, X):
        g, dg, _ = self.metric(X)
        w, _ = self.form(X)
        return connection(g, dg, w)


@dataclass
class EWReport:
    lambda_values: np.ndarray
    lambda_coef: np.ndarray
    residual_tracefree: float
    geodesic_fit_residual: float
    compat_residual: float
    metric_fit_residual: float
    test_points: int

    def to_json(self) -> dict:
        return {"residual_tracefree": self.residual_tracefree,
                "geodesic_fit_residual": self.geodesic_fit_residual,
                "compat_residual": self.compat_residual,
                "metric_fit_residual": self.metric_fit_residual,
                "lambda_at_center": complex(self.lambda_values[0]),
                "test_points": self.test_points}


def polydisc(n: int, radius: float, rng: np.random.Generator, dim: int = 3, real: bool = False) -> np.ndarray:
    if real:
        return rng.uniform(-radius, radius, size=(n, dim)).astype(complex)
    rho = radius * np.sqrt(rng.uniform(size=(n, dim)))
    return rho * np.exp(2j * np.pi * rng.uniform(size=(n, dim)))


def build_chart(base: ParamCurve, pins=None) -> ChartFrame:
    return ChartFrame.at(base, pins=pins)


def chart_state(chart: ChartFrame, x, guess=None) -> np.ndarray:
    try:
        return chart.state(x, guess)
    except StepFailure as exc:
        raise ProjectionFailure(f"chart projection failed at |x| = {np.abs(x).max():.3g}") from exc


def metric_samples(chart: ChartFrame, n: int, radius: float, rng: np.random.Generator, real: bool = False,
                   normalizer: Callable | None = None):
    """Chart points and gram matrices (divided by the gram scale at the center)."""
    X = polydisc(n, radius, rng, real=real)
    X[0] = 0
    G = np.empty((n, 3, 3), dtype=complex)
    for i, x in enumerate(X):
        y = chart_state(chart, x)
        G[i] = chart.metric(y)
    scale = np.trace(G[0]) / 3
    G = G / scale
    if normalizer is not None:
        G = normalizer(G)
    return X, G


def geodesic_samples(chart: ChartFrame, n_arcs: int, radius: float, rng: np.random.Generator,
                     per_arc: int = 12, real: bool = False, lift=None):
    """Velocities and accelerations along ``n_arcs`` traced ``W_{p,q}`` arcs inside the domain.

    ``lift`` optionally maps a state to the pair of preimages to fix (used on
    the real slice, where ``q`` must be the conjugate of ``p``).
    """
    Xs, Ts, As = [], [], []
    n = chart.system.n_unknowns
    arcs = 0
    attempts = 0
    while arcs < n_arcs and attempts < 5 * n_arcs:
        attempts += 1
        x0 = polydisc(1, 0.6 * radius, rng, real=real)[0]
        try:
            y = chart_state(chart, x0)
        except ProjectionFailure:
            continue
        c = chart.curve(y)
        if lift is None:
            zs = [_random_param(rng) for _ in range(2)]
        else:
            zs = lift(c, rng)
        sysa = chart.system.with_constraints([through_point(c.image(z)) for z in zs], zs)
        Y = sysa.pack(c, zs)
        # a random direction along the arc
        h = radius / per_arc
        try:
            pts, _ = trace_path(sysa, Y, per_arc, h=h, h_max=h, check_nodes=False)
        except (RankDrop, StepFailure):
            continue
        if rng.uniform() < 0.5:
            try:
                back, _ = trace_path(sysa, Y, per_arc, h=h, h_max=h, check_nodes=False,
                                     direction=-pts[0].tangent)
                pts = back[::-1] + pts[1:]
            except (RankDrop, StepFailure):
                pass
        got = 0
        for pp in pts:
            if pp.system.charts != chart.system.charts or pp.system.aux_charts != sysa.aux_charts:
                continue
            x = chart.coords(pp.y[:n])
            lim = radius if not real else radius
            if np.abs(x).max() > lim:
                continue
            t = pp.tangent
            J = pp.system.jacobian(pp.y)
            rhs = -pp.system.second_derivative(pp.y, t)
            tt = np.linalg.lstsq(J, rhs, rcond=None)[0]
            Xs.append(x)
            Ts.append(chart.L @ t[:n])
            As.append(chart.L @ tt[:n])
            got += 1
        if got >= 3:
            arcs += 1
    if arcs < n_arcs:
        raise RankDeficientFit(f"only {arcs} geodesic arcs traced inside the domain")
    return np.array(Xs), np.stack([np.array(Ts), np.array(As)], axis=1), arcs


def _random_param(rng):
    from .binary_forms import ProjPoint
    return ProjPoint(1.0, complex(*rng.normal(size=2) * 0.6))


def fit_metric(chart: ChartFrame | None, samples, degree: int = DEFAULT_DEGREE,
               radius: float = DEFAULT_RADIUS) -> SurrogateModel:
    X, G = samples
    if len(X) < 200 and chart is not None:
        raise IllConditionedFit("at least 200 metric samples are required")
    fitter = MetricFitter(degree=degree, radius=radius).fit(X, G)
    return SurrogateModel(chart, fitter.derivatives, None, radius, fitter,
                          residuals={"metric_fit": fitter.residual_})


def fit_weyl_form(chart: ChartFrame | None, g_model: SurrogateModel, geodesic_samples,
                  degree: int = DEFAULT_DEGREE) -> SurrogateModel:
    X, TA = geodesic_samples[:2]
    fitter = WeylFormFitter(g_model.metric, degree=degree, radius=g_model.domain_radius).fit(X, TA)
    res = dict(g_model.residuals)
    res["geodesic_fit"] = fitter.residual_
    return SurrogateModel(chart, g_model.metric, fitter.derivatives, g_model.domain_radius,
                          g_model.g_fitter, fitter, res, g_model.real)


def compat_residual(model: SurrogateModel, X) -> float:
    """``|| nabla g - a (x) g || / || dg ||`` on the points ``X``."""
    g, dg, _ = model.metric(X)
    w, _ = model.form(X)
    G = connection(g, dg, w)
    a = -w
    # D_i g_jk = d_i g_jk - G^l_ij g_lk - G^l_ik g_jl
    Dg = dg - np.einsum("nlij,nlk->nijk", G, g) - np.einsum("nlik,njl->nijk", G, g)
    r = Dg - np.einsum("ni,njk->nijk", a, g)
    return float(np.abs(r).max() / max(np.abs(dg).max(), np.abs(g).max() * np.abs(a).max(), 1e-300))


def ew_residual(model: SurrogateModel, n_test: int = 200, rng: np.random.Generator | None = None,
                test_radius: float | None = None) -> EWReport:
    """Tracefree part of the symmetrized Ricci tensor on a test set in the domain."""
    rng = np.random.default_rng(12345) if rng is None else rng
    r = model.domain_radius if test_radius is None else test_radius
    X = polydisc(n_test, 0.8 * r, rng, real=model.real)
    X[0] = 0
    g, dg, ddg = model.metric(X)
    w, dw = model.form(X)
    G = connection(g, dg, w)
    dG = connection_derivative(g, dg, ddg, w, dw)
    R = ricci(G, dG)
    lam = np.einsum("nij,nij->n", g.conj(), R) / np.einsum("nij,nij->n", g.conj(), g)
    tf = R - lam[:, None, None] * g
    # a curvature floor on the natural scale |g| / r^2 keeps flat models at zero instead of 0/0
    floor = 1e-10 * np.linalg.norm(g, axis=(1, 2)) / r ** 2
    rel = np.linalg.norm(tf, axis=(1, 2)) / np.maximum(np.linalg.norm(R, axis=(1, 2)), floor)
    V, _, _ = design(X, exponents(2), r)
    lam_coef = np.linalg.lstsq(V, lam, rcond=None)[0]
    return EWReport(lam, lam_coef, float(rel.max()), float(model.residuals.get("geodesic_fit", 0.0)),
                    compat_residual(model, X), float(model.residuals.get("metric_fit", 0.0)), n_test)


def run_pipeline(base: ParamCurve, radius: float = DEFAULT_RADIUS, n_samples: int = 500,
                 n_arcs: int = 30, degree: int = DEFAULT_DEGREE, seed: int = 0,
                 chart: ChartFrame | None = None):
    """Chart, metric fit, Weyl-form fit and Einstein-Weyl report at ``base``."""
    rng = np.random.default_rng(seed)
    chart = build_chart(base) if chart is None else chart
    samples = metric_samples(chart, n_samples, radius, rng)
    gm = fit_metric(chart, samples, degree=degree, radius=radius)
    geo = geodesic_samples(chart, n_arcs, radius, rng)
    model = fit_weyl_form(chart, gm, geo, degree=degree)
    return model, ew_residual(model, rng=rng)


def refinement(base: ParamCurve, levels: int = 3, radius: float = DEFAULT_RADIUS, n_samples: int = 500,
               n_arcs: int = 30, degree: int = DEFAULT_DEGREE, seed: int = 0):
    """Reports for ``radius / 2^k`` with ``n_samples * 2^k`` samples, ``k = 0..levels-1``."""
    chart = build_chart(base)
    out = []
    for k in range(levels):
        _, rep = run_pipeline(base, radius / 2 ** k, n_samples * 2 ** k, n_arcs, degree, seed + k, chart)
        out.append((radius / 2 ** k, n_samples * 2 ** k, rep))
    return out


# ------------------------------------------------------------------ controls

def flat_metric(X):
    n = len(X)
    return (np.broadcast_to(np.eye(3, dtype=complex), (n, 3, 3)).copy(),
            np.zeros((n, 3, 3, 3), dtype=complex), np.zeros((n, 3, 3, 3, 3), dtype=complex))


def zero_form(X):
    n = len(X)
    return np.zeros((n, 3), dtype=complex), np.zeros((n, 3, 3), dtype=complex)


def space_form_metric(kappa: float) -> Callable:
    """``g = delta / (1 + kappa |x|^2 / 4)^2`` with exact derivatives (Einstein, ``Ric = 2 kappa g``)."""
    def fn(X):
        X = np.asarray(X, dtype=complex)
        n = len(X)
        s = 1 + kappa * np.einsum("ni,ni->n", X, X) / 4
        phi = s ** -2
        dphi = -kappa * X * (s ** -3)[:, None]                 # d_i phi = -2 s^-3 * kappa x_i / 2
        ddphi = (1.5 * kappa ** 2 * np.einsum("ni,nj->nij", X, X) * (s ** -4)[:, None, None]
                 - kappa * np.eye(3)[None] * (s ** -3)[:, None, None])
        d = np.eye(3)
        g = phi[:, None, None] * d[None]
        dg = np.einsum("ni,jk->nijk", dphi, d)
        ddg = np.einsum("nil,jk->niljk", ddphi, d)
        del n
        return g, dg, ddg
    return fn


def polynomial_metric(coef: np.ndarray, radius: float, degree: int = 2) -> Callable:
    """Metric field from upper-triangular polynomial coefficients ``(K, 6)``."""
    f = MetricFitter(degree=degree, radius=radius)
    f.exponents_ = exponents(degree)
    f.coef_ = coef
    return f.derivatives


def polynomial_form(coef: np.ndarray, radius: float, degree: int = 2) -> Callable:
    f = WeylFormFitter(degree=degree, radius=radius)
    f.exponents_ = exponents(degree)
    f.coef_ = coef
    return f.derivatives


def synthetic_geodesics(metric: Callable, form: Callable, X: np.ndarray, rng: np.random.Generator):
    """Random velocities with accelerations ``-Gamma(T, T) + lambda T`` for a known ``(g, w)``."""
    T = rng.normal(size=X.shape) + 1j * rng.normal(size=X.shape)
    g, dg, _ = metric(X)
    w, _ = form(X)
    G = connection(g, dg, w)
    lam = rng.normal(size=len(X)) + 1j * rng.normal(size=len(X))
    A = -np.einsum("nkij,ni,nj->nk", G, T, T) + lam[:, None] * T
    return X, np.stack([T, A], axis=1)


def straight_lines(X: np.ndarray, rng: np.random.Generator):
    T = rng.normal(size=X.shape) + 1j * rng.normal(size=X.shape)
    lam = rng.normal(size=len(X))
    return X, np.stack([T, lam[:, None] * T], axis=1)
