"""Symbolic oracle for binary forms, transversality and implicitization.

    python3 tools/oracles/forms_oracle.py

Coefficient lists follow the package layout: entry j multiplies z0^(d-j) z1^j.
"""

import json

import sympy as sp

z0, z1, t, u0, u1, v0, v1, c = sp.symbols("z0 z1 t u0 u1 v0 v1 c")


def coeffs(f, d, a=z0, b=z1):
    P = sp.Poly(sp.expand(f), a, b)
    return [P.coeff_monomial(a ** (d - j) * b ** j) for j in range(d + 1)]


def wronskian(p, q):
    # affine parameter t = z1/z0, homogenized back to degree 2d-2
    d = sp.Poly(p, z0, z1).total_degree()
    pa, qa = (sp.expand(f.subs({z0: 1, z1: t})) for f in (p, q))
    w = sp.expand(pa * sp.diff(qa, t) - sp.diff(pa, t) * qa)
    return sp.expand(z0 ** (2 * d - 2) * w.subs(t, z1 / z0))


def from_roots(points):
    f = sp.Integer(1)
    for a, b in points:
        f *= b * z0 - a * z1
    return sp.expand(f)


# a nodal (2,2) curve with small integer coefficients
U0, U1 = z0 ** 2, z1 ** 2 + z0 * z1
V0, V1 = z0 ** 2 + 2 * z1 ** 2, z0 * z1 - z1 ** 2


def implicit():
    a = (u0 * U1 - u1 * U0).subs({z0: 1, z1: t})
    b = (v0 * V1 - v1 * V0).subs({z0: 1, z1: t})
    R = sp.expand(sp.resultant(a, b, t))
    P = sp.Poly(R, u0, u1, v0, v1)
    return [[int(P.coeff_monomial(u0 ** (2 - i) * u1 ** i * v0 ** (2 - j) * v1 ** j)) for j in range(3)]
            for i in range(3)]


def node():
    s, r = sp.symbols("s r")
    fu = lambda x: (U1 / U0).subs({z0: 1, z1: x})
    fv = lambda x: (V1 / V0).subs({z0: 1, z1: x})
    e1 = sp.factor(sp.together(fu(s) - fu(r)) / (s - r))
    e2 = sp.factor(sp.together(fv(s) - fv(r)) / (s - r))
    sols = sp.solve([sp.numer(sp.together(e1)), sp.numer(sp.together(e2))], [s, r], dict=True)
    out = []
    for so in sols:
        if sp.simplify(so[s] - so[r]) != 0:
            out.append({"s": str(so[s]), "t": str(so[r]),
                        "u": str(sp.nsimplify(fu(so[s]))), "v": str(sp.nsimplify(fv(so[s])))})
    return out


if __name__ == "__main__":
    W = wronskian(z0 ** 2, z0 * z1)
    W01 = wronskian(z0, z1)
    F = from_roots([(1, 1), (1, -1)])
    # D1: v = u, D2: v = c (u - 3)/(u + 1); a double intersection needs disc = 0 in c
    H = sp.expand(u1 * (u1 + u0) - c * (u1 - 3 * u0) * u0)
    Hc = coeffs(H, 2, u0, u1)
    disc = sp.expand(Hc[1] ** 2 - 4 * Hc[0] * Hc[2])
    res = {
        "wronskian_z0^2_z0z1": [str(x) for x in coeffs(W, 2)],
        "wronskian_z0_z1": [str(x) for x in coeffs(W01, 0)],
        "from_roots_(1,1)(1,-1)": [str(x) for x in coeffs(F, 2)],
        "tangent_c": [str(r) for r in sp.solve(disc, c)],
        "tangent_c_float": [float(r) for r in sp.solve(disc, c)],
        "implicit_F": implicit(),
        "node": node(),
    }
    print(json.dumps(res, indent=1))
