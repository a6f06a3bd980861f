"""Brute-force lattice oracle.

Enumerates every class E = (k, l; m_1..m_n) in a box with E^2 = -1, K.E = -1 and
C.E = 0 by plain nested loops, without the Cauchy-Schwarz bound the package uses.
Also recomputes C^2, the node count and the two dimensions for the family classes.

    python3 tools/oracles/lattice_oracle.py
"""

import itertools
import json


def dot(A, B):
    (k, l, m), (k2, l2, m2) = A, B
    return k * l2 + k2 * l - sum(a * b for a, b in zip(m, m2))


def minus_one_classes(C, box=6):
    n = len(C[2])
    K = (-2, -2, (-1,) * n)
    out = []
    for k in range(box + 1):
        for l in range(box + 1):
            for m in itertools.product(range(box + 1), repeat=n):
                E = (k, l, m)
                if (k, l) == (0, 0):
                    continue
                if dot(E, E) == -1 and dot(K, E) == -1 and dot(C, E) == 0:
                    out.append(E)
    return out


def family(m):
    return (m, 2, (1,) * (2 * m))


def summary(C):
    n = len(C[2])
    K = (-2, -2, (-1,) * n)
    c2 = dot(C, C)
    delta = (c2 + dot(C, K)) // 2 + 1
    idle = [j for j in range(n) if C[2][j] == 0]
    return {"c2": c2, "delta": delta, "severi_dim": c2 + 1 - 2 * delta, "system_dim": c2 + 1 - delta,
            "minus_one": len(minus_one_classes(C, box=4 if n > 6 else 6)), "idle_exceptionals": idle}


if __name__ == "__main__":
    res = {f"family_m{m}": summary(family(m)) for m in range(2, 5)}
    res["2,2:1,1,1,1"] = summary((2, 2, (1, 1, 1, 1)))
    res["2,2:1,1,1,1,0"] = summary((2, 2, (1, 1, 1, 1, 0)))
    print(json.dumps(res, indent=1))
