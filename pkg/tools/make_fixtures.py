"""Regenerate the shipped fixture pack from the engine's derived new blocks.

For each (level, weight) the new block is split into simultaneous
eigenlines of T_r (r prime to the level) and U_l (l | level) over QQ.
Every eigenline with rational eigenvalues becomes one fixture; blocks
with non-rational eigenforms are skipped and reported.

    python tools/make_fixtures.py [--prec 400] [--out src/newmodp/data]
"""
from __future__ import annotations

import argparse
from fractions import Fraction
from pathlib import Path

import sympy

from newmodp import linalg as la
from newmodp.fixtures import NewformFixture, format_fixture, validate_fixture
from newmodp.rings import QQ, ZZ, is_prime, prime_factors
from newmodp.spaces import FormBasis, derived_new_block, new_dimension, sturm_bound

PACK = [(5, 4), (15, 4), (3, 12), (3, 16), (3, 6), (3, 8), (5, 6), (15, 2), (5, 8),
        (15, 6)]


def _rational_roots(poly):
    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x ** i for i, c in enumerate(poly))
    return [r for r in sympy.roots(sympy.Poly(expr, x), filter="Q")]


def eigenlines(d, k, prec):
    rows = derived_new_block(d, k, prec)
    if not rows:
        return [], []
    L = sturm_bound(k, d) + 1
    fb = FormBasis(list(rows), L)
    ops = []
    for ell in prime_factors(d):
        ops.append(fb.op_matrix(lambda c, ell=ell: list(c[::ell])))
    for r in range(2, 30):
        if is_prime(r) and d % r and len(ops) < len(prime_factors(d)) + 3:
            rk = r ** (k - 1)
            ops.append(fb.op_matrix(
                lambda c, r=r, rk=rk: [c[r * n] + (rk * c[n // r] if n % r == 0 else 0)
                                       for n in range((len(c) - 1) // r + 1)]))
    spaces = [la.identity(len(rows), QQ)]
    skipped = []
    for A in ops:
        nxt = []
        for V in spaces:
            # restriction of A to the subspace V (rows are coordinates)
            ech = la.Echelon(V, QQ)
            AV = [ech.coords(la.vecmat(v, A, QQ)) for v in V]
            cp = la.charpoly(AV, QQ)
            roots = _rational_roots(cp)
            got = 0
            for lam in roots:
                lam = Fraction(int(lam.p), int(lam.q))
                B = [[AV[i][j] - (lam if i == j else 0) for j in range(len(V))]
                     for i in range(len(V))]
                K = la.left_kernel(B, QQ)
                if K:
                    nxt.append([la.vecmat(c, V, QQ) for c in K])
                    got += len(K)
            if got < len(V):
                skipped.append(len(V) - got)
        spaces = nxt
    lines = [S[0] for S in spaces if len(S) == 1]
    forms = []
    for c in lines:
        v = fb.combine(c)
        a1 = Fraction(v[1])
        forms.append([int(Fraction(x) / a1) for x in v])
    return forms, skipped


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--prec", type=int, default=400)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/newmodp/data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for d, k in PACK:
        forms, skipped = eigenlines(d, k, args.prec + 1)
        fxs = []
        for v in forms:
            an = v[1: args.prec + 1]
            signs = {}
            for q in prime_factors(d):
                s = Fraction(-an[q - 1], q ** ((k - 2) // 2))
                signs[q] = int(s)
            tag = "".join(f"{q}{'+' if s > 0 else '-'}" for q, s in sorted(signs.items()))
            fx = NewformFixture(f"{d}.{k}.{tag}", d, k, ZZ, an, signs,
                                "generated by tools/make_fixtures.py: simultaneous rational "
                                "eigenline of T_r and U_l on the derived new block")
            validate_fixture(fx)
            fxs.append(fx)
        labels = [f.label for f in fxs]
        if len(set(labels)) != len(labels):
            for i, f in enumerate(sorted(fxs, key=lambda f: f.an)):
                f.label = f"{f.label}.{i}"
        fxs.sort(key=lambda f: f.label)
        if len(fxs) < new_dimension(d, k):
            print(f"{d}.{k}: {len(fxs)} rational of {new_dimension(d, k)}; skipped {skipped}")
            if not fxs:
                continue
        text = f"# newforms of level {d}, weight {k}\n" + "---\n".join(format_fixture(f) for f in fxs)
        (out / f"level{d}_weight{k}.fix").write_text(text, encoding="utf-8")
        print(f"{d}.{k}: wrote {len(fxs)}: {', '.join(f.label for f in fxs)}")


if __name__ == "__main__":
    main()
