"""Two worked congruence examples, replayed end to end from the fixture pack.

``mod5-level3``: the level 3 newforms of weights 12 and 16 with opposite
Atkin-Lehner signs are congruent mod 5.  The involution w_3 separates their
reductions while the renormalized W_3 = 3^{k/2} w_3 does not.

``mod7-level15``: the level 15 weight 4 newform b is congruent mod 7 to an
old form built from the level 5 newform f, which makes the lattice
old ⊕ new non-saturated at 7.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm

from . import linalg as la
from .errors import Unsupported
from .fixtures import load_pack
from .newold import intersect_old_new, lambda_k
from .operators import lower_space, op_embed, op_W, op_w
from .rings import QQ, ZZ, FiniteField
from .spaces import SpaceParams, auto_prec, build_space

NAMES = ("mod5-level3", "mod7-level15")


def _fixture(fixtures, label):
    for fx in fixtures:
        if fx.label == label:
            return fx
    raise Unsupported(f"fixture {label} is not in the pack")


def _vp(x: Fraction, p):
    if x == 0:
        return None
    v, n, d = 0, x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def mod5_level3(fixtures=None, through=20) -> dict:
    fixtures = load_pack() if fixtures is None else fixtures
    f12 = _fixture(fixtures, "3.12.3+")
    f16 = _fixture(fixtures, "3.16.3-")
    p, ell = 5, 3
    F = FiniteField(p)
    red12 = [x % p for x in f12.an[:through]]
    red16 = [x % p for x in f16.an[:through]]
    agree = red12 == red16
    images = {}
    for fx in (f12, f16):
        k = fx.weight
        prec = auto_prec(k, ell, [ell])
        S = build_space(SpaceParams(ell, k, F, prec), fixtures)
        c = S.coords(fx.qexp(F, prec))
        fbar = S.form(c).coeffs
        w = S.form(op_w(S, ell).apply(c)).coeffs
        W = S.form(op_W(S, ell).apply(c)).coeffs
        # scalars relating the images to the reduction itself
        lead = next(i for i, x in enumerate(fbar) if x)
        sw = F.div(w[lead], fbar[lead])
        sW = F.div(W[lead], fbar[lead])
        images[fx.label] = {
            "w_scalar": int(sw), "W_scalar": int(sW),
            "w_is_scalar": all(F.eq(a, F.mul(sw, b)) for a, b in zip(w, fbar)),
            "W_is_scalar": all(F.eq(a, F.mul(sW, b)) for a, b in zip(W, fbar)),
            "w_prefix": [int(x) for x in w[: through + 1]],
            "W_prefix": [int(x) for x in W[: through + 1]],
        }
    i12, i16 = images[f12.label], images[f16.label]
    w_disagree = i12["w_prefix"] != i16["w_prefix"]
    W_agree = i12["W_prefix"] == i16["W_prefix"]
    checks = {
        "reductions_agree": agree,
        "w_images_disagree": w_disagree and i12["w_scalar"] == 1 and i16["w_scalar"] == p - 1,
        "W_images_agree": W_agree and i12["W_scalar"] == i16["W_scalar"] == 4,
        "images_are_scalar": all(i[key] for i in images.values()
                                 for key in ("w_is_scalar", "W_is_scalar")),
    }
    return {"name": "mod5-level3", "through": through, "reduction_prefix": red12,
            "images": images, "checks": checks, "passed": all(checks.values())}


def _level15_pieces(fixtures):
    N, ell, k = 5, 3, 4
    prec = auto_prec(k, N * ell, [ell, 2, 7, 11, 13])
    upZ = build_space(SpaceParams(N * ell, k, ZZ, prec), fixtures)
    upQ = build_space(SpaceParams(N * ell, k, QQ, prec), fixtures)
    lowQ = lower_space(upQ, ell)
    return upZ, upQ, lowQ, prec


def mod7_level15(fixtures=None, through=9) -> dict:
    fixtures = load_pack() if fixtures is None else fixtures
    N, p, ell, k = 5, 7, 3, 4
    f = _fixture(fixtures, "5.4.5+")
    b = _fixture(fixtures, "15.4.3+5+")
    a = _fixture(fixtures, "15.4.3-5-")
    # (i) b = f + 2 f(q^3) mod 7
    fq = [0] + f.an
    bq = [0] + b.an
    g = [fq[n] + (2 * fq[n // 3] if n % 3 == 0 else 0) for n in range(through + 1)]
    congruent = all((bq[n] - g[n]) % p == 0 for n in range(through + 1))
    # (ii) lattice index of old ⊕ new inside the saturated lattice
    upZ, upQ, lowQ, prec = _level15_pieces(fixtures)
    c0 = upQ.char0
    E = op_embed(lowQ, upQ)
    W = op_W(upQ, ell)
    cf = lowQ.coords(f.qexp(QQ, prec))
    fE = E.apply(cf)
    fW = W.apply(fE)
    ca = upQ.coords(a.qexp(QQ, prec))
    cb = upQ.coords(b.qexp(QQ, prec))
    rows = [fE, fW, ca, cb]
    den = lcm(*(x.denominator for r in rows for x in r))
    M = [[int(x * den) for x in r] for r in rows]
    diag = [Fraction(d, den) for d in la.smith_diagonal(M)]
    ppart = sorted(p ** max(_vp(d, p) or 0, 0) for d in diag)
    # the vector (1/7)(f + (2/81) W f - b), in saturated coordinates
    vec = [(x + Fraction(2, 81) * y - z) / p for x, y, z in zip(fE, fW, cb)]
    integral = all(x.denominator % p for x in vec)
    series = c0.basis.combine(vec)[: through + 1]
    nonzero_mod_p = any(Fraction(x).numerator % p for x in vec)
    # (iii) level raising at weight 4
    lam = lambda_k(ell, k, p)
    a3 = f.a(3) % p
    # (iv) old ∩ new over F_7, witnessed by the reduction of b
    F = FiniteField(p)
    upF = build_space(SpaceParams(N * ell, k, F, prec), fixtures)
    rep = intersect_old_new(upF, ell)
    cbF = upF.coords(b.qexp(F, prec))
    witness = la.span_contains(rep.subspace, [cbF], F) if rep.dim else False
    checks = {
        "b_congruent_f_plus_2f_q3": congruent,
        "smith_p_part": ppart == [1, 1, 1, p],
        "vector_p_integral": integral and nonzero_mod_p,
        "level_raising": lam == 2 and a3 == lam,
        "intersection_dim_1": rep.dim == 1,
        "b_spans_intersection": bool(witness),
    }
    return {"name": "mod7-level15", "through": through,
            "b_prefix": bq[: through + 1], "old_prefix": g,
            "smith_diagonal": [str(d) for d in diag], "smith_p_part": ppart,
            "vector_coords": [str(x) for x in vec],
            "vector_prefix": [str(x) for x in series],
            "lambda": lam, "a3_f": a3, "intersection_dim": rep.dim,
            "checks": checks, "passed": all(checks.values())}


def run_example(name, fixtures=None) -> dict:
    if name == "mod5-level3":
        return mod5_level3(fixtures)
    if name == "mod7-level15":
        return mod7_level15(fixtures)
    raise KeyError(name)
