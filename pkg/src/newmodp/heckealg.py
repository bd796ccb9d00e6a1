"""Truncated shallow Hecke algebras: K(N), eigencomponents, local algebras,
the two filtrations of K(N l)_t, and the dual basis at p = 2, level 1.

Everything here works on finite truncations.  A graded space up to weight
kmax stands in for the full space of mod-p forms, and statements about
infinite-dimensional objects are replaced by their per-weight consequences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import lcm

import sympy

from . import linalg as la
from .errors import (
    BadCongruence,
    NotStable,
    PairingDegenerate,
    Unsupported,
)
from .operators import (
    OpMatrix,
    identity_op,
    op_embed,
    op_T,
    op_trace,
    op_trace_W,
    op_U,
    op_W,
    lower_space,
)
from .rings import FiniteField, is_prime, prime_factors
from .spaces import GradedSpace, graded_prec, graded_space

DEFAULT_R = 20
DEFAULT_DEGREE = 8


def default_primes(level, p, ell=None, bound=DEFAULT_R):
    """Primes r <= bound with r prime to level * l * p."""
    bad = set(prime_factors(level)) | {p} | ({ell} if ell else set())
    return [r for r in range(2, bound + 1) if is_prime(r) and r not in bad]


def fit_primes(space, primes):
    """The primes r whose T_r is computable at the space's precision."""
    from .qexp import sturm_bound
    if isinstance(space, GradedSpace):
        L = sturm_bound(space.top_weight, space.level) + 1
        return [r for r in primes if r * (L - 1) + 1 <= space.prec]
    L = space.char0.L
    return [r for r in primes if r * L <= space.prec]


# ---------------------------------------------------------------- matrix helpers

def restrict(A, B, F):
    """Matrix of the row operator A on the invariant row space B (in B's coordinates)."""
    if not B:
        return []
    ech = la.Echelon(B, F)
    out = []
    for b in B:
        c = ech.coords(la.vecmat(b, A, F))
        if c is None:
            raise NotStable(0, "subspace is not stable under the operator")
        out.append(c)
    return out


def lift_rows(C, B, F):
    """Rows C (coordinates in B) back to ambient coordinates."""
    if not C:
        return []
    return la.matmul(C, B, F)


def is_stable(A, B, F):
    if not B:
        return True
    ech = la.Echelon(B, F)
    return all(ech.contains(la.vecmat(b, A, F)) for b in B)


def _sympy_degrees(cp, p):
    """Degrees of the irreducible factors of a monic F_p polynomial (low to high coefficients)."""
    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed([int(c) for c in cp])), x, modulus=p)
    if poly.degree() <= 0:
        return []
    _, facs = poly.factor_list()
    return [f.degree() for f, _ in facs]


def splitting_degree(mats, p):
    """Least m such that every characteristic polynomial of ``mats`` splits over F_{p^m}."""
    F = FiniteField(p)
    degs = [1]
    for A in mats:
        if A:
            degs.extend(_sympy_degrees(la.charpoly(A, F), p))
    return reduce(lcm, degs, 1)


def _poly_eval(c, x, E):
    acc = E.zero
    for coef in reversed(c):
        acc = E.add(E.mul(acc, x), coef)
    return acc


def _roots(c, E):
    return [x for x in E.elements() if E.is_zero(_poly_eval(c, x, E))]


def _shift(A, lam, E):
    n = len(A)
    return [[E.sub(A[i][j], lam) if i == j else A[i][j] for j in range(n)] for i in range(n)]


def nilpotency_index(A, F):
    """Least e with A^e = 0, or None when A is not nilpotent."""
    n = len(A)
    if n == 0:
        return 0
    P = la.identity(n, F)
    for e in range(1, n + 1):
        P = la.matmul(P, A, F)
        if la.is_zero_matrix(P, F):
            return e
    return None


# ---------------------------------------------------------------- eigensystems

@dataclass
class Eigensystem:
    """A finite eigenvalue tuple standing in for a pseudorepresentation t."""

    values: dict
    field: FiniteField
    kappa: int | None = None
    level: int = 0
    origin: str = ""

    def key(self):
        return tuple((r, self.field.fmt(v)) for r, v in sorted(self.values.items()))

    def fmt(self):
        return " ".join(f"{r}:{self.field.fmt(v)}" for r, v in sorted(self.values.items()))

    def matches(self, other, primes=None):
        rs = primes if primes is not None else sorted(set(self.values) & set(other.values))
        return all(self.field.fmt(self.values[r]) == other.field.fmt(other.values[r]) for r in rs)


@dataclass
class Component:
    system: Eigensystem
    ambient: object
    basis: list                # rows in ambient coordinates over ``field``
    field: FiniteField

    @property
    def dim(self):
        return len(self.basis)


def _coerce_rows(B, E):
    return [[E.coerce(x) for x in r] for r in B]


def decompose_ops(space, ops: dict, sub=None, kappa=None, field_=None) -> list[Component]:
    """Simultaneous generalized eigenspaces of commuting operators.

    ``ops`` maps r to an OpMatrix on ``space``; ``sub`` is an invariant row
    space (ambient coordinates over F_p), defaulting to the whole space.
    The field is extended to the least F_{p^m} splitting every characteristic
    polynomial; the modulus is the deterministic one of ``FiniteField``.
    """
    F = space.ring
    p = F.characteristic
    B = sub if sub is not None else la.identity(space.dim, F)
    if not B:
        return []
    restricted = {r: restrict(op.matrix, B, F) for r, op in ops.items()}
    if field_ is None:
        m = splitting_degree(list(restricted.values()), p)
        E = F if (m == 1 and getattr(F, "m", 1) == 1) else FiniteField(p, m)
    else:
        E = field_
    comps = [({}, la.identity(len(B), E))]
    for r in sorted(restricted):
        A = _coerce_rows(restricted[r], E)
        nxt = []
        for vals, C in comps:
            Ac = restrict(A, C, E)
            cp = la.charpoly(Ac, E)
            for lam in _roots(cp, E):
                K = la.left_kernel(la.mat_pow(_shift(Ac, lam, E), len(C), E), E)
                if K:
                    v = dict(vals)
                    v[r] = lam
                    nxt.append((v, lift_rows(K, C, E)))
        if sum(len(C) for _, C in nxt) != len(B):
            raise Unsupported("characteristic polynomials did not split; enlarge the field")
        comps = nxt
    BE = _coerce_rows(B, E)
    out = []
    for vals, C in comps:
        sysm = Eigensystem(vals, E, kappa, space.level)
        out.append(Component(sysm, space, lift_rows(C, BE, E), E))
    out.sort(key=lambda c: c.system.key())
    return out


# ---------------------------------------------------------------- K(N)

@dataclass
class KSpace:
    """ker U_p inside a graded space, with its weight filtration."""

    graded: GradedSpace
    basis: list

    @property
    def dim(self):
        return len(self.basis)

    @property
    def level(self):
        return self.graded.level

    @property
    def p(self):
        return self.graded.p

    def slice_count(self, k):
        """Number of graded rows of weight <= k (a prefix of the coordinates)."""
        return sum(1 for w in self.graded.row_weight if w <= k)

    def slice_weights(self):
        return sorted(set(self.graded.row_weight))


def prefix_rows(B, n, F):
    """Rows of span(B) supported on the first n coordinates."""
    if not B:
        return []
    total = len(B[0])
    if n >= total:
        return la.row_basis(B, F)
    E = [[F.one if j == i else F.zero for j in range(total)] for i in range(n)]
    return la.span_intersection(B, E, F) if E else []


def k_space(level, p, kappa=0, kmax=24, prec=None, fixtures=None, primes=None, graded=None) -> KSpace:
    """K = ker U_p on the graded space of weights <= kmax.

    The precision is sized so that T_r is available for every r in
    ``primes`` (by default the primes up to DEFAULT_R prime to level * p).
    """
    if primes is None:
        primes = default_primes(level, p)
    gs = graded or graded_space(level, p, kappa, kmax,
                                prec or graded_prec(level, p, kappa, kmax, primes), fixtures)
    U = op_U(gs, p)
    K = la.left_kernel(U.matrix, gs.ring) if gs.dim else []
    return KSpace(gs, K)


def hecke_ops(gs, primes):
    return {r: op_T(gs, r) for r in primes}


def decompose(ks: KSpace, primes=None, field_=None) -> list[Component]:
    """Generalized eigencomponents of K under T_r, r in ``primes``."""
    gs = ks.graded
    R = primes if primes is not None else fit_primes(gs, default_primes(gs.level, gs.p))
    comps = decompose_ops(gs, hecke_ops(gs, R), sub=ks.basis, kappa=gs.kappa, field_=field_)
    for c in comps:
        c.system.origin = ""
    return comps


# ---------------------------------------------------------------- local algebras

@dataclass
class LocalHeckeAlgebra:
    system: Eigensystem
    generators: dict           # r -> matrix of T_r - value on the component
    basis: list                # flattened independent products (unital)
    nilpotency: dict
    commutative: bool

    @property
    def dim(self):
        return len(self.basis)


def component_ops(comp: Component, primes, graded=None):
    """Matrices of T_r - value_r restricted to a component (component coordinates)."""
    E = comp.field
    gs = graded or comp.ambient
    out = {}
    for r in primes:
        A = _coerce_rows(op_T(gs, r).matrix, E)
        Ar = restrict(A, comp.basis, E)
        out[r] = _shift(Ar, comp.system.values[r], E) if r in comp.system.values else Ar
    return out


def _flat(A):
    return [x for r in A for x in r]


def words_upto(gens: dict, degree, F, n):
    """All monomials of degree <= ``degree`` in commuting generators, as matrices.

    Returns a list of (exponent tuple, matrix).  Monomials are built by
    multiplying by generators in nondecreasing index order, so each appears
    once.
    """
    keys = sorted(gens)
    out = [((0,) * len(keys), la.identity(n, F))]
    frontier = [(out[0][0], out[0][1], 0)]
    for _ in range(degree):
        nxt = []
        for exp, M, start in frontier:
            for i in range(start, len(keys)):
                e = list(exp)
                e[i] += 1
                P = la.matmul(M, gens[keys[i]], F) if n else []
                nxt.append((tuple(e), P, i))
        out.extend((e, P) for e, P, _ in nxt)
        frontier = nxt
    return keys, out


def local_algebra(comp: Component, primes=None, degree=DEFAULT_DEGREE, graded=None) -> LocalHeckeAlgebra:
    E = comp.field
    R = primes if primes is not None else sorted(comp.system.values)
    gens = component_ops(comp, R, graded)
    n = comp.dim
    _, words = words_upto(gens, degree, E, n)
    flat = [_flat(M) for _, M in words]
    basis = la.row_basis(flat, E) if n else []
    nil = {r: nilpotency_index(A, E) for r, A in gens.items()}
    comm = all(la.mat_eq(la.matmul(A, B, E), la.matmul(B, A, E), E)
               for A in gens.values() for B in gens.values()) if n else True
    return LocalHeckeAlgebra(comp.system, gens, basis, nil, comm)


def annihilators_equal(gens1: dict, n1, gens2: dict, n2, degree, F) -> dict:
    """Same linear relations among monomials of degree <= ``degree`` on two modules.

    Relations are the kernel of word -> matrix; they agree iff stacking the
    two flattenings side by side does not raise the rank of either.
    """
    _, w1 = words_upto(gens1, degree, F, n1)
    _, w2 = words_upto(gens2, degree, F, n2)
    M1 = [_flat(M) for _, M in w1]
    M2 = [_flat(M) for _, M in w2]
    r1 = la.rank(M1, F) if n1 else 0
    r2 = la.rank(M2, F) if n2 else 0
    both = [a + b for a, b in zip(M1, M2)]
    rb = la.rank(both, F) if (n1 or n2) else 0
    return {"words": len(w1), "rank_1": r1, "rank_2": r2, "rank_joint": rb,
            "equal": r1 == r2 == rb}


# ---------------------------------------------------------------- level pairs

@dataclass
class LevelPair:
    """K(N l) and K(N) over one field, with matched eigencomponents."""

    N: int
    ell: int
    p: int
    kappa: int
    kmax: int
    primes: list
    up: KSpace
    low: KSpace
    field: FiniteField
    comps_up: list
    comps_low: list
    cache: dict = field(default_factory=dict)

    def low_for(self, comp):
        for c in self.comps_low:
            if c.system.matches(comp.system, self.primes):
                return c
        return None

    def op(self, name, build):
        if name not in self.cache:
            self.cache[name] = build()
        return self.cache[name]


def level_pair(N, ell, p, kappa=0, kmax=24, prec=None, primes=None, fixtures=None) -> LevelPair:
    R = primes if primes is not None else default_primes(N * ell, p, ell)
    M = N * ell
    pr = prec or graded_prec(M, p, kappa, kmax, tuple(R) + (ell,))
    gs_up = graded_space(M, p, kappa, kmax, pr, fixtures)
    gs_low = lower_space(gs_up, ell)
    up = k_space(M, p, kappa, kmax, graded=gs_up)
    low = k_space(N, p, kappa, kmax, graded=gs_low)
    mats = [restrict(op_T(gs_up, r).matrix, up.basis, gs_up.ring) for r in R] if up.dim else []
    m = splitting_degree(mats, p)
    E = FiniteField(p, m) if m > 1 else gs_up.ring
    cu = decompose(up, R, E)
    cl = decompose(low, R, E)
    for c in cu:
        c.system.origin = "old" if any(d.system.matches(c.system, R) for d in cl) else "new-only"
    return LevelPair(N, ell, p, gs_up.kappa, kmax, list(R), up, low, E, cu, cl)


def _E(rows, F):
    return _coerce_rows(rows, F)


def _image(rows, A, F):
    return [la.vecmat(r, A, F) for r in rows]


def _kernel_in(B, A, F):
    """Rows of span(B) killed by A (ambient coordinates)."""
    if not B:
        return []
    K = la.left_kernel(la.matmul(B, A, F), F) if A and A[0] else la.identity(len(B), F)
    return lift_rows(K, B, F)


def _stable_all(rows, ops, F):
    return all(is_stable(A, rows, F) for A in ops)


def _contains(B, C, F):
    return la.span_contains(B, C, F) if C else True


@dataclass
class Filtration:
    style: str
    system: Eigensystem
    chain: list                 # list of (name, rows) from smallest to largest
    slices: list                # per weight k: dims of every member at <= k
    nested: bool
    stable: bool
    data: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.nested and self.stable and all(v for k, v in self.data.items()
                                                   if k.startswith("check_"))


def _pair_ops(pair: LevelPair):
    F = pair.field
    gu, gl = pair.up.graded, pair.low.graded
    T = pair.op("T_up", lambda: {r: _E(op_T(gu, r).matrix, F) for r in pair.primes})
    Tr = pair.op("Tr", lambda: _E(op_trace(gu, pair.ell, gl).matrix, F))
    TrW = pair.op("TrW", lambda: _E(op_trace_W(gu, pair.ell, gl).matrix, F))
    Em = pair.op("E", lambda: _E(op_embed(gl, gu).matrix, F))
    Tl = pair.op("Tl_low", lambda: _E(op_T(gl, pair.ell).matrix, F))
    return T, Tr, TrW, Em, Tl


def _pieces(pair: LevelPair, comp: Component):
    F = pair.field
    T, Tr, TrW, Em, Tl = _pair_ops(pair)
    Kt = comp.basis
    lowc = pair.low_for(comp)
    Klow = lowc.basis if lowc else []
    kerTr = _kernel_in(Kt, Tr, F)
    both = [a + b for a, b in zip(Tr, TrW)] if Tr and Tr[0] else []
    new = _kernel_in(Kt, both, F) if both else la.row_basis(Kt, F)
    return Kt, Klow, kerTr, new


def _slice(rows, pair, k, level="up"):
    ks = pair.up if level == "up" else pair.low
    n = ks.slice_count(k)
    return prefix_rows(rows, n, pair.field)


def standard_filtration(pair: LevelPair, comp: Component) -> Filtration:
    """0 ⊂ K_t^new ⊂ (ker Tr)_t ⊂ K(N l)_t with the per-weight surjectivity certificate."""
    F = pair.field
    T, Tr, TrW, Em, Tl = _pair_ops(pair)
    Kt, Klow, kerTr, new = _pieces(pair, comp)
    chain = [("new", new), ("kerTr", kerTr), ("K", la.row_basis(Kt, F))]
    nested = _contains(kerTr, new, F) and _contains(Kt, kerTr, F)
    stable = all(_stable_all(rows, T.values(), F) for _, rows in chain)
    slices, surj = [], {}
    for k in pair.up.slice_weights():
        Kk, Tk, Nk = (_slice(x, pair, k) for x in (Kt, kerTr, new))
        Lk = _slice(Klow, pair, k, "low")
        im_tr = la.row_basis(_image(Kk, Tr, F), F) if Kk and Tr and Tr[0] else []
        im_trw = la.row_basis(_image(Tk, TrW, F), F) if Tk and TrW and TrW[0] else []
        s1 = la.span_equal(im_tr, Lk, F)
        s2 = la.span_equal(im_trw, Lk, F)
        surj[k] = s1 and s2
        slices.append({"k": k, "new": len(Nk), "kerTr": len(Tk), "K": len(Kk), "K_low": len(Lk),
                       "Tr_onto": s1, "TrW_onto": s2})
    data = {"surjective_all": all(surj.values()), "origin": comp.system.origin}
    # Tr on K and Tr W on ker Tr commute with every T_r
    Tlow = {r: _E(op_T(pair.low.graded, r).matrix, F) for r in pair.primes}
    eq1 = all(la.mat_eq(la.matmul(la.matmul(Kt, T[r], F), Tr, F),
                        la.matmul(la.matmul(Kt, Tr, F), Tlow[r], F), F) for r in pair.primes) if Kt else True
    eq2 = all(la.mat_eq(la.matmul(la.matmul(kerTr, T[r], F), TrW, F),
                        la.matmul(la.matmul(kerTr, TrW, F), Tlow[r], F), F)
              for r in pair.primes) if kerTr else True
    data.update({"equivariant_Tr": eq1, "equivariant_TrW": eq2,
                 "dim_quotient": len(Kt) - len(kerTr), "dim_middle": len(kerTr) - len(new),
                 "dim_low": len(Klow)})
    if data["surjective_all"]:
        # K/kerTr ≅ K(N)_t via Tr, kerTr/new ≅ K(N)_t via Tr W
        data.update({"check_iso_Tr": eq1 and data["dim_quotient"] == len(Klow),
                     "check_iso_TrW": eq2 and data["dim_middle"] == len(Klow)})
    return Filtration("Standard", comp.system, chain, slices, nested, stable, data)


def quotient_annihilators(pair: LevelPair, comp: Component, degree=DEFAULT_DEGREE) -> dict:
    """Relations among words in T_r - t(r) on K(N l)_t/(ker Tr)_t versus on K(N)_t.

    Tr embeds the quotient equivariantly in K(N)_t, so every relation on
    K(N)_t holds on the quotient; the reverse inclusion is the zero-divisor
    fallback and is reported, along with equality.
    """
    F = pair.field
    T, Tr, TrW, Em, Tl = _pair_ops(pair)
    Kt, Klow, kerTr, new = _pieces(pair, comp)
    lowc = pair.low_for(comp)
    vals = comp.system.values
    comp_rows, qmats = _quotient_ops(kerTr, la.row_basis(Kt, F), T, F) if Kt else ([], {})
    gq = {r: _shift(qmats[r], vals[r], F) for r in pair.primes} if comp_rows else {r: [] for r in pair.primes}
    gl = component_ops(lowc, pair.primes) if lowc else {r: [] for r in pair.primes}
    gl = {r: _coerce_rows(A, F) for r, A in gl.items()}
    res = annihilators_equal(gq, len(comp_rows), gl, lowc.dim if lowc else 0, degree, F)
    return {"system": comp.system.fmt(), "dim_quotient": len(comp_rows),
            "dim_low": lowc.dim if lowc else 0,
            "low_in_quotient": res["rank_joint"] == res["rank_2"],
            "equal": res["equal"], "ranks": (res["rank_1"], res["rank_2"], res["rank_joint"]),
            "words": res["words"]}


def monsky_filtration(pair: LevelPair, comp: Component) -> Filtration:
    """0 ⊂ K(N)_t ⊂ (ker Tr)_t ⊂ K(N l)_t, available when l = -1 mod p."""
    if (pair.ell + 1) % pair.p:
        raise BadCongruence(f"{pair.ell} is not -1 mod {pair.p}")
    F = pair.field
    T, Tr, TrW, Em, Tl = _pair_ops(pair)
    Kt, Klow, kerTr, new = _pieces(pair, comp)
    EK = la.row_basis(_image(Klow, Em, F), F) if Klow else []
    chain = [("K_low", EK), ("kerTr", kerTr), ("K", la.row_basis(Kt, F))]
    nested = _contains(kerTr, EK, F) and _contains(Kt, kerTr, F)
    stable = all(_stable_all(rows, T.values(), F) for _, rows in chain)
    slices = []
    for k in pair.up.slice_weights():
        slices.append({"k": k, "K_low": len(_slice(EK, pair, k)), "kerTr": len(_slice(kerTr, pair, k)),
                       "K": len(_slice(Kt, pair, k))})
    return Filtration("Monsky", comp.system, chain, slices, nested, stable,
                      {"origin": comp.system.origin})


def _quotient_ops(sub, big, ops, F):
    """Matrices of ``ops`` on big/sub, in a basis of complement rows.  Returns (comp rows, mats)."""
    ech = la.Echelon(sub, F, len(big[0])) if sub else None
    # complement: rows of big not in the span of sub + earlier picks
    comp = []
    acc = list(sub)
    for r in la.row_basis(big, F):
        if not la.span_contains(acc, [r], F) if acc else True:
            comp.append(r)
            acc.append(r)
    full = la.Echelon(list(sub) + comp, F, len(big[0]))
    ns = len(sub)
    mats = {}
    for name, A in ops.items():
        M = []
        for r in comp:
            c = full.coords(la.vecmat(r, A, F))
            if c is None:
                raise NotStable(0, "quotient is not operator stable")
            M.append(c[ns:])
        mats[name] = M
    return comp, mats


def _quotient_coords(sub, comp, v, F):
    full = la.Echelon(list(sub) + comp, F, len(v))
    c = full.coords(v)
    return None if c is None else c[len(sub):]


def monskyfiltruth_check(pair: LevelPair, comp: Component, degree=DEFAULT_DEGREE) -> dict:
    """The sequence 0 -> ker T_l|K(N)_t -> K_t^new -> (ker Tr)_t / K(N)_t -> 0 at truncation.

    A class x of ker Tr lifts to K^new + K(N) exactly when Tr W_l x lies in
    T_l K(N), so on the slice of weights <= k the sequence continues as

        0 -> ker T_l -> K^new -> Monsky -> Tr W_l(ker Tr) / T_l K(N) -> 0

    with every term cut at weight k.  The short sequence is
    the case where the last term vanishes, which needs T_l to reach the
    slice from inside it; that is checked and reported per slice.

    (i) the four-term sequence is exact in dimensions on every slice, with
    the left map injective and landing in K(N) exactly along ker T_l;
    (ii) the quotient map K^new -> Monsky commutes with every T_r;
    (iii) relations among monomials of degree <= ``degree`` in T_r - t(r):
    those on the Monsky piece are relations on K^new (this direction holds
    on any truncation, because W_l preserves K^new and K(N) ∩ W_l K(N) = 0),
    and those on K^new are relations on the part of the Monsky piece that
    K^new reaches inside the truncation.  Equality of the two relation
    spaces on the same truncation is reported separately.
    """
    if (pair.ell + 1) % pair.p:
        raise BadCongruence(f"{pair.ell} is not -1 mod {pair.p}")
    F = pair.field
    T, Tr, TrW, Em, Tl = _pair_ops(pair)
    Kt, Klow, kerTr, new = _pieces(pair, comp)
    EK = la.row_basis(_image(Klow, Em, F), F) if Klow else []
    kerTl = _kernel_in(Klow, Tl, F)
    out = {"system": comp.system.fmt(), "dim_new": len(new), "dim_kerTr": len(kerTr),
           "dim_K_low": len(EK), "dim_kerTl": len(kerTl), "slices": []}
    if not new and not kerTr:
        out.update({"exact": True, "short_exact_top": True, "equivariant": True,
                    "annihilators": True, "annihilators_same_truncation": True,
                    "passed": True, "vacuous": True})
        return out
    exact_all = True
    for k in pair.up.slice_weights():
        Nk = _slice(new, pair, k)
        Tk = _slice(kerTr, pair, k)
        Ek = _slice(EK, pair, k)
        Kl = _slice(Klow, pair, k, "low")
        Lk = _slice(kerTl, pair, k, "low")
        mon = len(la.row_basis(Tk + Ek, F)) - len(Ek) if (Tk or Ek) else 0
        left = len(la.span_intersection(Nk, Ek, F)) == len(Lk) if Nk else not Lk
        im_trw = la.row_basis(_image(Tk, TrW, F), F) if Tk else []
        im_tl = la.row_basis(_image(Kl, Tl, F), F) if Kl else []
        nested = _contains(im_trw, im_tl, F) if im_tl else True
        coker = len(im_trw) - len(im_tl)
        ok = left and nested and len(Lk) - len(Nk) + mon - coker == 0
        exact_all &= ok
        out["slices"].append({"k": k, "kerTl": len(Lk), "new": len(Nk), "monsky": mon,
                              "coker": coker, "short_exact": ok and coker == 0, "exact": ok})
    comp_rows, qmats = _quotient_ops(EK, kerTr, T, F)
    newmats = {r: restrict(T[r], new, F) for r in pair.primes} if new else {}
    phi = [_quotient_coords(EK, comp_rows, v, F) for v in new]
    equiv = True
    if new and comp_rows:
        for r in pair.primes:
            lhs = la.matmul(newmats[r], phi, F)
            rhs = la.matmul(phi, qmats[r], F)
            equiv &= la.mat_eq(lhs, rhs, F)
    vals = comp.system.values
    g_new = {r: _shift(newmats[r], vals[r], F) for r in pair.primes} if new else {r: [] for r in pair.primes}
    g_mon = {r: _shift(qmats[r], vals[r], F) for r in pair.primes} if comp_rows else {r: [] for r in pair.primes}
    same = annihilators_equal(g_new, len(new), g_mon, len(comp_rows), degree, F)
    # Monsky relations are relations on K^new: joint rank equals the Monsky rank
    inc_mon_new = same["rank_joint"] == same["rank_2"]
    # the part of the Monsky piece reached by K^new: largest slice k* inside phi(K^new)
    reach = la.row_basis(phi, F) if phi and comp_rows else []
    kstar, Y = None, []
    for k in pair.up.slice_weights():
        Tk = _slice(kerTr, pair, k)
        yk = [c for c in (_quotient_coords(EK, comp_rows, v, F) for v in Tk)] if comp_rows else []
        yk = la.row_basis(yk, F) if yk and any(any(not F.is_zero(x) for x in r) for r in yk) else []
        if _contains(reach, yk, F) if yk else True:
            kstar, Y = k, yk
        else:
            break
    if Y:
        g_y = {r: restrict(g_mon[r], Y, F) for r in pair.primes}
        sub = annihilators_equal(g_new, len(new), g_y, len(Y), degree, F)
        inc_new_y = sub["rank_joint"] == sub["rank_1"]
    else:
        inc_new_y = True
    out.update({"exact": exact_all,
                "short_exact_top": out["slices"][-1]["short_exact"],
                "equivariant": equiv,
                "annihilators": inc_mon_new and inc_new_y,
                "ann_monsky_in_new": inc_mon_new,
                "ann_new_in_reached": inc_new_y,
                "reached_slice": kstar, "dim_reached": len(Y),
                "annihilators_same_truncation": same["equal"],
                "annihilator_ranks": (same["rank_1"], same["rank_2"], same["rank_joint"]),
                "words": same["words"], "dim_monsky": len(comp_rows), "vacuous": False})
    out["passed"] = exact_all and equiv and out["annihilators"]
    return out


# ---------------------------------------------------------------- Surj and nzdiv

def socle_layers(gens: dict, n, F, depth):
    """V_0 ⊆ V_1 ⊆ ... with V_j = {f : every product of j+1 generators kills f}.

    Rows are component coordinates.  Stops early once the chain stabilizes.
    """
    layers = []
    prev = []
    for j in range(depth + 1):
        # f in V_j iff g f in V_{j-1} for every generator g (V_{-1} = 0)
        perp = la.transpose(la.right_kernel(prev, F)) if prev else None
        blocks = []
        for A in gens.values():
            if perp is None:
                blocks.append([list(r) for r in A])
            elif perp and perp[0]:
                blocks.append(la.matmul(A, perp, F))
            else:
                blocks.append([[] for _ in range(n)])
        stacked = [[x for b in blocks for x in b[i]] for i in range(n)]
        V = la.left_kernel(stacked, F) if gens and n else la.identity(n, F)
        layers.append(V)
        if len(V) == len(prev) and j:
            break
        prev = V
    return layers


def _power_spans(gens: dict, F, n, top):
    """Flattened spans of m^0, m^1, ..., m^top for the ideal generated by ``gens``.

    m^j is spanned by the products of at least j generators; products of
    more than ``top`` generators are assumed to vanish (true on V_{top-1}).
    """
    cur = [_flat(la.identity(n, F))]
    exact = [cur]
    for _ in range(top):
        nxt = [_flat(la.matmul([b[i * n:(i + 1) * n] for i in range(n)], A, F))
               for b in cur for A in gens.values()]
        cur = la.row_basis(nxt, F) if nxt else []
        exact.append(cur)
    spans = [None] * (top + 1)
    acc = []
    for j in range(top, -1, -1):
        acc = la.row_basis(acc + exact[j], F) if (acc or exact[j]) else []
        spans[j] = acc
    return spans


def surj_nzdiv(ks: KSpace, comp: Component, T, degree=DEFAULT_DEGREE, primes=None) -> dict:
    """Truncation-honest readings of "T is surjective on K_t" and "T is not a zero divisor".

    ``T`` is a matrix on the component (component coordinates).

    surjPerWeight[k] asks whether the part of K_t in weights <= k lies in
    T of the whole truncation.  The top slice cannot be reached by a
    topologically nilpotent T from inside the truncation; it is reported
    as None and left out of the summary.

    The algebra-side readings use the layers V_j = K_t[m^{j+1}]: the Hecke
    algebra acts on V_d through A/m^{d+1}.  The last layer that still grows
    inside the truncation is usually cut short by it, so d is the requested
    degree capped one below that layer:

    With e the order of T (the largest e with T in m^e on V_d):

    * nzdiv: a T = 0 on V_d forces a in m^{d+1-e} (a ranging over the
      algebra generated on V_d), i.e. A/m^{d+1-e} -> A/m^{d+1}, a -> aT,
      is injective;
    * surj (= surjLayers): T V_d contains V_{d-e}, the dual statement.

    T = 0 fails both.  Both are None when the truncation leaves no usable
    layer (d < 1) or T vanishes on V_d without vanishing on K_t.  No test inside the truncation can tell whether
    a layer is complete, so ``degree`` should be chosen against kmax.
    """
    F = comp.field
    R = primes if primes is not None else sorted(comp.system.values)
    n = comp.dim
    ws = ks.slice_weights()
    full = la.Echelon(comp.basis, F) if comp.basis else None
    img = [la.vecmat(r, T, F) for r in la.identity(n, F)] if n else []
    surj = {}
    for i, k in enumerate(ws):
        if i + 1 == len(ws):
            surj[k] = None
            continue
        rows = prefix_rows(comp.basis, ks.slice_count(k), F)
        cur = [full.coords(r) for r in rows] if rows else []
        surj[k] = la.span_contains(img, cur, F) if cur else True
    gens = component_ops(comp, R)
    layers = socle_layers(gens, n, F, degree + 1)
    grow = [j for j in range(1, len(layers)) if len(layers[j]) > len(layers[j - 1])]
    d = min(degree, grow[-1] - 1) if grow else 0
    V = layers[d] if layers else []
    nz = sl = None
    algebra_dim = 0
    if V and d >= 1:
        gv = {r: restrict(A, V, F) for r, A in gens.items()}
        Tv = restrict(T, V, F)
        m = len(V)
        spans = _power_spans(gv, F, m, d + 1)
        A_basis = la.row_basis([b for sp in spans for b in sp], F)
        algebra_dim = len(A_basis)
        mats = [[b[i * m:(i + 1) * m] for i in range(m)] for b in A_basis]
        prods = [_flat(la.matmul(M, Tv, F)) for M in mats]
        rel = la.left_kernel(prods, F) if prods else []
        killed = [[sum((c[j] * A_basis[j][t] for j in range(len(A_basis))), F.zero)
                   for t in range(m * m)] for c in rel]
        tflat = _flat(Tv)
        order = max([e for e in range(d + 2) if _contains(spans[e], [tflat], F)])
        if order > d:
            # invisible on V_d: decided only when T vanishes on the whole truncation
            nz = sl = (False if la.is_zero_matrix(T, F) else None)
        else:
            nz = _contains(spans[d + 1 - order], killed, F) if killed else True
            sl = _contains(_image(V, T, F), layers[d - order], F)
    else:
        order = None
    return {"surjPerWeight": surj, "surj": sl, "surjLayers": sl, "nzdiv": nz, "depth": d,
            "order": order,
            "layer_dims": [len(L) for L in layers], "algebra_dim": algebra_dim}


# ---------------------------------------------------------------- duality basis

@dataclass
class DualBasis:
    degree: int
    x: int
    y: int
    forms: dict                # (a, b) -> component coordinates
    ambient_rows: dict         # (a, b) -> graded coordinates
    pairing_rank: int
    shifts_ok: bool
    space_dim: int


def duality_basis(ks: KSpace, comp: Component, degree=6, x=3, y=5) -> DualBasis:
    """Forms m(a, b), a + b <= degree, dual to x^a y^b under <T, f> = a_1(T f).

    Works inside V = {f in K_t : every monomial of degree degree+1 kills f}.
    The pairing between monomials of degree <= ``degree`` and V must be a
    perfect pairing; otherwise PairingDegenerate is raised.
    """
    F = comp.field
    n = comp.dim
    gens = component_ops(comp, [x, y])
    X, Y = gens[x], gens[y]
    _, words = words_upto({0: X, 1: Y}, degree + 1, F, n)
    top = [M for e, M in words if sum(e) == degree + 1]
    stacked = [[] for _ in range(n)]
    for M in top:
        for i in range(n):
            stacked[i].extend(M[i])
    V = la.left_kernel(stacked, F) if top else la.identity(n, F)
    monos = [(e, M) for e, M in words if sum(e) <= degree]
    gs = ks.graded
    basisE = comp.basis

    def a1(c):
        amb = la.vecmat(c, basisE, F)
        f = gs.form([x_ for x_ in amb]) if F.m == 1 else None
        if f is None:
            raise Unsupported("duality basis over extension fields is not implemented")
        return F.coerce(f[1])

    P = []
    for e, M in monos:
        P.append([a1(la.vecmat(v, M, F)) for v in V])
    if len(monos) != len(V) or la.rank(P, F) != len(V):
        raise PairingDegenerate(f"pairing on {len(monos)} monomials and {len(V)} forms is not perfect")
    # m = V^T-combinations with P * C = I  ->  C = P^{-1}
    Pinv = _inverse(P, F)
    forms = {}
    for j, (e, _) in enumerate(monos):
        coeff = [Pinv[i][j] for i in range(len(V))]
        forms[e] = la.vecmat(coeff, V, F) if V else []
    ok = True
    for (a, b), m in forms.items():
        xm = la.vecmat(m, X, F)
        ym = la.vecmat(m, Y, F)
        want_x = forms[(a - 1, b)] if a else [F.zero] * n
        want_y = forms[(a, b - 1)] if b else [F.zero] * n
        ok &= all(F.eq(u, v) for u, v in zip(xm, want_x)) and all(F.eq(u, v) for u, v in zip(ym, want_y))
    amb = {e: la.vecmat(m, basisE, F) for e, m in forms.items()}
    return DualBasis(degree, x, y, forms, amb, la.rank(P, F), ok, len(V))


def _inverse(P, F):
    n = len(P)
    aug = [list(r) + [F.one if i == j else F.zero for j in range(n)] for i, r in enumerate(P)]
    R, piv = la.rref_rows(aug, F)
    if piv[:n] != list(range(n)):
        raise PairingDegenerate("pairing matrix is singular")
    return [r[n:] for r in R[:n]]


def pairing(ks: KSpace, comp: Component, word, coords) -> object:
    """<T, f> = a_1(T f) for a component matrix T and component coordinates f."""
    F = comp.field
    amb = la.vecmat(la.vecmat(coords, word, F), comp.basis, F)
    return F.coerce(ks.graded.form(amb)[1])
