"""l-old and l-new subspaces, their intersection, and the level-raising cases.

A form of level N*l is l-new when S = l^2 U_l^2 - wt_l kills it, or
equivalently when both Tr and Tr W_l do.  The first description is only
correct for cuspforms; on spaces with Eisenstein rows the trace
description is the definition that is used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from . import linalg as la
from .errors import NotApplicable, Unsupported
from .fixtures import weil_strict
from .operators import (
    OpMatrix,
    lower_space,
    op_embed,
    op_S,
    op_T,
    op_trace,
    op_trace_W,
    op_W,
    _check_ell,
)
from .rings import QQ, ZZ, FiniteField, Integers, Rationals, ZmodPB
from .spaces import GradedSpace, Space, SpaceParams, auto_prec, build_space

TAGS = ("ellOld", "ellNewU", "ellNewTr", "kerTr", "Intersection", "VplusAlpha", "VminusAlpha")


@dataclass
class Subspace:
    """Row space inside an ambient space, given by coordinate rows."""

    ambient: object
    basis: list
    tag: str
    ring: object = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise Unsupported(f"unknown subspace tag {self.tag}")
        if self.ring is None:
            self.ring = self.ambient.ring

    @property
    def dim(self):
        return len(self.basis)

    def field(self):
        return _work_field(self.ring)

    def rows(self, F=None):
        F = F or self.field()
        return [[_to(F, x) for x in r] for r in self.basis]

    def equals(self, other) -> bool:
        F = self.field()
        return la.span_equal(self.rows(F), other.rows(F), F)

    def contains(self, other) -> bool:
        F = self.field()
        return la.span_contains(self.rows(F), other.rows(F), F)

    def forms(self):
        return [self.ambient.form(c) for c in self.basis]


def _work_field(R):
    """Field in which kernels are taken: QQ for ZZ and QQ, else the ring itself."""
    if isinstance(R, (Integers, Rationals)):
        return QQ
    if isinstance(R, ZmodPB) and R.b > 1:
        raise Unsupported("kernels over Z/p^b with b > 1 are not computed; use ZZ or a field")
    return R


def _to(F, x):
    if F is QQ:
        return Fraction(x)
    return x


def _qq_twin(space):
    """The QQ space on the same saturated basis (coordinates agree)."""
    if isinstance(space, Space) and isinstance(space.ring, Integers):
        P = space.params
        return build_space(SpaceParams(P.level, P.weight, QQ, P.prec, P.cuspidal), space.fixtures)
    return space


def _mat(op: OpMatrix, F):
    return [[_to(F, x) for x in r] for r in op.matrix]


def _finish(space, rows, F):
    """Kernel rows over F to ambient coordinates; over ZZ, saturate the QQ rows."""
    if isinstance(space.ring, Integers):
        if not rows:
            return []
        H, _ = la.saturate([_clear(r) for r in rows])
        return [list(h) for h in H]
    return rows


def _clear(r):
    d = la.denominators_lcm([r])
    return [int(Fraction(x) * d) for x in r]


def _hstack(A, B, n):
    if not A and not B:
        return [[] for _ in range(n)]
    return [list(a) + list(b) for a, b in zip(A or [[]] * n, B or [[]] * n)]


# ---------------------------------------------------------------- old and new

def old_subspace(space, ell: int) -> Subspace:
    """Level-N forms at level N*l together with their W_l images."""
    _check_ell(space, ell)
    low = lower_space(space, ell)
    E = op_embed(low, space)
    EW = E.then(op_W(space, ell))
    F = _work_field(space.ring)
    rows = _mat(E, F) + _mat(EW, F)
    if la.rank(rows, F) != len(rows):
        raise Unsupported("level-N forms and their W_l images are not independent here")
    basis = [list(r) for r in E.matrix] + [list(r) for r in EW.matrix]
    return Subspace(space, basis, "ellOld")


def new_subspace_U(space, ell: int) -> Subspace:
    """ker S.  Only meaningful on cuspidal spaces."""
    if not _is_cuspidal(space):
        raise Unsupported("the U_l description of newness holds for cuspforms only")
    F = _work_field(space.ring)
    S = op_S(_qq_twin(space), ell)
    K = la.left_kernel(_mat(S, F), F) if space.dim else []
    return Subspace(space, _finish(space, K, F), "ellNewU")


def new_subspace_Tr(space, ell: int) -> Subspace:
    """ker Tr intersected with ker Tr W_l."""
    F = _work_field(space.ring)
    Tr = op_trace(_qq_twin(space), ell)
    TrW = op_trace_W(_qq_twin(space), ell, Tr.codomain)
    M = _hstack(_mat(Tr, F), _mat(TrW, F), space.dim)
    if not space.dim:
        return Subspace(space, [], "ellNewTr")
    if not M[0]:
        K = la.identity(space.dim, F)
    else:
        K = la.left_kernel(M, F)
    return Subspace(space, _finish(space, K, F), "ellNewTr")


def kernel_trace(space, ell: int) -> Subspace:
    F = _work_field(space.ring)
    Tr = op_trace(_qq_twin(space), ell)
    if not space.dim:
        return Subspace(space, [], "kerTr")
    K = la.identity(space.dim, F) if not Tr.matrix[0] else la.left_kernel(_mat(Tr, F), F)
    return Subspace(space, _finish(space, K, F), "kerTr")


def _is_cuspidal(space):
    if isinstance(space, GradedSpace):
        return space.cuspidal
    return space.params.cuspidal


def _witness(A: Subspace, B: Subspace):
    """A basis row of A that is not in B (as coordinates), or None."""
    F = A.field()
    Bb = B.rows(F)
    ech = la.Echelon(Bb, F, A.ambient.dim) if Bb else None
    for r in A.rows(F):
        if ech is None or not ech.contains(r):
            return r
    return None


def check_newformthm(space, ell: int) -> dict:
    """Compare ker S with ker Tr and ker Tr W_l.  Never raises on a mismatch."""
    U = new_subspace_U(space, ell)
    T = new_subspace_Tr(space, ell)
    equal = U.equals(T)
    rep = {"dim_U": U.dim, "dim_Tr": T.dim, "equal": equal, "witness": None}
    if not equal:
        w = _witness(U, T) or _witness(T, U)
        rep["witness"] = [str(x) for x in w] if w is not None else None
    rep["passed"] = equal
    return rep


# ---------------------------------------------------------------- keyker

def _as_coords(space, f):
    if hasattr(f, "coeffs"):
        c = space.coords(f)
        if c is None:
            raise Unsupported("form is not in the level-N space")
        return c
    return list(f)


def keyker_check(upper, f, g, ell: int, normalization: str = "W") -> dict:
    """Evaluate the three descriptions of f + W_l g lying in ker S.

    ``f`` and ``g`` are level-N forms (q-expansions or coordinates in the
    level-N companion of ``upper``).  With ``normalization="w"`` the form
    tested is f + w_l g, that is g is rescaled by l^{-k/2} first.

    The three conditions are: S h = 0; Tr h = Tr W_l h = 0; and
    l T_l f = -(l+1) wt_l g together with l T_l g = -(l+1) f.  On cuspidal
    spaces they agree; on spaces with Eisenstein rows the first can hold
    without the others, and ``agree`` is then reported but not asserted.
    """
    if isinstance(upper, GradedSpace):
        raise Unsupported("keyker_check runs on a fixed weight")
    R = upper.ring
    k = upper.weight
    low = lower_space(upper, ell)
    fc = _as_coords(low, f)
    gc = _as_coords(low, g)
    if normalization == "w":
        s = R.coerce(Fraction(1, ell ** (k // 2))) if not isinstance(R, Rationals) else Fraction(1, ell ** (k // 2))
        gc = [R.mul(s, x) for x in gc]
    elif normalization != "W":
        raise Unsupported("normalization is 'W' or 'w'")
    E = op_embed(low, upper)
    EW = E.then(op_W(upper, ell))
    h = [R.add(x, y) for x, y in zip(E.apply(fc), EW.apply(gc))] if upper.dim else []
    zero = lambda v: all(R.is_zero(x) for x in v)
    in_S = zero(op_S(upper, ell).apply(h)) if upper.dim else True
    Tr = op_trace(upper, ell, low)
    TrW = op_trace_W(upper, ell, low)
    in_Tr = zero(Tr.apply(h)) and zero(TrW.apply(h)) if upper.dim else True
    T = op_T(low, ell)
    c = R.coerce(-(ell + 1)) if not isinstance(R, Rationals) else Fraction(-(ell + 1))
    wt = R.coerce(ell ** k) if not isinstance(R, Rationals) else Fraction(ell ** k)
    lhs1 = [R.mul(R.coerce(ell), x) for x in T.apply(fc)]
    rhs1 = [R.mul(R.mul(c, wt), x) for x in gc]
    lhs2 = [R.mul(R.coerce(ell), x) for x in T.apply(gc)]
    rhs2 = [R.mul(c, x) for x in fc]
    lam = all(R.eq(a, b) for a, b in zip(lhs1, rhs1)) and all(R.eq(a, b) for a, b in zip(lhs2, rhs2))
    cusp = upper.params.cuspidal
    agree = in_S == in_Tr == lam
    return {"inKerS": in_S, "inKerTrTr": in_Tr, "lambdaConds": lam, "agree": agree,
            "cuspidal": cusp, "passed": agree if cusp else True}


# ---------------------------------------------------------------- lambda and epsilon

def lambda_k(ell: int, k: int, p: int) -> int:
    """Image in F_p of -(l+1) l^{(k-2)/2}."""
    if ell % p == 0:
        raise Unsupported("p divides l")
    if k % 2:
        raise Unsupported("weight must be even")
    return -(ell + 1) * pow(ell, (k - 2) // 2, p) % p


def epsilon(value, ell: int, k: int, p: int) -> int:
    """The sign eps with t(Frob_l) = eps * lambda_k; needs lambda_k != 0."""
    lam = lambda_k(ell, k, p)
    v = int(value) % p
    if lam == 0:
        raise NotApplicable("lambda_k is zero; no sign is attached")
    if v == lam:
        return 1
    if v == (-lam) % p:
        return -1
    raise NotApplicable(f"t(Frob_{ell}) = {v} is not +-{lam} mod {p}")


def lambda_set_stable(ell: int, kappa: int, p: int, kmax: int) -> bool:
    """The set {+-lambda_k} is the same for every k = kappa mod p-1 up to kmax."""
    ks = [k for k in range(2, kmax + 1, 2) if p == 2 or (k - kappa) % (p - 1) == 0]
    sets = {frozenset({lambda_k(ell, k, p), -lambda_k(ell, k, p) % p}) for k in ks}
    return len(sets) <= 1


@dataclass
class LevelRaisingData:
    ell: int
    p: int
    kappa: int
    lam: int
    satisfied: dict = field(default_factory=dict)
    eps: dict = field(default_factory=dict)


# ---------------------------------------------------------------- intersections

def _field_rows(rows, E):
    return [[E.coerce(x) for x in r] for r in rows]


def _ops_for(space, primes):
    return {r: op_T(space, r) for r in primes}


def _t_ell(lower, comp_rows, ell, E):
    """The unique T_l eigenvalue on a component of the level-N space."""
    from .heckealg import restrict
    T = _field_rows(op_T(lower, ell).matrix, E)
    A = restrict(T, comp_rows, E)
    roots = [x for x in E.elements() if la.left_kernel(_shift(A, x, E), E)]
    if len(roots) != 1:
        raise Unsupported("T_l is not scalar on the level-N component mod its radical; enlarge R")
    return roots[0]


def _shift(A, lam, E):
    return [[E.sub(a, lam) if i == j else a for j, a in enumerate(r)] for i, r in enumerate(A)]


def _closed_rows(upper, lower, ell, kerrows, sign_w, E):
    """Embedded rows f + sign_w * w_l f for f in ``kerrows`` (level-N coordinates)."""
    k = upper.weight
    Em = _field_rows(op_embed(lower, upper).matrix, E)
    EW = _field_rows(op_embed(lower, upper).then(op_W(upper, ell)).matrix, E)
    s = E.mul(E.coerce(sign_w), E.coerce(Fraction(1, ell ** (k // 2))))
    out = []
    for f in kerrows:
        a = la.vecmat(f, Em, E)
        b = la.vecmat(f, EW, E)
        out.append([E.add(x, E.mul(s, y)) for x, y in zip(a, b)])
    return out


def _zero_lambda_rows(upper, lower, ell, kerrows, E):
    Em = _field_rows(op_embed(lower, upper).matrix, E)
    EW = _field_rows(op_embed(lower, upper).then(op_W(upper, ell)).matrix, E)
    return [la.vecmat(f, Em, E) for f in kerrows] + [la.vecmat(f, EW, E) for f in kerrows]


def _ker_shift(lower, ell, alpha, E, sub=None):
    T = _field_rows(op_T(lower, ell).matrix, E)
    if sub is None:
        return la.left_kernel(_shift(T, alpha, E), E) if T else []
    from .heckealg import restrict, lift_rows
    A = restrict(T, sub, E)
    return lift_rows(la.left_kernel(_shift(A, alpha, E), E), sub, E)


@dataclass
class IntersectionReport:
    subspace: list             # intersection rows (ambient coordinates over ``field``)
    field: object
    lam: int
    case: str
    closed: list | None        # closed-form rows, when a closed form applies
    matches: bool | None
    components: list = field(default_factory=list)

    @property
    def dim(self):
        return len(self.subspace)

    @property
    def passed(self):
        return self.matches is not False and all(c["passed"] for c in self.components)


def intersect_old_new(space, ell: int, primes=None, by_component: bool = True) -> IntersectionReport:
    """old ∩ new over a finite field, cross-checked against the closed forms.

    Over the whole space the closed form is E(ker T_l) + E W_l(ker T_l) when
    lambda = 0, and V+_lambda + V-_(-lambda) otherwise, where
    V+-_alpha = {f +- w_l f : T_l f = alpha f}.  With ``by_component`` the
    same comparison is made on every generalized eigencomponent, using the
    sign eps read off from t(Frob_l) on the level-N part.
    """
    from .heckealg import decompose_ops, default_primes, fit_primes, splitting_degree

    F = space.ring
    if not isinstance(F, FiniteField):
        raise Unsupported("intersections are computed over finite fields")
    p = F.characteristic
    graded = isinstance(space, GradedSpace)
    old = old_subspace(space, ell)
    new = new_subspace_U(space, ell) if _is_cuspidal(space) else new_subspace_Tr(space, ell)
    lower = lower_space(space, ell)
    R = primes if primes is not None else fit_primes(space, default_primes(space.level, p, ell))
    ops = _ops_for(space, R)
    m = splitting_degree([op.matrix for op in ops.values()] + [op_T(lower, ell).matrix], p)
    E = F if m == 1 else FiniteField(p, m)
    oldE, newE = _field_rows(old.basis, E), _field_rows(new.basis, E)
    inter = la.span_intersection(oldE, newE, E)
    if graded:
        if p == 2 or (ell + 1) % p == 0:
            lam = 0
        else:
            lam = None
    else:
        lam = lambda_k(ell, space.weight, p)
    closed = None
    case = "lambda=0" if lam == 0 else ("lambda!=0" if lam else "graded, lambda varies")
    if lam == 0:
        K = _ker_shift(lower, ell, E.zero, E)
        closed = la.row_basis(_zero_lambda_rows(space, lower, ell, K, E), E) if K else []
    elif lam is not None:
        Kp = _ker_shift(lower, ell, E.coerce(lam), E)
        Km = _ker_shift(lower, ell, E.coerce(-lam), E)
        rows = _closed_rows(space, lower, ell, Kp, 1, E) + _closed_rows(space, lower, ell, Km, -1, E)
        closed = la.row_basis(rows, E) if rows else []
    matches = la.span_equal(inter, closed, E) if closed is not None else None
    rep = IntersectionReport(inter, E, lam, case, closed, matches)
    if by_component:
        comps_up = decompose_ops(space, ops, field_=E)
        comps_low = decompose_ops(lower, _ops_for(lower, R), field_=E)
        for C in comps_up:
            rep.components.append(_component_case(space, lower, ell, C, comps_low, oldE, newE,
                                                  lam, E, R))
    return rep


def _component_case(space, lower, ell, C, comps_low, oldE, newE, lam, E, R):
    """Closed-form comparison on one eigencomponent."""
    Ct = C.basis
    old_t = la.span_intersection(oldE, Ct, E)
    new_t = la.span_intersection(newE, Ct, E)
    inter = la.span_intersection(old_t, new_t, E)
    low = [c for c in comps_low if c.system.matches(C.system, R)]
    out = {"system": C.system.fmt(), "dim": C.dim, "dim_old": len(old_t), "dim_new": len(new_t),
           "dim_inter": len(inter), "case": "", "expected": None, "passed": True}
    if not low:
        out["case"] = "new at l"
        out["passed"] = len(old_t) == 0 and len(new_t) == C.dim
        return out
    Lt = low[0].basis
    tl = _t_ell(lower, Lt, ell, E)
    out["t_ell"] = E.fmt(tl)
    if lam is None:
        out["case"] = "graded, lambda varies"
        return out
    lamE = E.coerce(lam)
    if not (E.eq(tl, lamE) or E.eq(tl, E.neg(lamE))):
        out["case"] = "level raising fails"
        out["expected"] = 0
        out["passed"] = len(new_t) == 0 and len(inter) == 0
        return out
    if lam == 0:
        K = _ker_shift(lower, ell, E.zero, E, Lt)
        closed = _zero_lambda_rows(space, lower, ell, K, E)
        out["case"] = "lambda=0"
    else:
        eps = 1 if E.eq(tl, lamE) else -1
        K = _ker_shift(lower, ell, E.mul(E.coerce(eps), lamE), E, Lt)
        closed = _closed_rows(space, lower, ell, K, eps, E)
        out["case"] = f"lambda!=0, eps={eps:+d}"
    closed = la.row_basis(closed, E) if closed else []
    out["expected"] = len(closed)
    out["passed"] = la.span_equal(inter, closed, E) and len(inter) > 0
    return out


# ---------------------------------------------------------------- other invariants

def oldint_check(upper, ell: int) -> dict:
    """M(N) ∩ W_l M(N) inside level N*l is the constants (or 0 if none)."""
    low = lower_space(upper, ell)
    F = _work_field(upper.ring)
    E = op_embed(low, upper)
    EW = E.then(op_W(upper, ell))
    inter = la.span_intersection(_mat(E, F), _mat(EW, F), F)
    const = [F.one] + [F.zero] * (upper.prec - 1)
    if isinstance(upper, GradedSpace):
        cc = upper.coords(const)
    else:
        from .qexp import QExp
        cc = upper.coords(QExp(upper.ring, [upper.ring.coerce(x) if not isinstance(upper.ring, Rationals)
                                            else Fraction(x) for x in const]))
    expected = [[_to(F, x) for x in cc]] if cc is not None else []
    ok = la.span_equal(inter, expected, F)
    return {"dim": len(inter), "constants_present": cc is not None, "passed": ok}


def weil_check(fixtures) -> dict:
    """Every cuspidal fixture satisfies |a_l| < (l+1) l^{(k-2)/2} at primes l not dividing the level."""
    from .rings import is_prime
    bad = []
    for fx in fixtures:
        if fx.coeff_ring is not ZZ:
            continue
        for r in range(2, len(fx.an) + 1):
            if is_prime(r) and fx.level % r and not weil_strict(fx.a(r), r, fx.weight):
                bad.append((fx.label, r))
    return {"checked": len(fixtures), "failures": bad, "passed": not bad}


# ---------------------------------------------------------------- span conditions

def _q_pieces(space_q, primes):
    """Decompose a QQ space into pieces cut out by Q-irreducible factors of T_r."""
    x = sympy.Symbol("x")
    n = space_q.dim
    pieces = [la.identity(n, QQ)] if n else []
    from .heckealg import restrict, lift_rows
    for r in primes:
        A = [[Fraction(v) for v in row] for row in op_T(space_q, r).matrix]
        nxt = []
        for B in pieces:
            Ab = restrict(A, B, QQ)
            cp = la.charpoly(Ab, QQ)
            poly = sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in cp])), x)
            _, facs = poly.factor_list()
            for g, e in facs:
                gc = [Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1]))
                      for c in reversed(g.all_coeffs())]
                K = la.left_kernel(la.mat_pow(la.poly_eval_matrix(gc, Ab, QQ), e, QQ), QQ)
                if K:
                    nxt.append(lift_rows(K, B, QQ))
        pieces = nxt
    return pieces


def _reduce_system(space_q, B, primes, p):
    """Eigenvalue tuple mod p of a QQ piece; None if it does not reduce to one F_p system."""
    from .heckealg import restrict
    F = FiniteField(p)
    vals = {}
    for r in primes:
        A = restrict([[Fraction(v) for v in row] for row in op_T(space_q, r).matrix], B, QQ)
        cp = la.charpoly(A, QQ)
        if any(c.denominator % p == 0 for c in cp):
            return None
        cpF = [F.coerce(c) for c in cp]
        roots = [t for t in range(p) if F.is_zero(sum(c * pow(t, i, p) for i, c in enumerate(cpF)) % p)]
        if len(roots) != 1:
            return None
        # the whole polynomial must be (x - t)^d
        d = len(B)
        want = [sympy.binomial(d, i) * (-roots[0]) ** (d - i) for i in range(d + 1)]
        if any((int(w) - c) % p for w, c in zip(want, cpF)):
            return None
        vals[r] = roots[0]
    return tuple(sorted(vals.items()))


def _group_t(space_q, primes, p):
    groups = {}
    for B in _q_pieces(space_q, primes):
        key = _reduce_system(space_q, B, primes, p)
        if key is None:
            raise Unsupported("a rational Hecke piece does not reduce to a single F_p eigensystem")
        groups.setdefault(key, []).extend(B)
    return groups


def _vp(x: Fraction, p):
    if x == 0:
        return None
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _det_q(A):
    n = len(A)
    if n == 0:
        return Fraction(1)
    M = [list(r) for r in A]
    det = Fraction(1)
    for j in range(n):
        piv = next((i for i in range(j, n) if M[i][j] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != j:
            M[j], M[piv] = M[piv], M[j]
            det = -det
        det *= M[j][j]
        for i in range(j + 1, n):
            if M[i][j]:
                f = M[i][j] / M[j][j]
                M[i] = [a - f * b for a, b in zip(M[i], M[j])]
    return det


def _coords_in(rows, basis):
    ech = la.Echelon(basis, QQ)
    out = []
    for r in rows:
        c = ech.coords(r)
        if c is None:
            return None
        out.append(c)
    return out


def span_conditions(level: int, ell: int, p: int, k: int, b: int = 2, fixtures=None,
                    primes=None, prec=None) -> list[dict]:
    """Conditions (1)-(5) on every eigencomponent of S_k(N l) at p.

    (1) det S on the old part of the component is a unit mod p^b;
    (2) old ∩ new over F_p is 0; (3) old + new is a direct sum equal to the
    component over F_p; (4) t is new at l or the level-raising condition
    fails; (5) new ⊕ old equals the component over Z_p, measured by the
    p-part of its lattice index.  The first four are asserted equivalent,
    and (5) is asserted whenever they hold.

    Components are cut out over QQ by Q-irreducible Hecke factors, so a
    rational factor whose reduction meets two F_p systems is rejected.
    """
    from .heckealg import decompose_ops, default_primes, restrict

    M = level * ell
    prec = prec or auto_prec(k, M, primes=(ell,))
    R = primes if primes is not None else default_primes(M, p)
    upQ = build_space(SpaceParams(M, k, QQ, prec), fixtures)
    lowQ = lower_space(upQ, ell)
    upF = build_space(SpaceParams(M, k, FiniteField(p), prec), fixtures)
    lowF = lower_space(upF, ell)
    lam = lambda_k(ell, k, p)
    gu = _group_t(upQ, R, p)
    gl = _group_t(lowQ, R, p) if lowQ.dim else {}
    EQ = _mat(op_embed(lowQ, upQ), QQ)
    EWQ = _mat(op_embed(lowQ, upQ).then(op_W(upQ, ell)), QQ)
    SQ = _mat(op_S(upQ, ell), QQ)
    F = FiniteField(p)
    opsF = _ops_for(upF, R)
    compsF = decompose_ops(upF, opsF, field_=F)
    compsLF = decompose_ops(lowF, _ops_for(lowF, R), field_=F) if lowF.dim else []
    oldF = old_subspace(upF, ell).basis
    newF = new_subspace_U(upF, ell).basis
    kerS_Q = la.left_kernel(SQ, QQ)
    out = []
    for key in sorted(gu):
        St = gu[key]
        Lt = gl.get(key, [])
        old_t = [la.vecmat(f, EQ, QQ) for f in Lt] + [la.vecmat(f, EWQ, QQ) for f in Lt]
        # (1): determinant of S on the old block of the component
        if old_t:
            det = _det_q(restrict(SQ, old_t, QQ))
        else:
            det = Fraction(1)
        v = _vp(det, p)
        c1 = v == 0
        mod = p ** b
        det_mod = (det.numerator * pow(det.denominator, -1, mod)) % mod if v is not None and v >= 0 else None
        # (2), (3) over F_p on the matching mod-p component
        vals = dict(key)
        Cf = next(c for c in compsF if all(c.system.values[r] == vals[r] for r in R))
        old_f = la.span_intersection(oldF, Cf.basis, F)
        new_f = la.span_intersection(newF, Cf.basis, F)
        inter = la.span_intersection(old_f, new_f, F)
        c2 = len(inter) == 0
        c3 = c2 and len(old_f) + len(new_f) == Cf.dim
        # (4)
        Lf = [c for c in compsLF if all(c.system.values[r] == vals[r] for r in R)]
        if not Lf:
            c4, tl = True, None
        else:
            tl = _t_ell(lowF, Lf[0].basis, ell, F)
            c4 = tl not in (lam % p, -lam % p)
        # (5): p-part of the index of new_t ⊕ old_t in the saturated component
        new_t = la.span_intersection(kerS_Q, St, QQ)
        St_Z, _ = la.saturate([_clear(r) for r in St])
        newZ = [list(r) for r in la.saturate([_clear(r) for r in new_t])[0]] if new_t else []
        LtZ = [list(r) for r in la.saturate([_clear(r) for r in Lt])[0]] if Lt else []
        oldZ = [la.vecmat([Fraction(x) for x in f], EQ, QQ) for f in LtZ] + \
               [la.vecmat([Fraction(x) for x in f], EWQ, QQ) for f in LtZ]
        comb = [[Fraction(x) for x in r] for r in newZ] + oldZ
        X = _coords_in(comb, [[Fraction(x) for x in r] for r in St_Z])
        index_vp = _vp(_det_q(X), p) if X is not None and len(X) == len(St_Z) else None
        c5 = index_vp == 0
        witness = None
        if index_vp:
            witness = _index_witness(comb, St_Z, p)
        conds = {"1": c1, "2": c2, "3": c3, "4": c4, "5": c5}
        equiv = c1 == c2 == c3 == c4
        rep = {"system": " ".join(f"{r}:{t}" for r, t in key), "dim": len(St),
               "dim_old": len(old_t), "dim_new": len(new_t), "det_S_old": str(det),
               "det_mod_pb": det_mod, "t_ell": tl, "lambda": lam, "index_vp": index_vp,
               "conditions": conds, "equivalent": equiv, "witness": witness,
               "passed": equiv and (c5 if c1 else True)}
        out.append(rep)
    return out


def _index_witness(comb, St_Z, p):
    """A vector of the saturated lattice whose coordinates in ``comb`` have p in a denominator."""
    St = [[Fraction(x) for x in r] for r in St_Z]
    for r in St:
        c = _coords_in([r], comb)
        if c and any(x.denominator % p == 0 for x in c[0]):
            return {"vector": [str(x) for x in r], "coords_in_sum": [str(x) for x in c[0]]}
    return None
