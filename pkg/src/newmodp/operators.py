"""Operator matrices on fixed-weight and graded spaces, and the identity checks.

Matrices follow the row convention of :mod:`newmodp.linalg`: the image of
the form with coordinate row c is c * A.  Composition ``A.then(B)`` applies
A first, so its matrix is A.matrix * B.matrix.

Fixed-weight operators are computed over QQ on the saturated integral
basis and reduced into the space's ring.  Graded operators are computed
directly on mod-p q-expansions, except W_l, which is transported from the
characteristic-zero matrices weight by weight.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg as la
from .errors import BadPrime, NonUnit, NotPIntegral, NotStable, PrecisionTooLow, Unsupported
from .qexp import QExp, apply_U, apply_V, eisenstein, sturm_bound
from .rings import QQ, FiniteField, Integers, Rationals, ZmodPB, is_prime
from .spaces import (
    GradedSpace,
    Space,
    SpaceParams,
    build_space,
    char0_space,
    graded_prec,
    graded_space,
)


@dataclass
class OpMatrix:
    name: str
    domain: object
    codomain: object
    matrix: list
    ring: object = field(repr=False, default=None)

    def __post_init__(self):
        if self.ring is None:
            self.ring = self.domain.ring

    @property
    def shape(self):
        return (len(self.matrix), len(self.matrix[0]) if self.matrix else self.codomain.dim)

    def apply(self, coords):
        if not self.matrix:
            return [self.ring.zero] * self.codomain.dim
        return la.vecmat(list(coords), self.matrix, self.ring)

    def then(self, other: "OpMatrix", name=None) -> "OpMatrix":
        if other.domain is not self.codomain:
            raise Unsupported(f"cannot compose {self.name} with {other.name}: spaces differ")
        M = _mm(self.matrix, other.matrix, self.ring, self.domain.dim, other.codomain.dim)
        return OpMatrix(name or f"{other.name}*{self.name}", self.domain, other.codomain, M, self.ring)

    def combine(self, other: "OpMatrix", a=1, b=1, name=None) -> "OpMatrix":
        """a * self + b * other for operators with the same domain and codomain."""
        if other.domain is not self.domain or other.codomain is not self.codomain:
            raise Unsupported("linear combination needs equal domain and codomain")
        R = self.ring
        a, b = _el(R, a), _el(R, b)
        M = [[R.add(R.mul(a, x), R.mul(b, y)) for x, y in zip(r, s)]
             for r, s in zip(self.matrix, other.matrix)]
        return OpMatrix(name or f"{self.name}+{other.name}", self.domain, self.codomain, M, R)

    def scale(self, c, name=None) -> "OpMatrix":
        R = self.ring
        c = _el(R, c)
        return OpMatrix(name or self.name, self.domain, self.codomain,
                        [[R.mul(c, x) for x in r] for r in self.matrix], R)

    def power(self, e: int) -> "OpMatrix":
        if self.domain is not self.codomain:
            raise Unsupported("power of a non-endomorphism")
        return OpMatrix(f"{self.name}^{e}", self.domain, self.domain,
                        la.mat_pow(self.matrix, e, self.ring) if self.matrix else [], self.ring)

    def equals(self, other: "OpMatrix") -> bool:
        if other.domain is not self.domain or other.codomain is not self.codomain:
            return False
        return la.mat_eq(self.matrix, other.matrix, self.ring)

    def is_zero(self) -> bool:
        return la.is_zero_matrix(self.matrix, self.ring)


def _mm(A, B, R, n, m):
    if n == 0:
        return []
    if not B or m == 0:
        return [[] for _ in range(n)]
    return la.matmul(A, B, R)


def _el(R, c):
    if isinstance(c, Fraction) or isinstance(c, int):
        if isinstance(R, (Integers, Rationals)):
            return R.coerce(c)
        return R.coerce(c)
    return c


def identity_op(space, name="id") -> OpMatrix:
    return OpMatrix(name, space, space, la.identity(space.dim, space.ring), space.ring)


def _is_graded(space):
    return isinstance(space, GradedSpace)


def _char(space):
    return space.ring.residue_char


def _unit_power(R, m, e):
    """m^e in R; negative e needs m to be a unit."""
    if e < 0:
        if isinstance(R, Integers) and m not in (1, -1):
            raise NonUnit(f"{m} is not invertible over ZZ")
        if not R.is_unit(R.coerce(m)):
            raise NonUnit(f"{m} is not invertible in {R}")
    if isinstance(R, Rationals):
        return Fraction(m) ** e
    if isinstance(R, Integers):
        return m ** e
    return R.pow(R.coerce(m), e)


# ---------------------------------------------------------------- fixed weight

def _reduce(space: Space, A, name):
    try:
        return space.reduce_matrix(A)
    except NotPIntegral as exc:
        raise NotPIntegral(-1, f"{name} is not p-integral on this basis; raise the working precision") from exc


def op_T(space, r: int) -> OpMatrix:
    """T_r with a_n(T_r f) = a_{rn}(f) + r^{k-1} a_{n/r}(f)."""
    if not is_prime(r):
        raise BadPrime(f"{r} is not prime")
    if space.level % r == 0:
        raise BadPrime(f"{r} divides the level {space.level}")
    p = _char(space)
    if p is not None and r == p:
        raise BadPrime(f"{r} is the residue characteristic; use op_U")
    if _is_graded(space):
        return _graded_T(space, r)
    if space.weight == 0 and isinstance(space.ring, Integers):
        raise NonUnit(f"T_{r} in weight 0 needs {r} invertible")
    A = space.char0.hecke(r)
    return OpMatrix(f"T{r}", space, space, _reduce(space, A, f"T{r}"))


def op_U(space, m: int) -> OpMatrix:
    """U_m for m dividing the level, or m = p on a characteristic-p space."""
    p = _char(space)
    if _is_graded(space):
        if space.level % m and m != p:
            raise BadPrime(f"U_{m} needs {m} | level or {m} = p")
        return _graded_direct(space, lambda v: v[::m], f"U{m}", stretch=m)
    if space.level % m == 0:
        A = space.char0.U(m)
        return OpMatrix(f"U{m}", space, space, _reduce(space, A, f"U{m}"))
    if p is not None and m == p:
        return _fixed_direct_U(space, m)
    raise BadPrime(f"U_{m} needs {m} | level or {m} = residue characteristic")


def _fixed_direct_U(space: Space, m):
    R = space.ring
    if not R.is_field:
        raise Unsupported("U_p on a fixed weight is computed over fields only")
    L = space.char0.L
    n = (space.prec - 1) // m + 1
    if n < L:
        raise PrecisionTooLow(f"U_{m} needs prec >= {m * (L - 1) + 1}")
    ech = la.Echelon([r[:n] for r in space.basis], R, n)
    rows = []
    for b in space.basis:
        c = ech.coords(b[::m][:n])
        if c is None:
            raise NotStable(m, f"U_{m} leaves the span of {space.level}.{space.weight}")
        rows.append(c)
    return OpMatrix(f"U{m}", space, space, rows)


def op_wt(space, m: int) -> OpMatrix:
    """wt_m f = m^k f, diagonal by weight."""
    R = space.ring
    if isinstance(R, Integers):
        if m not in (1, -1):
            raise NonUnit(f"{m} is not a unit in ZZ")
    elif not R.is_unit(R.coerce(m)):
        raise NonUnit(f"{m} is not a unit in {R}")
    ws = space.row_weight if _is_graded(space) else [space.weight] * space.dim
    M = la.zeros(space.dim, space.dim, R)
    for i, k in enumerate(ws):
        M[i][i] = _unit_power(R, m, k)
    return OpMatrix(f"wt{m}", space, space, M)


def _check_ell(space, ell):
    M = space.level
    if not is_prime(ell) or M % ell or (M // ell) % ell == 0:
        raise Unsupported(f"{ell} must be a prime exactly dividing the level {M}")
    if _char(space) == ell:
        raise BadPrime("l equals the residue characteristic")


def op_W(space, ell: int) -> OpMatrix:
    """W_l = l^{k/2} w_l, assembled blockwise and transported to the saturated basis."""
    _check_ell(space, ell)
    if _is_graded(space):
        return _graded_W(space, ell)
    A = space.char0.W(ell)
    return OpMatrix(f"W{ell}", space, space, _reduce(space, A, f"W{ell}"))


def op_w(space, ell: int) -> OpMatrix:
    """The Atkin-Lehner involution w_l = l^{-k/2} W_l on a fixed weight."""
    if _is_graded(space):
        raise Unsupported("w_l is defined weight by weight; use op_W on graded spaces")
    W = op_W(space, ell)
    c = _unit_power(space.ring, ell, -(space.weight // 2))
    return W.scale(c, f"w{ell}")


def op_S(space, ell: int) -> OpMatrix:
    """S = l^2 U_l^2 - wt_l."""
    _check_ell(space, ell)
    U = op_U(space, ell)
    U2 = U.then(U)
    return U2.combine(op_wt_any(space, ell), ell * ell, -1, name=f"S{ell}")


def op_S_pm(space, ell: int, sign: int) -> OpMatrix:
    """S^+ or S^- = l U_l -/+ l^{k/2} on a fixed weight; S = S^+ S^-."""
    if _is_graded(space):
        raise Unsupported("S^+- are fixed-weight operators")
    U = op_U(space, ell)
    c = _unit_power(space.ring, ell, space.weight // 2)
    I = identity_op(space)
    R = space.ring
    return U.combine(I, ell, R.neg(c) if sign > 0 else c, name=f"S{'+' if sign > 0 else '-'}{ell}")


def op_wt_any(space, m: int) -> OpMatrix:
    """wt_m without the unit requirement (m^k is defined over any ring)."""
    R = space.ring
    ws = space.row_weight if _is_graded(space) else [space.weight] * space.dim
    M = la.zeros(space.dim, space.dim, R)
    for i, k in enumerate(ws):
        M[i][i] = R.coerce(m ** k) if not isinstance(R, Rationals) else Fraction(m ** k)
    return OpMatrix(f"wt{m}", space, space, M)


def lower_space(space, ell: int):
    """The level-N companion (N = level / l) with matching weight, ring and precision."""
    N = space.level // ell
    if _is_graded(space):
        return graded_space(N, space.p, space.kappa, space.kmax, space.prec, space.fixtures,
                            space.cuspidal)
    return build_space(SpaceParams(N, space.weight, space.ring, space.prec, space.params.cuspidal),
                       space.fixtures)


def op_embed(lower, upper) -> OpMatrix:
    """Inclusion of level-N forms into level N*l."""
    if _is_graded(upper):
        rows = [_graded_coords(upper, r, "inclusion") for r in lower.rows]
        return OpMatrix("incl", lower, upper, rows, upper.ring)
    c0u, c0l = upper.char0, lower.char0
    rows = []
    for h in c0l.H:
        c = c0u.coords([Fraction(x) for x in h[: upper.prec]])
        if c is None:
            raise NotStable(1, "a level-N form is missing from the level-N*l space")
        rows.append(c)
    return OpMatrix("incl", lower, upper, _reduce(upper, rows, "inclusion"))


def op_Vell(lower, upper, ell: int) -> OpMatrix:
    """f(q) -> f(q^l) from level N into level N*l."""
    if _is_graded(upper):
        rows = []
        for r in lower.rows:
            v = [0] * upper.prec
            for n in range(0, upper.prec, ell):
                v[n] = r[n // ell]
            rows.append(_graded_coords(upper, v, f"V{ell}"))
        return OpMatrix(f"V{ell}", lower, upper, rows, upper.ring)
    c0u, c0l = upper.char0, lower.char0
    rows = []
    for h in c0l.H:
        v = [Fraction(0)] * upper.prec
        for n in range(0, upper.prec, ell):
            v[n] = Fraction(h[n // ell])
        c = c0u.coords(v)
        if c is None:
            raise NotStable(ell, "f(q^l) is missing from the level-N*l space")
        rows.append(c)
    return OpMatrix(f"V{ell}", lower, upper, _reduce(upper, rows, f"V{ell}"))


def op_trace(space, ell: int, target=None) -> OpMatrix:
    """Tr f = f + wt_l^{-1} l U_l W_l f, landing in the level-N space."""
    _check_ell(space, ell)
    low = target if target is not None else lower_space(space, ell)
    if _is_graded(space):
        return _graded_trace(space, low, ell)
    k = space.weight
    c0 = space.char0
    W = c0.W(ell)
    U = c0.U(ell)
    WU = la.matmul(W, U, QQ)
    s = Fraction(ell) ** (1 - k)
    n = c0.dim
    TrM = [[(Fraction(1) if i == j else Fraction(0)) + s * WU[i][j] for j in range(n)]
           for i in range(n)]
    E = [c0.coords([Fraction(x) for x in h[: space.prec]]) for h in low.char0.H]
    if any(e is None for e in E):
        raise NotStable(1, "level-N space does not embed")
    rows = []
    if E:
        ech = la.Echelon(E, QQ)
        for r in TrM:
            y = ech.coords(r)
            if y is None:
                raise NotStable(ell, "Tr leaves the level-N space")
            rows.append(y)
    else:
        if any(any(x for x in r) for r in TrM):
            raise NotStable(ell, "Tr leaves the level-N space")
        rows = [[] for _ in TrM]
    return OpMatrix(f"Tr{ell}", space, low, _reduce(space, rows, "Tr") if E else rows,
                    space.ring)


def op_trace_W(space, ell: int, target=None) -> OpMatrix:
    """Tr o W_l."""
    Tr = op_trace(space, ell, target)
    return op_W(space, ell).then(Tr, name=f"Tr{ell}W{ell}")


# ---------------------------------------------------------------- graded

def _graded_coords(gs: GradedSpace, v, what):
    c = gs.coords(v)
    if c is None:
        raise NotStable(what, f"{what} leaves the graded span (raise kmax or prec)")
    return c


def _graded_direct(gs: GradedSpace, fn, name, stretch=1):
    L = sturm_bound(gs.top_weight, gs.level) + 1
    n = (gs.prec - 1) // stretch + 1
    if n < L:
        raise PrecisionTooLow(f"{name} on the graded space needs prec >= {stretch * (L - 1) + 1}")
    rows = [_graded_coords(gs, fn(r), name) for r in gs.rows]
    return OpMatrix(name, gs, gs, rows, gs.ring)


def _graded_T(gs: GradedSpace, r):
    p = gs.p
    L = sturm_bound(gs.top_weight, gs.level) + 1
    n = (gs.prec - 1) // r + 1
    if n < L:
        raise PrecisionTooLow(f"T_{r} on the graded space needs prec >= {r * (L - 1) + 1}")
    rows = []
    for v, k in zip(gs.rows, gs.row_weight):
        rk = pow(r, k - 1, p) if k >= 1 else pow(r, -1, p)
        out = [0] * n
        for m in range(n):
            x = v[r * m]
            if m % r == 0:
                x += rk * v[m // r]
            out[m] = x % p
        rows.append(_graded_coords(gs, out, f"T{r}"))
    return OpMatrix(f"T{r}", gs, gs, rows, gs.ring)


def _graded_W(gs: GradedSpace, ell):
    p = gs.p
    if gs.level == 1:
        raise Unsupported("W_l needs l | level")
    cache = {}
    rows = []
    for k, i in gs.row_source:
        if k not in cache:
            c0 = gs.char0[k]
            cache[k] = [[_modp(x, p) for x in r] for r in c0.W(ell)]
        Wk = cache[k]
        red = gs.red_coords[k]
        out = [0] * gs.dim
        for j, x in enumerate(Wk[i]):
            if x:
                out = [(a + x * b) % p for a, b in zip(out, red[j])]
        rows.append(out)
    return OpMatrix(f"W{ell}", gs, gs, rows, gs.ring)


def _modp(x, p):
    x = Fraction(x)
    if x.denominator % p == 0:
        raise NotPIntegral(-1, "W_l is not p-integral")
    return x.numerator * pow(x.denominator, -1, p) % p


def _graded_trace(gs: GradedSpace, low: GradedSpace, ell):
    p = gs.p
    W = _graded_W(gs, ell)
    n = (gs.prec - 1) // ell + 1
    L = sturm_bound(low.top_weight, low.level) + 1
    if n < L:
        raise PrecisionTooLow("Tr on the graded space needs more precision")
    rows = []
    for i, k in enumerate(gs.row_weight):
        Wf = gs.form(W.matrix[i])
        s = ell * pow(ell, -k, p) % p
        f = gs.rows[i]
        v = [(f[m] + s * Wf[ell * m]) % p for m in range(n)]
        rows.append(_graded_coords(low, v, f"Tr{ell}"))
    return OpMatrix(f"Tr{ell}", gs, low, rows, gs.ring)


# ---------------------------------------------------------------- identity checks

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _coords_of_product(gs, f, g):
    n = gs.prec
    prod = [0] * n
    p = gs.p
    for i, a in enumerate(f):
        if a:
            for j in range(n - i):
                if g[j]:
                    prod[i + j] = (prod[i + j] + a * g[j]) % p
    return gs.coords(prod)


def identity_checks(upper, ell: int, primes=(), include_products=True) -> list[CheckResult]:
    """The trace identities, W properties and commutation checks between levels N and N*l."""
    R = upper.ring
    lower = lower_space(upper, ell)
    out = []

    def add(name, fn):
        try:
            ok = bool(fn())
            out.append(CheckResult(name, ok))
        except Exception as exc:  # a failed construction is a failed check
            out.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))

    W = op_W(upper, ell)
    U = op_U(upper, ell)
    wt = op_wt_any(upper, ell)
    I_up = identity_op(upper)
    I_low = identity_op(lower)
    Tr = op_trace(upper, ell, lower)
    E = op_embed(lower, upper)
    V = op_Vell(lower, upper, ell)
    TrE = Tr.then(E)
    TlN = op_T(lower, ell)
    wtN = op_wt_any(lower, ell)

    add("W^2 = wt", lambda: W.then(W).equals(wt))
    add("W f = wt f(q^l) on level N", lambda: E.then(W).equals(V.then(wt)))
    add("W f(q^l) = f on level N", lambda: V.then(W).equals(E))
    add("U_l V_l = id on level N", lambda: V.then(U).equals(E))
    add("(1) Tr lands in level N", lambda: Tr.codomain is lower)
    add("(2) Tr wt f = wt f + l U W f",
        lambda: wt.then(TrE).equals(wt.combine(W.then(U), 1, ell)))
    add("(3) Tr W f = W f + l U f",
        lambda: W.then(TrE).equals(W.combine(U, 1, ell)))
    add("(4) Tr f = (l+1) f on level N",
        lambda: E.then(Tr).equals(I_low.scale(ell + 1)))
    add("(5) l T_l f = l U_l f + W f on level N",
        lambda: TlN.then(E).scale(ell).equals(E.then(U).combine(E.then(W), ell, 1)))
    add("(6) Tr W f = l T_l f on level N",
        lambda: E.then(W).then(Tr).equals(TlN.scale(ell)))
    for r in primes:
        if upper.level % r == 0 or r == _char(upper):
            continue
        Tr_ = op_T(upper, r)
        add(f"T{r} commutes with W", lambda Tr_=Tr_: Tr_.then(W).equals(W.then(Tr_)))
        add(f"T{r} commutes with U{ell}", lambda Tr_=Tr_: Tr_.then(U).equals(U.then(Tr_)))
        for s in primes:
            if s > r and upper.level % s and s != _char(upper):
                Ts = op_T(upper, s)
                add(f"T{r} commutes with T{s}",
                    lambda Tr_=Tr_, Ts=Ts: Tr_.then(Ts).equals(Ts.then(Tr_)))
    p = _char(upper)
    if _is_graded(upper):
        if p >= 3:
            add("W^(p-1) = id", lambda: W.power(p - 1).equals(I_up))
        else:
            add("W = w in characteristic 2", lambda: W.then(W).equals(I_up))
        if include_products:
            add("W(fg) = W(f) W(g)", lambda: _check_multiplicative(upper, W))
    return out


def _check_multiplicative(gs: GradedSpace, W: OpMatrix) -> bool:
    idx = list(range(gs.dim))
    for a in idx:
        for b in idx:
            if b < a or gs.row_weight[a] + gs.row_weight[b] > gs.kmax:
                continue
            if (gs.row_weight[a] + gs.row_weight[b] - gs.kappa) % max(gs.p - 1, 1) and gs.p > 3:
                continue
            c = _coords_of_product(gs, gs.rows[a], gs.rows[b])
            if c is None:
                return False
            lhs = W.apply(c)
            Wf = gs.form(W.matrix[a])
            Wg = gs.form(W.matrix[b])
            d = _coords_of_product(gs, Wf, Wg)
            if d is None or [x % gs.p for x in lhs] != [x % gs.p for x in d]:
                return False
    return True


def lift_independence(level: int, ell: int, p: int, k: int, prec: int | None = None,
                      fixtures=None) -> bool:
    """reduce(W(E_{p-1} f)) = reduce(W(f)) for every saturated basis row f of weight k."""
    from .spaces import auto_prec
    if p < 5:
        raise Unsupported("lift independence through E_{p-1} needs p >= 5")
    k2 = k + p - 1
    P = prec or auto_prec(k2, level, [ell])
    c1 = char0_space(level, k, P, cuspidal=False, fixtures=fixtures)
    c2 = char0_space(level, k2, P, cuspidal=False, fixtures=fixtures)
    E = eisenstein(p - 1, QQ, P)
    W1, W2 = c1.W(ell), c2.W(ell)
    for i, h in enumerate(c1.H):
        f = QExp(QQ, [Fraction(x) for x in h])
        g = (E * f).coeffs
        cg = c2.coords(list(g))
        if cg is None:
            return False
        lhs = _combine_red(c2, la.vecmat(cg, W2, QQ), p)
        rhs = _combine_red(c1, W1[i], p)
        if lhs != rhs:
            return False
    return True


def _combine_red(c0, coords, p):
    v = c0.basis.combine(coords)
    return [_modp(x, p) for x in v]


def check_identities(N: int, ell: int, ring, weight=None, kmax=None, prec=None,
                     primes=(5, 7), fixtures=None, cuspidal=False) -> dict:
    """Build the level N*l space (fixed weight or graded) and run every identity check."""
    M = N * ell
    if kmax is not None:
        p = ring.residue_char
        if p is None:
            raise Unsupported("graded spaces live in characteristic p")
        kappa = 0 if weight is None else weight
        P = prec or graded_prec(M, p, kappa, kmax, primes)
        gs = graded_space(M, p, kappa, kmax, P, fixtures, cuspidal)
        checks = identity_checks(gs, ell, primes)
    else:
        from .spaces import auto_prec
        P = prec or auto_prec(weight, M, [ell] + list(primes))
        sp = build_space(SpaceParams(M, weight, ring, P, cuspidal), fixtures)
        checks = identity_checks(sp, ell, primes)
    return {"checks": checks, "passed": all(c.passed for c in checks)}
