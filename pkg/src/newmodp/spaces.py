"""Certified bases of M_k(Gamma0(M)) and S_k(Gamma0(M)), and graded mod-p spaces.

Characteristic zero comes first.  For each divisor d of M and each block of
forms that are new at level d, the rows h(q^e) with e | M/d make up the
pre-saturation basis.  That lattice is then saturated inside ZZ^prec, and
every residue-ring space is a coefficientwise reduction of the saturated
lattice.

New blocks come from fixtures when they are complete, and otherwise are
derived.  Derivation builds M_k(d) from products of low-weight generators,
takes the cusp part as the image of T_r - (1 + r^{k-1}), and takes the new
part as the common kernel of l^2 U_l^2 - l^k over l | d.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm

from . import linalg as la
from .errors import IncompleteFixtures, NewModPError, PrecisionTooLow, Unsupported
from .qexp import (
    QExp,
    apply_U,
    apply_V,
    eisenstein,
    eta_delta,
    index_mu,
    qexp_pow,
    reduce_mod,
    sturm_bound,
    _pentagonal,
)
from .rings import (
    QQ,
    ZZ,
    FiniteField,
    Integers,
    Rationals,
    RingDesc,
    ZmodPB,
    divisors,
    is_prime,
    is_squarefree,
    prime_factors,
)

BIGP = (1 << 61) - 1
DEFAULT_R = 20


# ---------------------------------------------------------------- dimensions

@dataclass(frozen=True)
class DimData:
    mu: int
    eps2: int
    eps3: int
    epsInf: int
    genus: int
    dim_Sk: int
    dim_Mk: int


def _kron_m1(r):
    # (-1 | r) for odd prime r; 0 at r = 2
    if r == 2:
        return 0
    return 1 if r % 4 == 1 else -1


def _kron_m3(r):
    if r == 3:
        return 0
    if r == 2:
        return -1
    return 1 if r % 3 == 1 else -1


def dim_data(M: int, k: int) -> DimData:
    if k % 2 or k < 0:
        raise Unsupported("odd or negative weight")
    if M < 1 or not is_squarefree(M):
        raise Unsupported(f"level {M} is not squarefree")
    ps = prime_factors(M)
    mu = index_mu(M)
    e2 = e3 = 1
    for r in ps:
        e2 *= 1 + _kron_m1(r)
        e3 *= 1 + _kron_m3(r)
    einf = 2 ** len(ps)
    g = 1 + Fraction(mu, 12) - Fraction(e2, 4) - Fraction(e3, 3) - Fraction(einf, 2)
    assert g.denominator == 1
    g = int(g)
    if k == 0:
        s, m = 0, 1
    elif k == 2:
        s, m = g, g + einf - 1
    else:
        s = (k - 1) * (g - 1) + (k // 4) * e2 + (k // 3) * e3 + (k // 2 - 1) * einf
        m = s + einf
    return DimData(mu, e2, e3, einf, g, s, m)


def genus(M: int) -> int:
    return dim_data(M, 2).genus


@lru_cache(maxsize=None)
def new_dimension(d: int, k: int) -> int:
    """dim of the new cusp forms of level d, weight k."""
    total = dim_data(d, k).dim_Sk
    for d2 in divisors(d):
        if d2 < d:
            total -= len(divisors(d // d2)) * new_dimension(d2, k)
    return total


def auto_prec(k: int, M: int, primes=()) -> int:
    """Precision that certifies T_r (r < DEFAULT_R) and the given U/T primes."""
    top = max([19] + [r for r in primes])
    return top * (sturm_bound(k, M) + 1) + 1


# ---------------------------------------------------------------- generators

def eta_quotient(level: int, exps: dict, prec: int) -> QExp:
    """prod_delta eta(delta z)^{r_delta}; the q-power must be integral."""
    shift = sum(d * r for d, r in exps.items())
    if shift % 24:
        raise Unsupported("eta quotient with fractional q-order")
    shift //= 24
    if shift >= prec:
        return QExp.zero(ZZ, prec)
    n = prec - shift
    acc = QExp.constant(ZZ, 1, n)
    for d, r in sorted(exps.items()):
        if r == 0:
            continue
        src = _partitions(-(-n // d)) if r < 0 else _pentagonal(-(-n // d))
        base = apply_V(QExp.from_ints(ZZ, src), d).truncate(n)
        acc = acc * qexp_pow(base, abs(r))
    return QExp(ZZ, [0] * shift + list(acc.coeffs))


@lru_cache(maxsize=8)
def _partitions(n):
    """1 / prod (1 - q^m) to precision n, by Euler's pentagonal recurrence."""
    p = [0] * n
    p[0] = 1
    for m in range(1, n):
        s, k = 0, 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > m:
                break
            sign = 1 if k % 2 else -1
            s += sign * p[m - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= m:
                s += sign * p[m - g2]
            k += 1
        p[m] = s
    return tuple(p)


def _cusp_orders(level, exps):
    out = []
    for c in divisors(level):
        num = 0
        for d, r in exps.items():
            g = _gcd(c, d)
            num += Fraction(g * g * r, d)
        out.append(Fraction(level, 24) * num / c)
    return out


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _is_square(n: Fraction):
    from math import isqrt
    if n <= 0:
        return False
    a, b = n.numerator, n.denominator
    return isqrt(a) ** 2 == a and isqrt(b) ** 2 == b


@lru_cache(maxsize=None)
def eta_exponents(level: int, weight: int, bound: int | None = None):
    """Exponent vectors of holomorphic eta quotients on Gamma0(level) of this weight."""
    ds = divisors(level)
    if bound is None:
        bound = 12 if len(ds) <= 4 else 3
    total = 2 * weight
    out = []

    def rec(i, remaining, cur):
        if i == len(ds) - 1:
            r = remaining
            if abs(r) > bound:
                return
            vec = cur + [r]
            exps = dict(zip(ds, vec))
            if sum(d * x for d, x in exps.items()) % 24:
                return
            if sum((level // d) * x for d, x in exps.items()) % 24:
                return
            s = Fraction(1)
            for d, x in exps.items():
                s *= Fraction(d) ** x
            if not _is_square(s):
                return
            if all(o >= 0 for o in _cusp_orders(level, exps)):
                out.append(tuple(vec))
            return
        for r in range(-bound, bound + 1):
            rec(i + 1, remaining - r, cur + [r])

    if level > 1:
        rec(0, total, [])
    return tuple(out)


def _e2_diff(e, prec):
    sig = [0] + [sum(d for d in range(1, n + 1) if n % d == 0) for n in range(1, prec)]
    E2 = [1] + [-24 * s for s in sig[1:]]
    out = list(E2)
    for n in range(0, prec, e):
        out[n] -= e * E2[n // e]
    return QExp(ZZ, out)


def _generators(level, w, prec):
    gens = []
    if w == 2:
        for e in divisors(level)[1:]:
            gens.append(_e2_diff(e, prec))
    elif w in (4, 6):
        E = eisenstein(w, ZZ, prec)
        for e in divisors(level):
            gens.append(apply_V(E, e).truncate(prec) if e > 1 else E)
    return gens


def _eta_gens(level, w, prec):
    ds = divisors(level)
    return [eta_quotient(level, dict(zip(ds, vec)), prec) for vec in eta_exponents(level, w)]


class _IndepModP:
    """Incremental independence test on a column prefix, modulo a large prime."""

    def __init__(self, L):
        self.L = L
        self.rows = []  # reduced rows with pivot
        self.pivs = []

    def try_add(self, vec):
        v = [x % BIGP for x in vec[: self.L]]
        for row, c in zip(self.rows, self.pivs):
            f = v[c]
            if f:
                v = [(x - f * y) % BIGP for x, y in zip(v, row)]
        c = next((i for i, x in enumerate(v) if x), None)
        if c is None:
            return False
        inv = pow(v[c], -1, BIGP)
        v = [x * inv % BIGP for x in v]
        self.rows.append(v)
        self.pivs.append(c)
        return True

    @property
    def rank(self):
        return len(self.rows)


def _level1_monomials(k, prec, cusp_only=False, ring=ZZ):
    """ZZ-basis Delta^j E4^a E6^b (4a + 6b = k - 12j) of M_k(1), unitriangular in q."""
    if k == 0:
        return [] if cusp_only else [QExp.constant(ring, 1, prec)]
    E4 = eisenstein(4, ring, prec)
    E6 = eisenstein(6, ring, prec)
    D = eta_delta(ring, prec)
    out = []
    for j in range(k // 12 + 1):
        rest = k - 12 * j
        if cusp_only and j == 0:
            continue
        # any E4^a E6^b of the right weight gives q^j + O(q^{j+1})
        if rest == 2:
            continue
        b = 0 if rest % 4 == 0 else 1
        a = (rest - 6 * b) // 4
        f = qexp_pow(D, j) * qexp_pow(E4, a) * qexp_pow(E6, b)
        out.append(f)
    return out


@lru_cache(maxsize=64)
def modular_forms_qbasis(level: int, k: int, prec: int):
    """A QQ-basis of M_k(Gamma0(level)) as integral q-expansions (tuple of QExp)."""
    dim = dim_data(level, k).dim_Mk
    if level == 1:
        rows = _level1_monomials(k, prec)
        return tuple(rows)
    if k == 0:
        return (QExp.constant(ZZ, 1, prec),)
    L = sturm_bound(k, level) + 1
    ind = _IndepModP(L)
    chosen = []

    def offer(f, g=None):
        if ind.rank >= dim:
            return
        if g is None:
            if ind.try_add(f.coeffs):
                chosen.append(f)
            return
        head = f.truncate(L) * g.truncate(L)
        if ind.try_add(head.coeffs):
            chosen.append(f * g)

    for w in (2, 4, 6):
        if w == k:
            for g in _generators(level, w, prec) + _eta_gens(level, w, prec):
                offer(g)
    for w in (2, 4, 6):
        if k - w >= 2 and ind.rank < dim:
            lower = modular_forms_qbasis(level, k - w, prec)
            gens = _generators(level, w, prec) + _eta_gens(level, w, prec)
            for f in lower:
                for g in gens:
                    if ind.rank >= dim:
                        break
                    offer(f, g)
    if ind.rank != dim:
        raise NewModPError(f"generators span {ind.rank} of {dim} dims of M_{k}({level})")
    return tuple(chosen)


class FormBasis:
    """Independent integral q-expansions with coordinates read from a prefix."""

    def __init__(self, rows, L):
        self.rows = [list(r.coeffs) if isinstance(r, QExp) else list(r) for r in rows]
        self.prec = min(len(r) for r in self.rows) if self.rows else 0
        self.L = L
        pref = [[Fraction(x) for x in r[:L]] for r in self.rows]
        self.ech = la.Echelon(pref, QQ, L) if pref else None

    def coords(self, v, check_len=None):
        """Rational coordinates of v (a coefficient list known to len(v))."""
        if len(v) < self.L:
            raise PrecisionTooLow(f"need {self.L} coefficients, have {len(v)}")
        if not self.rows:
            return [] if not any(v) else None
        c = self.ech.coords([Fraction(x) for x in v[: self.L]])
        if c is None:
            return None
        n = min(len(v), self.prec) if check_len is None else check_len
        if n > self.L:
            num, D = self._combine_int(c, n)
            for j in range(self.L, n):
                x = v[j]
                if isinstance(x, Fraction):
                    if x * D != num[j]:
                        return None
                elif x * D != num[j]:
                    return None
        return c

    def _combine_int(self, c, n):
        D = lcm(*[Fraction(x).denominator for x in c]) if c else 1
        out = [0] * n
        for ci, r in zip(c, self.rows):
            if ci:
                m = int(ci * D)
                rr = r[:n]
                out = [a + m * b for a, b in zip(out, rr)]
        return out, D

    def combine(self, c, prec=None):
        n = self.prec if prec is None else prec
        num, D = self._combine_int(c, n)
        if D == 1:
            return num
        return [Fraction(x, D) for x in num]

    def op_matrix(self, fn):
        """Matrix (rows = coords of fn(row)) for an operator given on coefficient lists."""
        return [self.coords(fn(r)) for r in self.rows]


def _hecke_list(coeffs, r, k):
    P = (len(coeffs) - 1) // r + 1
    rk = r ** (k - 1) if k >= 1 else Fraction(1, r)
    out = []
    for n in range(P):
        v = coeffs[r * n]
        if n % r == 0:
            v = v + rk * coeffs[n // r]
        out.append(v)
    return out


def _U_list(coeffs, m):
    return list(coeffs[::m])


def _saturate_forms(rows, L):
    """Saturated HNF basis of the ZZ-lattice of forms spanned by rows.

    Saturation is decided on the first L coefficients (Sturm bound), then the
    resulting combinations are expanded to the full precision.
    """
    if not rows:
        return [], []
    dens = [lcm(*[Fraction(x).denominator for x in r]) for r in rows]
    ints = [[int(Fraction(x) * d) for x in r] for r, d in zip(rows, dens)]
    pref = [r[:L] for r in ints]
    Hp, piv = la.saturate(pref)
    if len(Hp) != len(rows):
        raise NewModPError("rows are dependent on the Sturm prefix")
    fb = FormBasis(ints, L)
    full = []
    for h in Hp:
        c = fb.ech.coords([Fraction(x) for x in h])
        v = fb.combine(c)
        if any(x.denominator != 1 for x in v):
            raise NewModPError("saturation failed to stay integral beyond the Sturm prefix")
        full.append([int(x) for x in v])
    return full, piv


def _first_good_prime(level):
    r = 2
    while level % r == 0:
        r += 1
        while not is_prime(r):
            r += 1
    return r


@lru_cache(maxsize=64)
def cusp_forms_qbasis(level: int, k: int, prec: int):
    """Saturated integral basis of S_k(Gamma0(level)), as coefficient tuples."""
    dim = dim_data(level, k).dim_Sk
    if dim == 0:
        return ()
    L = sturm_bound(k, level) + 1
    if level == 1:
        rows = [list(f.coeffs) for f in _level1_monomials(k, prec, cusp_only=True)]
        H, _ = _saturate_forms(rows, L)
        return tuple(tuple(h) for h in H)
    r = _first_good_prime(level)
    need = r * L
    P = max(prec, need)
    Mb = FormBasis(list(modular_forms_qbasis(level, k, P)), L)
    T = Mb.op_matrix(lambda c: _hecke_list(c, r, k))
    s = 1 + r ** (k - 1)
    A = [[T[i][j] - (s if i == j else 0) for j in range(len(T))] for i in range(len(T))]
    img = la.row_basis(A, QQ)
    if len(img) != dim:
        raise NewModPError(f"cusp image has dim {len(img)}, expected {dim}")
    rows = [Mb.combine(c, P) for c in img]
    H, _ = _saturate_forms(rows, L)
    return tuple(tuple(h[:prec]) for h in H)


@lru_cache(maxsize=64)
def derived_new_block(d: int, k: int, prec: int):
    """Saturated basis of the new cusp forms at level d: common kernel of the S operators."""
    nd = new_dimension(d, k)
    if nd == 0:
        return ()
    if d == 1:
        return cusp_forms_qbasis(1, k, prec)
    L = sturm_bound(k, d) + 1
    P = max(prec, max(prime_factors(d)) * L)
    S = cusp_forms_qbasis(d, k, P)
    fb = FormBasis(list(S), L)
    mats = []
    for ell in prime_factors(d):
        U = fb.op_matrix(lambda c, ell=ell: _U_list(c, ell))
        U2 = la.matmul(U, U, QQ)
        lk = ell ** k
        mats.append([[ell * ell * U2[i][j] - (lk if i == j else 0) for j in range(len(U))]
                     for i in range(len(U))])
    big = [sum((m[i] for m in mats), []) for i in range(len(S))]
    K = la.left_kernel(big, QQ)
    if len(K) != nd:
        raise NewModPError(f"new kernel has dim {len(K)} at level {d} weight {k}, expected {nd}")
    rows = [fb.combine(c, P) for c in K]
    H, _ = _saturate_forms(rows, L)
    return tuple(tuple(h[:prec]) for h in H)


# ---------------------------------------------------------------- char-0 structure

@dataclass(frozen=True)
class RowTag:
    kind: str            # Level1Monomial | OldEmbed | NewformFixture | EchelonDerived | Eisenstein | Constant
    source_level: int
    label: str
    embed: int = 1

    def __str__(self):
        if self.kind == "Constant":
            return "Constant(1)"
        if self.kind == "Eisenstein":
            return f"Eisenstein({self.label}, e={self.embed})"
        inner = f"{self.kind}({self.label})"
        if self.source_level != 0 and (self.embed != 1 or self.kind == "OldEmbed"):
            return f"OldEmbed(d={self.source_level}, e={self.embed}, {inner})"
        return inner


@dataclass
class Family:
    kind: str                 # cusp | eis | eis2 | const
    source_level: int
    labels: list
    forms: list               # coefficient lists (Fraction or int) at full precision
    embeds: list
    tag_kind: str = "EchelonDerived"


@dataclass
class SpaceParams:
    level: int
    weight: int
    ring: RingDesc
    prec: int
    cuspidal: bool = True

    def __post_init__(self):
        if not is_squarefree(self.level):
            raise Unsupported(f"level {self.level} is not squarefree")
        if self.weight % 2 or self.weight < 0:
            raise Unsupported("weights are even and nonnegative")
        p = self.ring.residue_char
        if p is not None and self.level % p == 0:
            raise Unsupported(f"residue characteristic {p} divides the level {self.level}")


class Char0Space:
    """The characteristic-zero skeleton behind every Space."""

    def __init__(self, level, weight, prec, cuspidal, families):
        self.level, self.weight, self.prec, self.cuspidal = level, weight, prec, cuspidal
        self.families = families
        self.presat = []
        self.tags = []
        self.row_family = []
        for fi, fam in enumerate(families):
            for hi, (h, lab) in enumerate(zip(fam.forms, fam.labels)):
                for e in fam.embeds:
                    if fam.kind in ("eis2", "const"):
                        if e != fam.embeds[0]:
                            continue
                        self.presat.append(list(h[:prec]))
                    else:
                        self.presat.append(_vcoeffs(h, e, prec))
                    self.tags.append(_tag(fam, lab, e))
                    self.row_family.append((fi, hi, e))
        self.L = sturm_bound(weight, level) + 1
        dd = dim_data(level, weight)
        self.expected = dd.dim_Sk if cuspidal else dd.dim_Mk
        if len(self.presat) != self.expected:
            raise IncompleteFixtures(level, weight, self.expected - len(self.presat))
        self.H, self.pivots = _saturate_forms(self.presat, self.L)
        self.basis = FormBasis(self.H, self.L)
        # presat = C * H
        self.C = []
        for r in self.presat:
            c = self.basis.coords([Fraction(x) for x in r])
            if c is None:
                raise NewModPError("pre-saturation row outside saturated span")
            self.C.append(c)
        self.Cinv = _inverse(self.C)
        self._cache = {}

    @property
    def dim(self):
        return len(self.H)

    def smith_index(self):
        """Elementary divisors of the pre-saturation lattice inside the saturated one."""
        den = lcm(*[x.denominator for r in self.C for x in r]) if self.C else 1
        M = [[int(x * den) for x in r] for r in self.C]
        return [Fraction(d, den) for d in la.smith_diagonal(M)]

    def coords(self, v):
        return self.basis.coords(v)

    def op_from_qexp(self, fn, key):
        """Matrix over QQ of a coefficient-list operator, in the saturated basis."""
        if key not in self._cache:
            rows = []
            for h in self.H:
                img = fn(h)
                c = self.basis.coords(img)
                if c is None:
                    from .errors import NotStable
                    raise NotStable(key, f"{key} leaves the span at level {self.level}")
                rows.append(c)
            self._cache[key] = rows
        return self._cache[key]

    def hecke(self, r):
        if self.prec < r * self.L:
            raise PrecisionTooLow(f"T_{r} needs prec {r * self.L}")
        return self.op_from_qexp(lambda c: _hecke_list(c, r, self.weight), ("T", r))

    def U(self, m):
        if self.prec < m * self.L:
            raise PrecisionTooLow(f"U_{m} needs prec {m * self.L}")
        return self.op_from_qexp(lambda c: _U_list(c, m), ("U", m))

    def W(self, ell):
        key = ("W", ell)
        if key not in self._cache:
            WP = self._W_presat(ell)
            self._cache[key] = la.matmul(la.matmul(self.Cinv, WP, QQ), self.C, QQ)
        return self._cache[key]

    def W_presat(self, ell):
        return self._W_presat(ell)

    def _W_presat(self, ell):
        M, k = self.level, self.weight
        if M % ell or (M // ell) % ell == 0:
            raise Unsupported(f"{ell} does not exactly divide {M}")
        n = len(self.presat)
        Wm = [[Fraction(0)] * n for _ in range(n)]
        index = {rf: i for i, rf in enumerate(self.row_family)}
        lk = Fraction(ell) ** k
        for fi, fam in enumerate(self.families):
            if fam.kind == "const":
                i = index[(fi, 0, fam.embeds[0])]
                Wm[i][i] = Fraction(1)
            elif fam.kind == "eis2":
                self._W_eis2(fi, fam, ell, Wm, index)
            elif fam.source_level % ell:
                for hi in range(len(fam.forms)):
                    for e in fam.embeds:
                        i = index[(fi, hi, e)]
                        if e % ell:
                            Wm[i][index[(fi, hi, e * ell)]] = lk
                        else:
                            Wm[i][index[(fi, hi, e // ell)]] = Fraction(1)
            else:
                blk = self._new_block_W(fam, ell)
                for hi in range(len(fam.forms)):
                    for e in fam.embeds:
                        i = index[(fi, hi, e)]
                        for hj in range(len(fam.forms)):
                            if blk[hi][hj]:
                                Wm[i][index[(fi, hj, e)]] = blk[hi][hj]
        return Wm

    def _new_block_W(self, fam, ell):
        # W = -ell U_ell on forms that are new at ell
        d, k = fam.source_level, self.weight
        L = sturm_bound(k, d) + 1
        fb = FormBasis(fam.forms, L)
        if fb.prec < ell * L:
            raise PrecisionTooLow(f"block at level {d} needs prec {ell * L} for U_{ell}")
        U = fb.op_matrix(lambda c: _U_list(c, ell))
        if any(r is None for r in U):
            raise NewModPError(f"new block at level {d} is not U_{ell}-stable")
        return [[-ell * x for x in r] for r in U]

    def _W_eis2(self, fi, fam, ell, Wm, index):
        # formal symbols E2(q^e), e | M; rows are E2 - e E2(q^e)
        es = divisors(self.level)
        pos = {e: i for i, e in enumerate(es)}
        k = self.weight

        def sym_row(e):
            v = [Fraction(0)] * len(es)
            v[pos[1]] += 1
            v[pos[e]] -= e
            return v

        def W_sym(v):
            out = [Fraction(0)] * len(es)
            for e, c in zip(es, v):
                if not c:
                    continue
                if e % ell:
                    out[pos[e * ell]] += c * Fraction(ell) ** k
                else:
                    out[pos[e // ell]] += c
            return out

        rows = [sym_row(e) for e in fam.embeds]
        ech = la.Echelon(rows, QQ)
        for hi, e in enumerate(fam.embeds):
            c = ech.coords(W_sym(rows[hi]))
            i = index[(fi, hi, fam.embeds[0])]
            for hj, x in enumerate(c):
                if x:
                    Wm[i][index[(fi, hj, fam.embeds[0])]] = x

    def old_new_rows(self, ell):
        """Indices of pre-saturation rows: (level-N embedded, W-images, ell-new)."""
        lvl, wimg, new = [], [], []
        for i, (fi, hi, e) in enumerate(self.row_family):
            fam = self.families[fi]
            if fam.kind != "cusp":
                continue
            if fam.source_level % ell == 0:
                new.append(i)
            elif e % ell:
                lvl.append(i)
            else:
                wimg.append(i)
        return lvl, wimg, new


def _vcoeffs(h, e, prec):
    out = [0] * prec
    for n in range(0, prec, e):
        m = n // e
        if m < len(h):
            out[n] = h[m]
        else:
            raise PrecisionTooLow("embedded form needs more coefficients")
    return out


def _tag(fam, lab, e):
    if fam.kind == "const":
        return RowTag("Constant", 1, "1")
    if fam.kind == "eis":
        return RowTag("Eisenstein", 1, lab, e)
    if fam.kind == "eis2":
        return RowTag("Eisenstein", 1, lab, 1)
    return RowTag(fam.tag_kind, fam.source_level, lab, e)


def _inverse(C):
    n = len(C)
    if n == 0:
        return []
    R, piv, T = la.rref(C, QQ)
    if len(piv) != n:
        raise NewModPError("singular change of basis")
    return T


def _new_block_family(d, k, M, prec, fixtures, derive):
    nd = new_dimension(d, k)
    if nd == 0:
        return None
    embeds = divisors(M // d)
    need = prec  # embedded rows h(q^e) need prec/e coefficients; e = 1 is the worst case
    if d == 1:
        rows = cusp_forms_qbasis(1, k, prec)
        labels = [f"1.{k}.m{i}" for i in range(len(rows))]
        return Family("cusp", 1, labels, [list(r) for r in rows], embeds, "Level1Monomial")
    from .fixtures import fixtures_for
    fx = [f for f in fixtures_for(fixtures, d, k) if f.coeff_ring is ZZ]
    fx.sort(key=lambda f: f.label)
    if len(fx) >= nd:
        if len(fx) > nd:
            raise NewModPError(f"{len(fx)} fixtures for a {nd}-dimensional new space at {d}.{k}")
        if min(f.prec for f in fx) >= need:
            forms = [[0] + list(f.an[: need - 1]) for f in fx]
            return Family("cusp", d, [f.label for f in fx], forms, embeds, "NewformFixture")
        if not derive:
            raise PrecisionTooLow(f"fixtures at {d}.{k} have {min(f.prec for f in fx)} coefficients, need {need}")
    elif not derive:
        raise IncompleteFixtures(d, k, nd - len(fx))
    rows = derived_new_block(d, k, prec)
    labels = [f"{d}.{k}.derived{i}" for i in range(len(rows))]
    return Family("cusp", d, labels, [list(r) for r in rows], embeds, "EchelonDerived")


_CHAR0_CACHE: dict = {}


def char0_space(level, weight, prec, cuspidal=True, fixtures=None, derive=True) -> Char0Space:
    key = (level, weight, prec, cuspidal, _fx_key(fixtures), derive)
    if key in _CHAR0_CACHE:
        return _CHAR0_CACHE[key]
    if weight % 2 or weight < 0:
        raise Unsupported("odd weight")
    if not is_squarefree(level):
        raise Unsupported("non-squarefree level")
    L = sturm_bound(weight, level) + 1
    if prec < L:
        raise PrecisionTooLow(f"prec {prec} below Sturm bound + 1 = {L}")
    fams = []
    for d in divisors(level):
        if weight >= 2:
            fam = _new_block_family(d, weight, level, prec, fixtures, derive)
            if fam is not None:
                fams.append(fam)
    if not cuspidal:
        if weight == 0:
            fams.append(Family("const", 1, ["1"], [[1] + [0] * (prec - 1)], [1]))
        elif weight == 2:
            es = divisors(level)[1:]
            forms = [list(_e2_diff(e, prec).coeffs) for e in es]
            fams.append(Family("eis2", 1, [f"E2-{e}E2(q^{e})" for e in es], forms, es))
        else:
            E = eisenstein(weight, QQ, prec)
            fams.append(Family("eis", 1, [f"E{weight}"], [list(E.coeffs)], divisors(level)))
    sp = Char0Space(level, weight, prec, cuspidal, fams)
    _CHAR0_CACHE[key] = sp
    return sp


def _fx_key(fixtures):
    if not fixtures:
        return ()
    return tuple(sorted((f.label, f.level, f.weight, len(f.an)) for f in fixtures))


# ---------------------------------------------------------------- public spaces

class Space:
    """A fixed-weight space over ZZ, QQ, Z/p^b or F_{p^m}.

    ``basis`` rows are coefficient lists in ``params.ring``.  Over residue
    rings they are reductions of the saturated integral basis.
    """

    def __init__(self, params: SpaceParams, char0: Char0Space, fixtures=None):
        self.params = params
        self.char0 = char0
        self.fixtures = fixtures
        R = params.ring
        P = params.prec
        self.saturated = True
        self.complete = char0.dim == char0.expected
        self.provenance = list(char0.tags)
        if isinstance(R, Integers):
            self.basis = [list(h[:P]) for h in char0.H]
        elif isinstance(R, Rationals):
            self.basis = [[Fraction(x) for x in h[:P]] for h in char0.H]
        else:
            self.basis = [[R.coerce(x) for x in h[:P]] for h in char0.H]
        self._ech = None

    @property
    def ring(self):
        return self.params.ring

    @property
    def level(self):
        return self.params.level

    @property
    def weight(self):
        return self.params.weight

    @property
    def prec(self):
        return self.params.prec

    @property
    def dim(self):
        return len(self.basis)

    @property
    def pivots(self):
        return list(self.char0.pivots)

    def row(self, i) -> QExp:
        return QExp(self.ring, self.basis[i])

    def form(self, coords) -> QExp:
        """q-expansion of the combination sum c_i basis_i."""
        R = self.ring
        out = [R.zero] * self.prec
        for c, row in zip(coords, self.basis):
            if R.is_zero(c):
                continue
            out = [R.add(x, R.mul(c, y)) for x, y in zip(out, row)]
        return QExp(R, out)

    def reduce_matrix(self, A):
        """Image in this space's ring of a QQ matrix (p-integrality checked)."""
        R = self.ring
        if isinstance(R, Rationals):
            return [list(r) for r in A]
        if isinstance(R, Integers):
            return [[R.coerce(x) for x in r] for r in A]
        out = []
        for r in A:
            row = []
            for x in r:
                if isinstance(x, Fraction) and x.denominator % R.residue_char == 0:
                    from .errors import NotPIntegral
                    raise NotPIntegral(-1, "operator matrix is not p-integral")
                row.append(R.coerce(x))
            out.append(row)
        return out

    def coords(self, f) -> list | None:
        return member(self, f)


def member(space, f: QExp):
    """Coordinates of f in the space (to the space's precision), or None."""
    if f.prec < space.prec:
        raise PrecisionTooLow(f"series has prec {f.prec}, space needs {space.prec}")
    R = space.ring
    v = list(f.coeffs[: space.prec])
    if R.is_field and not isinstance(R, Rationals):
        if space._ech is None:
            space._ech = la.Echelon(space.basis, R)
        return space._ech.coords([R.coerce(x) if not isinstance(x, tuple) else x for x in v])
    if isinstance(R, (Integers, Rationals)):
        c = space.char0.coords([Fraction(x) for x in v])
        if c is None:
            return None
        if isinstance(R, Integers):
            if any(x.denominator != 1 for x in c):
                return None
            return [int(x) for x in c]
        return c
    # Z/p^b: unimodular change of basis on the pivot columns over ZZ_(p)
    if space._ech is None:
        space._ech = _ZpbSolver(space)
    return space._ech.coords(v)


class _ZpbSolver:
    """Solve in a reduced saturated basis over Z/p^b."""

    def __init__(self, space):
        self.space = space
        H = space.char0.H
        R = space.ring
        # columns with a square invertible minor mod p: greedy over F_p
        F = FiniteField(R.p)
        rows = [[F.coerce(x) for x in h[: space.prec]] for h in H]
        cols = []
        chosen = []
        for j in range(space.prec):
            trial = chosen + [[r[j] for r in rows]]
            if la.rank(trial, F) > len(chosen):
                chosen = trial
                cols.append(j)
            if len(cols) == len(H):
                break
        self.cols = cols
        A = [[Fraction(h[j]) for j in cols] for h in H]  # n x n
        Ainv = _inverse(A)
        self.Ainv = [[R.coerce(x) for x in r] for r in Ainv]

    def coords(self, v):
        R = self.space.ring
        sub = [v[j] for j in self.cols]
        c = [R.zero] * len(sub)
        for i, x in enumerate(sub):
            if not R.is_zero(x):
                c = [R.add(a, R.mul(x, b)) for a, b in zip(c, self.Ainv[i])]
        got = self.space.form(c)
        if not all(R.eq(a, b) for a, b in zip(got.coeffs, v)):
            return None
        return c


def build_level1(k: int, ring: RingDesc, prec: int, cuspidal: bool = False) -> Space:
    if prec < sturm_bound(k, 1) + 1:
        raise PrecisionTooLow("prec below Sturm bound")
    return build_space(SpaceParams(1, k, ring, prec, cuspidal))


def build_space(params: SpaceParams, fixtures=None, derive: bool = True) -> Space:
    c0 = char0_space(params.level, params.weight, params.prec, params.cuspidal, fixtures, derive)
    return Space(params, c0, fixtures)


# ---------------------------------------------------------------- graded spaces

def graded_top_weight(p, kappa, kmax):
    """A weight K with every graded row inside M_K(F_p)."""
    if p in (2, 3):
        return kmax + 4
    k = kmax
    while (k - kappa) % (p - 1):
        k -= 1
    return k


@dataclass
class GradedSpace:
    level: int
    p: int
    kappa: int
    kmax: int
    prec: int
    cuspidal: bool
    ring: FiniteField
    rows: list                  # F_p coefficient lists
    row_weight: list
    row_source: list            # (k, index into that weight's saturated basis)
    weight_profile: dict        # k -> incremental dimension
    weights: list
    char0: dict = field(default_factory=dict)       # k -> Char0Space (level > 1)
    red_coords: dict = field(default_factory=dict)  # k -> coords of each reduced H_k row
    top_weight: int = 0
    fixtures: list = None

    @property
    def dim(self):
        return len(self.rows)

    @property
    def basis(self):
        return self.rows

    def row(self, i):
        return QExp(self.ring, self.rows[i])

    def echelon(self):
        if not hasattr(self, "_ech"):
            self._ech = la.Echelon(self.rows, self.ring)
        return self._ech

    def coords(self, v):
        """Coordinates of a coefficient list; certified if len(v) > Sturm bound of the top weight."""
        L = sturm_bound(self.top_weight, self.level) + 1
        if len(v) < L:
            raise PrecisionTooLow(f"need {L} coefficients, have {len(v)}")
        if not self.rows:
            return [] if not any(x % self.p for x in v) else None
        n = min(len(v), self.prec)
        ech = self._prefix_echelon(n)
        return ech.coords([x % self.p for x in v[:n]])

    def _prefix_echelon(self, n):
        if not hasattr(self, "_pech"):
            self._pech = {}
        if n not in self._pech:
            self._pech[n] = la.Echelon([r[:n] for r in self.rows], self.ring, n)
        return self._pech[n]

    def form(self, coords):
        p = self.p
        out = [0] * self.prec
        for c, row in zip(coords, self.rows):
            if c % p:
                out = [(x + c * y) % p for x, y in zip(out, row)]
        return out

    def member(self, f: QExp):
        return self.coords(list(f.coeffs))


def graded_prec(level, p, kappa, kmax, primes=()):
    """Precision giving U_p, U_l (l | level) and T_r (r in primes) certified images."""
    if p in (2, 3):
        kappa = 0
    K = graded_top_weight(p, kappa % max(p - 1, 1), kmax)
    L = sturm_bound(K, level) + 1
    top = max([p] + prime_factors(level) + list(primes))
    return top * (L - 1) + 1 + top


@lru_cache(maxsize=None)
def _delta_power_mod(j, p, prec):
    D = eta_delta(FiniteField(p), prec)
    return list(qexp_pow(D, j).coeffs) if j else [1] + [0] * (prec - 1)


def graded_space(level, p, kappa=0, kmax=12, prec=None, fixtures=None, cuspidal=False,
                 derive=True, ring=None) -> GradedSpace:
    if not is_prime(p):
        raise Unsupported(f"{p} is not prime")
    if level % p == 0:
        raise Unsupported(f"p = {p} divides the level")
    if kmax % 2:
        raise Unsupported("kmax must be even")
    if p in (2, 3):
        kappa = 0
    kappa %= max(p - 1, 1)
    if kappa % 2:
        raise Unsupported("grading class must be even")
    K = graded_top_weight(p, kappa, kmax)
    L = sturm_bound(K, level) + 1
    if prec is None:
        prec = graded_prec(level, p, kappa, kmax)
    if prec < p * L:
        raise PrecisionTooLow(f"graded space needs prec >= {p * L}")
    F = FiniteField(p) if ring is None else ring
    weights = [k for k in range(0 if not cuspidal else 2, kmax + 1, 2)
               if p in (2, 3) or (k - kappa) % (p - 1) == 0]
    rows, rw, rs, prof = [], [], [], {}
    c0s, reds = {}, {}
    cur_rows = []
    cur_piv = []
    for k in weights:
        if level == 1 and p in (2, 3):
            # E4 and E6 reduce to 1, so the weight-k span is new only in Delta^(k/12)
            Hk = []
            if k % 12 == 0 and not (cuspidal and k == 0):
                Hk = [_delta_power_mod(k // 12, p, prec)]
        elif level == 1:
            Hk = [[x % p for x in f.coeffs] for f in
                  _level1_monomials(k, prec, cusp_only=cuspidal, ring=FiniteField(p))]
        else:
            if (cuspidal and dim_data(level, k).dim_Sk == 0) or (not cuspidal and dim_data(level, k).dim_Mk == 0):
                prof[k] = 0
                continue
            c0 = char0_space(level, k, prec, cuspidal, fixtures, derive)
            c0s[k] = c0
            Hk = [[x % p for x in h] for h in c0.H]
        before = len(rows)
        for i, v in enumerate(Hk):
            w = list(v)
            for row, c in zip(cur_rows, cur_piv):
                f = w[c]
                if f:
                    w = [(x - f * y) % p for x, y in zip(w, row)]
            c = next((j for j, x in enumerate(w) if x), None)
            if c is None:
                continue
            inv = pow(w[c], -1, p)
            w = [x * inv % p for x in w]
            # keep cur_rows reduced at pivot columns
            for t in range(len(cur_rows)):
                f = cur_rows[t][c]
                if f:
                    cur_rows[t] = [(x - f * y) % p for x, y in zip(cur_rows[t], w)]
            cur_rows.append(w)
            cur_piv.append(c)
            rows.append(list(v))
            rw.append(k)
            rs.append((k, i))
        prof[k] = len(rows) - before
        reds[k] = Hk
    gs = GradedSpace(level, p, kappa, kmax, prec, cuspidal, F, rows, rw, rs, prof, weights,
                     c0s, {}, K, fixtures)
    if F.m > 1:
        raise Unsupported("graded spaces are built over the prime field; extend scalars later")
    for k, Hk in reds.items():
        gs.red_coords[k] = [gs.coords(v) for v in Hk]
    return gs
