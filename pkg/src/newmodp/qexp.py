"""Truncated q-expansions with explicit precision.

A ``QExp`` knows a_0, ..., a_{prec-1} and nothing else.  Every operation
returns the exact precision it can certify, so equality is always asked
"to precision P" through :meth:`QExp.agrees`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, lcm

from .errors import NonIntegralSeries, NotPIntegral, PrecisionTooLow, RingMismatch, Unsupported
from .rings import (
    QQ,
    ZZ,
    FiniteField,
    Integers,
    Rationals,
    RingDesc,
    ZmodPB,
    modulus_of,
    prime_factors,
    same_ring,
)


class QExp:
    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: RingDesc, coeffs):
        if len(coeffs) < 1:
            raise PrecisionTooLow("a q-expansion needs prec >= 1")
        self.ring = ring
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_ints(cls, ring: RingDesc, values, prec: int | None = None):
        vals = list(values)
        if prec is not None:
            if prec > len(vals):
                vals = vals + [0] * (prec - len(vals))
            vals = vals[:prec]
        return cls(ring, [ring.coerce(v) for v in vals])

    @classmethod
    def zero(cls, ring: RingDesc, prec: int):
        return cls(ring, [ring.zero] * prec)

    @classmethod
    def constant(cls, ring: RingDesc, c, prec: int):
        return cls(ring, [ring.coerce(c)] + [ring.zero] * (prec - 1))

    @property
    def prec(self) -> int:
        return len(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        if isinstance(n, slice):
            return self.coeffs[n]
        if n >= len(self.coeffs):
            raise PrecisionTooLow(f"a_{n} unknown at prec {self.prec}")
        return self.coeffs[n]

    def __iter__(self):
        return iter(self.coeffs)

    def __eq__(self, other):
        raise TypeError("q-expansions only compare to a precision; use agrees()")

    __hash__ = object.__hash__

    def agrees(self, other: "QExp", prec: int | None = None) -> bool:
        """Equal coefficients for n < prec (default: the common precision)."""
        _check_ring(self, other)
        P = min(self.prec, other.prec) if prec is None else prec
        if P > self.prec or P > other.prec:
            raise PrecisionTooLow(f"cannot compare to {P}")
        R = self.ring
        return all(R.eq(self.coeffs[i], other.coeffs[i]) for i in range(P))

    def is_zero(self, prec: int | None = None) -> bool:
        P = self.prec if prec is None else prec
        return all(self.ring.is_zero(c) for c in self.coeffs[:P])

    def truncate(self, prec: int) -> "QExp":
        if prec > self.prec:
            raise PrecisionTooLow(f"cannot raise precision {self.prec} to {prec}")
        return QExp(self.ring, self.coeffs[:prec])

    def valuation(self):
        for i, c in enumerate(self.coeffs):
            if not self.ring.is_zero(c):
                return i
        return None

    def __add__(self, other):
        return qexp_add(self, other)

    def __sub__(self, other):
        return qexp_add(self, -other)

    def __neg__(self):
        R = self.ring
        return QExp(R, [R.neg(c) for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, QExp):
            return qexp_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "QExp":
        R = self.ring
        c = R.coerce(c) if not isinstance(c, tuple) else c
        return QExp(R, [R.mul(c, a) for a in self.coeffs])

    def to_list(self):
        return list(self.coeffs)

    def fmt(self, terms: int | None = None) -> str:
        R = self.ring
        n = self.prec if terms is None else min(terms, self.prec)
        parts = []
        for i in range(n):
            c = self.coeffs[i]
            if R.is_zero(c):
                continue
            s = R.fmt(c)
            mono = "" if i == 0 else ("q" if i == 1 else f"q^{i}")
            if i == 0:
                parts.append(s)
            elif s == "1":
                parts.append(mono)
            elif s == "-1":
                parts.append("-" + mono)
            else:
                parts.append(f"{s}*{mono}")
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        return f"{body} + O(q^{n})"

    def __repr__(self):
        return f"QExp({self.ring}, {self.fmt(8)})"


@dataclass(frozen=True)
class WeightedForm:
    series: QExp
    weight: int
    level: int

    def __post_init__(self):
        if self.weight % 2 or self.weight < 0:
            raise Unsupported("weights are even and nonnegative")
        if self.level < 1:
            raise Unsupported("level must be positive")


def _check_ring(f: QExp, g: QExp):
    if not same_ring(f.ring, g.ring):
        raise RingMismatch(f"{f.ring} vs {g.ring}")


def qexp_add(f: QExp, g: QExp) -> QExp:
    _check_ring(f, g)
    P = min(f.prec, g.prec)
    R = f.ring
    return QExp(R, [R.add(f.coeffs[i], g.coeffs[i]) for i in range(P)])


# ---- Kronecker substitution ----

def _pack_signed(vals, w):
    bias = 1 << (w - 1)
    nb = w // 8
    data = b"".join((v + bias).to_bytes(nb, "little") for v in vals)
    return int.from_bytes(data, "little") - _bias_int(len(vals), w)


@lru_cache(maxsize=256)
def _bias_int(n, w):
    nb = w // 8
    chunk = (1 << (w - 1)).to_bytes(nb, "little")
    return int.from_bytes(chunk * n, "little")


def _unpack_signed(x, n, w):
    nb = w // 8
    y = x + _bias_int(n, w)
    data = y.to_bytes(n * nb, "little")
    bias = 1 << (w - 1)
    return [int.from_bytes(data[i * nb:(i + 1) * nb], "little") - bias for i in range(n)]


def int_poly_mul(a, b, keep: int):
    """First `keep` coefficients of the product of integer lists a, b."""
    a, b = a[:keep], b[:keep]
    if not a or not b:
        return [0] * keep
    ma = max(abs(x) for x in a)
    mb = max(abs(x) for x in b)
    if ma == 0 or mb == 0:
        return [0] * keep
    bound = ma * mb * min(len(a), len(b))
    w = bound.bit_length() + 2
    w = (w + 7) // 8 * 8
    n = min(len(a) + len(b) - 1, keep)
    prod = _pack_signed(a, w) * _pack_signed(b, w)
    # unpack the full product, then truncate
    total = len(a) + len(b) - 1
    out = _unpack_signed(prod, total, w)[:n]
    return out + [0] * (keep - n)


def _modn_poly_mul(a, b, keep, n):
    a, b = a[:keep], b[:keep]
    bound = (n - 1) * (n - 1) * min(len(a), len(b))
    w = max(8, (bound.bit_length() + 8) // 8 * 8)
    nb = w // 8
    A = int.from_bytes(b"".join(x.to_bytes(nb, "little") for x in a), "little")
    B = int.from_bytes(b"".join(x.to_bytes(nb, "little") for x in b), "little")
    total = len(a) + len(b) - 1
    data = (A * B).to_bytes(total * nb + nb, "little")
    m = min(total, keep)
    out = [int.from_bytes(data[i * nb:(i + 1) * nb], "little") % n for i in range(m)]
    return out + [0] * (keep - m)


def qexp_mul(f: QExp, g: QExp) -> QExp:
    _check_ring(f, g)
    P = min(f.prec, g.prec)
    R = f.ring
    if isinstance(R, Integers):
        return QExp(R, int_poly_mul(list(f.coeffs), list(g.coeffs), P))
    if isinstance(R, Rationals):
        da = lcm(*[c.denominator for c in f.coeffs[:P]])
        db = lcm(*[c.denominator for c in g.coeffs[:P]])
        A = [int(c * da) for c in f.coeffs[:P]]
        B = [int(c * db) for c in g.coeffs[:P]]
        d = da * db
        return QExp(R, [Fraction(c, d) for c in int_poly_mul(A, B, P)])
    n = modulus_of(R)
    if n is not None:
        return QExp(R, _modn_poly_mul(list(f.coeffs), list(g.coeffs), P, n))
    if isinstance(R, FiniteField):
        return QExp(R, _ext_field_mul(R, f.coeffs[:P], g.coeffs[:P], P))
    raise Unsupported(f"multiplication over {R}")


def _ext_field_mul(F: FiniteField, a, b, keep):
    # bivariate Kronecker: q^i z^j -> slot i*(2m-1) + j
    m, p = F.m, F.p
    stride = 2 * m - 1
    A = [0] * (len(a) * stride)
    B = [0] * (len(b) * stride)
    for i, el in enumerate(a):
        for j, c in enumerate(el):
            A[i * stride + j] = c
    for i, el in enumerate(b):
        for j, c in enumerate(el):
            B[i * stride + j] = c
    prod = _modn_poly_mul(A, B, keep * stride, p)
    mod = F.modulus
    out = []
    for i in range(keep):
        chunk = prod[i * stride:(i + 1) * stride]
        # reduce the z-polynomial of degree <= 2m-2
        for d in range(len(chunk) - 1, m - 1, -1):
            c = chunk[d]
            if c:
                for t in range(m + 1):
                    chunk[d - m + t] = (chunk[d - m + t] - c * mod[t]) % p
        out.append(tuple(chunk[:m]))
    return out


def qexp_pow(f: QExp, e: int) -> QExp:
    result = QExp.constant(f.ring, 1, f.prec)
    base = f
    while e:
        if e & 1:
            result = result * base
        e >>= 1
        if e:
            base = base * base
    return result


def apply_U(f: QExp, m: int) -> QExp:
    if m < 1:
        raise Unsupported("U_m needs m >= 1")
    P = -(-f.prec // m)
    return QExp(f.ring, f.coeffs[0:m * (P - 1) + 1:m])


def apply_V(f: QExp, m: int) -> QExp:
    if m < 1:
        raise Unsupported("V_m needs m >= 1")
    R = f.ring
    out = [R.zero] * (f.prec * m)
    out[::m] = f.coeffs
    return QExp(R, out)


def reduce_mod(f: QExp, target: RingDesc) -> QExp:
    """Coefficientwise image in Z/p^b or F_{p^m}."""
    src = f.ring
    if not isinstance(target, (ZmodPB, FiniteField)):
        raise Unsupported(f"cannot reduce into {target}")
    if isinstance(src, ZmodPB):
        if src.p != target.residue_char:
            raise RingMismatch(f"{src} does not map to {target}")
        if isinstance(target, ZmodPB) and target.b > src.b:
            raise RingMismatch(f"{src} does not map to {target}")
        return QExp(target, [target.coerce(c) for c in f.coeffs])
    if isinstance(src, FiniteField):
        if not same_ring(src, target) and src != target:
            raise RingMismatch(f"{src} does not map to {target}")
        return QExp(target, f.coeffs)
    out = []
    p = target.residue_char
    for i, c in enumerate(f.coeffs):
        if isinstance(c, Fraction) and c.denominator % p == 0:
            raise NotPIntegral(i)
        out.append(target.coerce(c))
    return QExp(target, out)


def change_ring(f: QExp, target: RingDesc) -> QExp:
    """Move a series from ZZ to QQ, from QQ to ZZ, or into a residue ring."""
    if isinstance(target, Rationals):
        if isinstance(f.ring, (Integers, Rationals)):
            return QExp(QQ, [Fraction(c) for c in f.coeffs])
        raise RingMismatch("no map from a residue ring to QQ")
    if isinstance(target, Integers):
        return QExp(ZZ, [ZZ.coerce(c) for c in f.coeffs])
    return reduce_mod(f, target)


# ---- classical series ----

def _pentagonal(prec):
    """prod_{n>=1} (1 - q^n) to prec, over ZZ."""
    out = [0] * prec
    k = 0
    while True:
        hit = False
        for kk in ((k, -k) if k else (0,)):
            e = kk * (3 * kk - 1) // 2
            if e < prec:
                out[e] += -1 if kk % 2 else 1
                hit = True
        if not hit:
            break
        k += 1
    return out


def eta_delta(ring: RingDesc, prec: int) -> QExp:
    """Delta = q prod (1 - q^n)^24."""
    if prec < 1:
        raise PrecisionTooLow("prec >= 1")
    if prec == 1:
        return QExp.zero(ring, 1)
    base = QExp.from_ints(ZZ, _pentagonal(prec - 1))
    if not isinstance(ring, (Integers, Rationals)):
        base = reduce_mod(base, ring)
    e2 = base * base
    e4 = e2 * e2
    e8 = e4 * e4
    e16 = e8 * e8
    e24 = e16 * e8
    out = QExp(e24.ring, (e24.ring.zero,) + e24.coeffs)
    if isinstance(ring, Rationals):
        out = change_ring(out, QQ)
    return out


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """B_n with B_1 = -1/2, from sum_{j<=m} C(m+1, j) B_j = 0."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        s = sum(comb(m + 1, j) * B[j] for j in range(m))
        B.append(-s / (m + 1))
    return B[n]


def sigma_list(j: int, prec: int) -> list[int]:
    """[sigma_j(n) for n < prec], with sigma_j(0) = 0."""
    out = [0] * prec
    for d in range(1, prec):
        dj = d ** j
        for n in range(d, prec, d):
            out[n] += dj
    return out


def sigma(n: int, j: int) -> int:
    return sum(d ** j for d in range(1, n + 1) if n % d == 0)


def eisenstein(k: int, ring: RingDesc, prec: int, normalization: str = "constant") -> QExp:
    """Level one E_k.  'constant': a_0 = 1.  'a1': a_1 = 1."""
    if k < 2 or k % 2:
        raise Unsupported("E_k needs even k >= 2")
    Bk = bernoulli(k)
    sig = sigma_list(k - 1, prec)
    if normalization == "constant":
        c = Fraction(-2 * k) / Bk
        vals = [Fraction(1)] + [c * s for s in sig[1:]]
    elif normalization == "a1":
        vals = [-Bk / (2 * k)] + [Fraction(s) for s in sig[1:]]
    else:
        raise Unsupported(f"normalization {normalization!r}")
    vals = vals[:prec]
    if isinstance(ring, Rationals):
        return QExp(QQ, vals)
    if isinstance(ring, Integers):
        for v in vals:
            if v.denominator != 1:
                raise NonIntegralSeries(f"E_{k} is not integral in this normalization")
        return QExp(ZZ, [int(v) for v in vals])
    return reduce_mod(QExp(QQ, vals), ring)


def index_mu(M: int) -> int:
    mu = M
    for r in prime_factors(M):
        mu = mu // r * (r + 1)
    return mu


def sturm_bound(k: int, M: int) -> int:
    return k * index_mu(M) // 12
