"""Coefficient rings: ZZ, QQ, Z/p^b and F_{p^m}.

Elements are plain Python values so hot loops stay cheap: ``int`` for ZZ,
``Fraction`` for QQ, ``int`` reduced into ``[0, n)`` for Z/n and F_p, and a
tuple of ``m`` ints (low degree first) for F_{p^m} with m > 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import NonUnit, NotPIntegral, NonIntegralSeries, Unsupported


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in (2, 3, 5, 7, 11, 13):
        if n % d == 0:
            return n == d
    d = 17
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_squarefree(n: int) -> bool:
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return n >= 1


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


# ---- dense polynomials over F_p, coefficient lists low degree first ----

def _ptrim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def pmod(a, f, p):
    a = [c % p for c in a]
    _ptrim(a)
    df = len(f) - 1
    inv = pow(f[-1], -1, p)
    while len(a) - 1 >= df:
        c = a[-1] * inv % p
        shift = len(a) - 1 - df
        for i, fc in enumerate(f):
            a[shift + i] = (a[shift + i] - c * fc) % p
        _ptrim(a)
    return a


def pmulmod(a, b, f, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return pmod(out, f, p)


def pgcd(a, b, p):
    a, b = _ptrim([c % p for c in a]), _ptrim([c % p for c in b])
    while b:
        a, b = b, pmod(a, b, p)
    if a:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def is_irreducible_mod_p(f, p) -> bool:
    """Rabin-style test: no factor of degree <= deg/2."""
    m = len(f) - 1
    if m <= 0:
        return False
    if m == 1:
        return True
    x = [0, 1]
    xp = x
    for _ in range(m // 2):
        # xp <- xp^p mod f
        res, base, e = [1], xp, p
        while e:
            if e & 1:
                res = pmulmod(res, base, f, p)
            base = pmulmod(base, base, f, p)
            e >>= 1
        xp = res
        diff = list(xp) + [0] * max(0, 2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        if len(pgcd(f, diff, p)) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def least_irreducible(p: int, m: int) -> tuple:
    """Least monic irreducible of degree m, ordering by (c_{m-1}, ..., c_0)."""
    for code in range(p ** m):
        digits = [(code // p ** i) % p for i in range(m)]
        # code's most significant digit is c_{m-1}
        coeffs = digits + [1]
        if m > 1 and coeffs[0] == 0:
            continue
        if is_irreducible_mod_p(coeffs, p):
            return tuple(coeffs)
    raise Unsupported(f"no irreducible of degree {m} over F_{p}")


class RingDesc:
    kind = "abstract"
    is_field = False
    characteristic = 0
    residue_char: int | None = None

    zero = 0
    one = 1

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def is_zero(self, a):
        return a == 0

    def eq(self, a, b):
        return self.is_zero(self.sub(a, b))

    def pow(self, a, n: int):
        if n < 0:
            return self.pow(self.inv(a), -n)
        r, base = self.one, a
        while n:
            if n & 1:
                r = self.mul(r, base)
            base = self.mul(base, base)
            n >>= 1
        return r

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def fmt(self, a) -> str:
        return str(a)

    def key(self, a):
        return a


@dataclass(frozen=True)
class Integers(RingDesc):
    kind = "Integers"

    def coerce(self, x):
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise NonIntegralSeries(f"{x} is not an integer")
            return x.numerator
        return int(x)

    def is_unit(self, a):
        return a in (1, -1)

    def inv(self, a):
        if a in (1, -1):
            return a
        raise NonUnit(f"{a} is not a unit in ZZ")

    def __str__(self):
        return "ZZ"


@dataclass(frozen=True)
class Rationals(RingDesc):
    kind = "Rationals"
    is_field = True
    zero = Fraction(0)
    one = Fraction(1)

    def coerce(self, x):
        return Fraction(x)

    def is_unit(self, a):
        return a != 0

    def inv(self, a):
        if a == 0:
            raise NonUnit("0 is not invertible")
        return 1 / Fraction(a)

    def __str__(self):
        return "QQ"


@dataclass(frozen=True)
class ZmodPB(RingDesc):
    """Z/p^b; F_p is the case b = 1 and is reported as a field."""

    p: int
    b: int = 1
    n: int = field(init=False, repr=False, compare=False)

    kind = "ZmodPB"

    def __post_init__(self):
        if not is_prime(self.p) or self.b < 1:
            raise Unsupported(f"Z/{self.p}^{self.b} is not a supported ring")
        object.__setattr__(self, "n", self.p ** self.b)

    @property
    def is_field(self):
        return self.b == 1

    @property
    def characteristic(self):
        return self.n

    @property
    def residue_char(self):
        return self.p

    def coerce(self, x, index=None):
        if isinstance(x, Fraction):
            d = x.denominator
            if d % self.p == 0:
                raise NotPIntegral(index if index is not None else -1)
            return x.numerator * pow(d, -1, self.n) % self.n
        return int(x) % self.n

    def add(self, a, b):
        return (a + b) % self.n

    def sub(self, a, b):
        return (a - b) % self.n

    def neg(self, a):
        return -a % self.n

    def mul(self, a, b):
        return a * b % self.n

    def is_zero(self, a):
        return a % self.n == 0

    def is_unit(self, a):
        return a % self.p != 0

    def inv(self, a):
        if a % self.p == 0:
            raise NonUnit(f"{a} is not a unit mod {self.n}")
        return pow(a, -1, self.n)

    def pow(self, a, n):
        if n < 0:
            return pow(self.inv(a), -n, self.n)
        return pow(a, n, self.n)

    def lift(self, a) -> int:
        """Symmetric integer representative."""
        a %= self.n
        return a - self.n if a > self.n // 2 else a

    def fmt(self, a):
        return str(a % self.n)

    def __str__(self):
        return f"F{self.p}" if self.b == 1 else f"Z/{self.p}^{self.b}"


@dataclass(frozen=True)
class FiniteField(RingDesc):
    """F_{p^m} = F_p[x]/(modulus)."""

    p: int
    m: int = 1
    modulus: tuple = None

    kind = "FiniteField"
    is_field = True

    def __post_init__(self):
        if not is_prime(self.p) or self.m < 1:
            raise Unsupported(f"F_{self.p}^{self.m} is not a supported field")
        if self.modulus is None:
            object.__setattr__(self, "modulus", least_irreducible(self.p, self.m))
        mod = tuple(c % self.p for c in self.modulus)
        if len(mod) != self.m + 1 or mod[-1] != 1 or not is_irreducible_mod_p(list(mod), self.p):
            raise Unsupported(f"modulus {self.modulus} is not monic irreducible of degree {self.m}")
        object.__setattr__(self, "modulus", mod)

    @property
    def characteristic(self):
        return self.p

    @property
    def residue_char(self):
        return self.p

    @property
    def order(self):
        return self.p ** self.m

    @property
    def zero(self):
        return 0 if self.m == 1 else (0,) * self.m

    @property
    def one(self):
        return 1 if self.m == 1 else (1,) + (0,) * (self.m - 1)

    def coerce(self, x, index=None):
        if isinstance(x, tuple):
            if len(x) != self.m:
                raise Unsupported("bad element length")
            return tuple(c % self.p for c in x)
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise NotPIntegral(index if index is not None else -1)
            v = x.numerator * pow(x.denominator, -1, self.p) % self.p
        else:
            v = int(x) % self.p
        return v if self.m == 1 else (v,) + (0,) * (self.m - 1)

    def gen(self):
        if self.m == 1:
            raise Unsupported("prime field has no stored generator")
        return (0, 1) + (0,) * (self.m - 2)

    def add(self, a, b):
        if self.m == 1:
            return (a + b) % self.p
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def sub(self, a, b):
        if self.m == 1:
            return (a - b) % self.p
        return tuple((x - y) % self.p for x, y in zip(a, b))

    def neg(self, a):
        if self.m == 1:
            return -a % self.p
        return tuple(-x % self.p for x in a)

    def mul(self, a, b):
        if self.m == 1:
            return a * b % self.p
        r = pmulmod(list(a), list(b), list(self.modulus), self.p)
        return tuple(r) + (0,) * (self.m - len(r))

    def is_zero(self, a):
        if self.m == 1:
            return a % self.p == 0
        return not any(a)

    def is_unit(self, a):
        return not self.is_zero(a)

    def inv(self, a):
        if self.is_zero(a):
            raise NonUnit("0 is not invertible")
        if self.m == 1:
            return pow(a, -1, self.p)
        return RingDesc.pow(self, a, self.order - 2)

    def pow(self, a, n):
        if self.m == 1:
            if n < 0:
                return pow(self.inv(a), -n, self.p)
            return pow(a, n, self.p)
        return RingDesc.pow(self, a, n)

    def elements(self):
        """All field elements in a fixed order (0 first)."""
        if self.m == 1:
            return list(range(self.p))
        out = []
        for code in range(self.order):
            out.append(tuple((code // self.p ** i) % self.p for i in range(self.m)))
        return out

    def from_prime_field(self, v: int):
        return self.coerce(v)

    def lift(self, a) -> int:
        if self.m != 1:
            raise Unsupported("lift only for prime fields")
        a %= self.p
        return a - self.p if a > self.p // 2 else a

    def fmt(self, a):
        if self.m == 1:
            return str(a % self.p)
        terms = []
        for i, c in enumerate(a):
            if c:
                mono = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
                if i == 0:
                    terms.append(str(c))
                else:
                    terms.append(mono if c == 1 else f"{c}*{mono}")
        return "+".join(terms) if terms else "0"

    def __str__(self):
        return f"F{self.p}" if self.m == 1 else f"F{self.p}^{self.m}"


ZZ = Integers()
QQ = Rationals()


def GF(p: int, m: int = 1) -> FiniteField:
    return FiniteField(p, m)


def Zmod(p: int, b: int = 1) -> ZmodPB:
    return ZmodPB(p, b)


def parse_ring(text: str) -> RingDesc:
    """Parse 'Z', 'Q', 'F7', 'F2^3', 'Z/7^2'."""
    t = text.strip()
    if t in ("Z", "ZZ"):
        return ZZ
    if t in ("Q", "QQ"):
        return QQ
    if t.startswith("Z/"):
        body = t[2:]
        if "^" in body:
            p, b = body.split("^")
            return ZmodPB(int(p), int(b))
        return ZmodPB(int(body), 1)
    if t.startswith("F") or t.startswith("GF"):
        body = t[2:] if t.startswith("GF") else t[1:]
        if "^" in body:
            p, m = body.split("^")
            return FiniteField(int(p), int(m))
        return FiniteField(int(body), 1)
    raise Unsupported(f"unknown ring {text!r}")


def is_prime_field(R: RingDesc) -> bool:
    return (isinstance(R, FiniteField) and R.m == 1) or (isinstance(R, ZmodPB) and R.b == 1)


def modulus_of(R: RingDesc) -> int | None:
    """n when elements of R are ints mod n (Z/p^b or a prime field)."""
    if isinstance(R, ZmodPB):
        return R.n
    if isinstance(R, FiniteField) and R.m == 1:
        return R.p
    return None


def same_ring(R: RingDesc, S: RingDesc) -> bool:
    if is_prime_field(R) and is_prime_field(S):
        return R.residue_char == S.residue_char
    return R == S
