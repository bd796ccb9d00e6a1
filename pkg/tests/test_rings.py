from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from newmodp.errors import Unsupported
from newmodp.rings import (
    QQ, ZZ, FiniteField, ZmodPB, divisors, is_irreducible_mod_p, is_prime, is_squarefree,
    least_irreducible, parse_ring, prime_factors,
)

FIELDS = [FiniteField(2), FiniteField(7), FiniteField(2, 3), FiniteField(5, 2), FiniteField(3, 4)]


def test_prime_helpers():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert prime_factors(360) == [2, 3, 5]
    assert is_squarefree(15) and not is_squarefree(18)
    assert divisors(12) == [1, 2, 3, 4, 6, 12]


@pytest.mark.parametrize("p,m", [(2, 1), (2, 4), (3, 2), (5, 3), (7, 2)])
def test_least_irreducible_is_irreducible(p, m):
    f = least_irreducible(p, m)
    assert len(f) == m + 1 and f[-1] == 1
    assert is_irreducible_mod_p(list(f), p)


def test_parse_ring():
    assert parse_ring("Q") is QQ and parse_ring("ZZ") is ZZ
    assert parse_ring("F7") == FiniteField(7)
    assert parse_ring("F2^3") == FiniteField(2, 3)
    assert parse_ring("Z/7^2") == ZmodPB(7, 2)
    with pytest.raises(Unsupported):
        parse_ring("R")


def test_bad_rings():
    with pytest.raises(Unsupported):
        FiniteField(6)
    with pytest.raises(Unsupported):
        ZmodPB(4, 2)


def test_finite_field_size():
    F = FiniteField(2, 3)
    els = list(F.elements())
    assert len(els) == 8 == F.order
    assert sum(1 for a in els if F.is_unit(a)) == 7


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FIELDS), st.data())
def test_field_axioms(F, data):
    els = list(F.elements()) if F.order <= 81 else None
    a, b, c = (data.draw(st.sampled_from(els)) for _ in range(3))
    assert F.eq(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c)))
    assert F.eq(F.mul(a, b), F.mul(b, a))
    assert F.eq(F.add(a, F.neg(a)), F.zero)
    if not F.is_zero(a):
        assert F.eq(F.mul(a, F.inv(a)), F.one)
        # Fermat: a^(q-1) = 1
        assert F.eq(F.pow(a, F.order - 1), F.one)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([(7, 1), (7, 2), (5, 3), (2, 4)]), st.integers(-10**6, 10**6),
       st.integers(-10**6, 10**6))
def test_zmod_matches_integers(pb, x, y):
    R = ZmodPB(*pb)
    a, b = R.coerce(x), R.coerce(y)
    # lift is the symmetric representative
    assert (R.lift(R.mul(a, b)) - x * y) % R.n == 0
    assert (R.lift(R.sub(a, b)) - (x - y)) % R.n == 0
    assert abs(R.lift(a)) <= R.n // 2
    assert R.is_unit(a) == (x % R.p != 0)
    if R.is_unit(a):
        assert R.lift(R.mul(a, R.inv(a))) == 1


def test_rationals_coerce_and_reduce():
    assert QQ.coerce(3) == Fraction(3)
    F = FiniteField(7)
    # 1/3 in F_7 is 5
    assert F.coerce(Fraction(1, 3)) == F.coerce(5)
