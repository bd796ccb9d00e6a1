from fractions import Fraction

import sympy
from hypothesis import given, settings, strategies as st
from sympy.matrices.normalforms import smith_normal_form

from newmodp import linalg as la
from newmodp.rings import QQ, FiniteField

small = st.integers(-9, 9)


def matrices(rows=(1, 5), cols=(1, 5), elem=small):
    return st.integers(*rows).flatmap(
        lambda n: st.integers(*cols).flatmap(
            lambda m: st.lists(st.lists(elem, min_size=m, max_size=m), min_size=n, max_size=n)))


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_matches_sympy_over_q(A):
    Aq = [[Fraction(x) for x in r] for r in A]
    assert la.rank(Aq, QQ) == sympy.Matrix(A).rank()


@settings(max_examples=60, deadline=None)
@given(matrices(), st.sampled_from([2, 3, 7]))
def test_rank_nullity_and_kernel(A, p):
    F = FiniteField(p)
    M = [[F.coerce(x) for x in r] for r in A]
    K = la.left_kernel(M, F)
    assert la.rank(M, F) + len(K) == len(M)
    for v in K:
        assert all(F.is_zero(x) for x in la.vecmat(v, M, F))


@settings(max_examples=50, deadline=None)
@given(matrices(rows=(1, 4), cols=(1, 4)))
def test_smith_matches_sympy(A):
    ours = la.smith_diagonal(A)
    S = smith_normal_form(sympy.Matrix(A), domain=sympy.ZZ)
    theirs = [abs(int(S[i, i])) for i in range(min(S.shape)) if S[i, i] != 0]
    assert ours == theirs
    for a, b in zip(ours, ours[1:]):
        assert b % a == 0


@settings(max_examples=50, deadline=None)
@given(matrices(rows=(1, 3), cols=(3, 6)))
def test_saturate_is_idempotent_and_spans(A):
    H, piv = la.saturate(A)
    Aq = [[Fraction(x) for x in r] for r in A]
    Hq = [[Fraction(x) for x in r] for r in H]
    assert la.span_equal(la.row_basis(Aq, QQ), Hq, QQ) if any(any(r) for r in A) else not H
    H2, _ = la.saturate(H)
    assert [list(r) for r in H2] == [list(r) for r in H]
    # every integral vector of the span has integral coordinates in H
    for r in A:
        if any(r):
            c = la.integer_coords(H, r)
            assert c is not None


@settings(max_examples=40, deadline=None)
@given(matrices(rows=(2, 4), cols=(2, 4)), st.sampled_from([FiniteField(5), FiniteField(2, 2)]))
def test_intersection_and_sum_dimensions(A, F):
    n = len(A) // 2
    B1 = la.row_basis([[F.coerce(x) for x in r] for r in A[:n]], F)
    B2 = la.row_basis([[F.coerce(x) for x in r] for r in A[n:]], F)
    s = la.span_sum(B1, B2, F)
    i = la.span_intersection(B1, B2, F)
    assert len(s) + len(i) == len(B1) + len(B2)
    if i:
        assert la.span_contains(B1, i, F) and la.span_contains(B2, i, F)


@settings(max_examples=40, deadline=None)
@given(matrices(rows=(3, 3), cols=(3, 3)), st.sampled_from([3, 5, 7]))
def test_charpoly_cayley_hamilton(A, p):
    F = FiniteField(p)
    M = [[F.coerce(x) for x in r] for r in A]
    c = la.charpoly(M, F)
    assert la.is_zero_matrix(la.poly_eval_matrix(c, M, F), F)


def test_echelon_coords_roundtrip():
    F = FiniteField(7)
    B = [[1, 2, 3, 4], [0, 1, 5, 6]]
    E = la.Echelon(B, F)
    v = la.vecmat([3, 4], B, F)
    assert E.coords(v) == [3, 4]
    assert E.coords([0, 0, 0, 1]) is None
