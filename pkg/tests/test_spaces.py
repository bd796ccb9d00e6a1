import pytest

from newmodp.errors import IncompleteFixtures, PrecisionTooLow, Unsupported
from newmodp.qexp import QExp, apply_V, eta_delta, qexp_mul, reduce_mod
from newmodp.rings import QQ, ZZ, FiniteField, ZmodPB
from newmodp.spaces import (
    SpaceParams, auto_prec, build_level1, build_space, dim_data, genus, graded_space, member,
    new_dimension,
)

# dim S_k(Gamma0(M)) and genus, checked against independent tables
DIM_S = {(15, 4): 4, (5, 4): 1, (1, 12): 1, (3, 12): 3, (3, 16): 4, (15, 2): 1,
         (5, 2): 0, (1, 24): 2, (3, 6): 1, (15, 6): 8}


@pytest.mark.parametrize("M,k", sorted(DIM_S))
def test_dim_oracle(M, k):
    assert dim_data(M, k).dim_Sk == DIM_S[M, k]


def test_dim_data_record():
    d = dim_data(15, 4)
    assert (d.mu, d.eps2, d.eps3, d.epsInf, d.genus) == (24, 0, 0, 4, 1)
    assert d.dim_Mk == 8
    assert genus(15) == 1 and genus(1) == 0
    assert dim_data(1, 0).dim_Mk == 1 and dim_data(1, 0).dim_Sk == 0
    assert dim_data(3, 2).dim_Mk == 1
    with pytest.raises(Unsupported):
        dim_data(15, 3)


def test_new_dimension():
    assert new_dimension(15, 4) == 2
    assert new_dimension(3, 12) == 1
    assert new_dimension(3, 16) == 2


def test_level1_bases():
    P = 8
    S = build_level1(12, ZZ, P, cuspidal=True)
    assert S.dim == 1 and S.row(0).agrees(eta_delta(ZZ, P))
    M0 = build_level1(0, ZZ, P)
    assert M0.dim == 1 and list(M0.row(0).coeffs) == [1] + [0] * (P - 1)
    M12 = build_level1(12, ZZ, P)
    assert M12.dim == 2 and M12.pivots == [0, 1]
    with pytest.raises(PrecisionTooLow):
        build_level1(24, ZZ, 2)


@pytest.mark.parametrize("M,k", [(15, 4), (5, 4), (3, 12), (3, 16), (15, 2), (3, 6), (5, 6)])
@pytest.mark.parametrize("cusp", [True, False])
def test_rank_matches_formula(M, k, cusp, pack):
    S = build_space(SpaceParams(M, k, QQ, auto_prec(k, M), cuspidal=cusp), pack)
    d = dim_data(M, k)
    assert S.dim == (d.dim_Sk if cusp else d.dim_Mk)
    assert S.complete


def test_reduction_keeps_rank(pack):
    P = auto_prec(4, 15)
    for R in (ZZ, FiniteField(7), ZmodPB(7, 2), FiniteField(2)):
        assert build_space(SpaceParams(15, 4, R, P), pack).dim == 4


def test_level15_saturation_index_7(pack):
    # the pre-saturation rows f, f(q^3), a, b: elementary divisors with 7-part {1, 1, 1, 7}
    S = build_space(SpaceParams(15, 4, ZZ, auto_prec(4, 15)), pack)
    divs = S.char0.smith_index()
    assert [d.denominator for d in divs] == [1, 1, 1, 1]
    assert [7 if d.numerator % 7 == 0 else 1 for d in divs] == [1, 1, 1, 7]
    assert all(d.numerator % 49 for d in divs)


def test_membership(pack):
    P = auto_prec(4, 15)
    F = FiniteField(7)
    S = build_space(SpaceParams(15, 4, F, P), pack)
    byl = {fx.label: fx for fx in pack}
    b = byl["15.4.3+5+"].qexp(F, P)
    f = byl["5.4.5+"].qexp(F, P)
    assert member(S, b) is not None
    diff = f + apply_V(f, 3).scale(2) - b
    c = member(S, diff)
    assert c is not None and all(x == 0 for x in c)
    S5 = build_space(SpaceParams(5, 4, ZZ, auto_prec(4, 5)), pack)
    assert member(S5, eta_delta(ZZ, S5.prec)) is None
    with pytest.raises(PrecisionTooLow):
        member(S, b.truncate(3))


def test_missing_fixtures_is_an_error():
    with pytest.raises(IncompleteFixtures):
        build_space(SpaceParams(15, 4, QQ, auto_prec(4, 15)), [], derive=False)


def test_bad_parameters():
    with pytest.raises(Unsupported):
        SpaceParams(9, 4, QQ, 10)
    with pytest.raises(Unsupported):
        SpaceParams(15, 4, FiniteField(3), 10)
    with pytest.raises(Unsupported):
        SpaceParams(5, 3, QQ, 10)


def test_graded_level1_mod2():
    gs = graded_space(1, 2, 0, 24)
    assert gs.weight_profile[12] == 1 and gs.weight_profile[24] == 1 and gs.dim == 3
    D = eta_delta(FiniteField(2), gs.prec)
    assert gs.member(D) is not None and gs.member(qexp_mul(D, D)) is not None


def test_graded_level3_mod2_contains_reductions(pack):
    gs = graded_space(3, 2, 0, 12, fixtures=pack, cuspidal=True)
    F = FiniteField(2)
    P = gs.prec
    D = eta_delta(ZZ, P)
    for f in (D, apply_V(D, 3), next(fx for fx in pack if fx.label.startswith("3.12")).qexp(ZZ, P)):
        assert gs.member(reduce_mod(f, F)) is not None
    for k, inc in gs.weight_profile.items():
        assert inc <= dim_data(3, k).dim_Sk


def test_graded_increasing_in_kmax(pack):
    big = graded_space(3, 5, 0, 20, fixtures=pack, cuspidal=True)
    small = graded_space(3, 5, 0, 12, prec=big.prec, fixtures=pack, cuspidal=True)
    assert small.dim < big.dim
    for v in small.rows:
        assert big.coords(v) is not None


def test_graded_multiplicative_closure(pack):
    gs = graded_space(1, 2, 0, 36)
    for i in range(gs.dim):
        for j in range(gs.dim):
            if gs.row_weight[i] + gs.row_weight[j] <= gs.kmax:
                prod = qexp_mul(gs.row(i), gs.row(j))
                assert gs.member(prod) is not None


def test_eisenstein_congruence_inclusion():
    # E_{p-1} times a weight k basis lies in weight k + p - 1, mod p
    from newmodp.qexp import eisenstein
    p = 5
    gs = graded_space(1, p, 0, 24)
    E = reduce_mod(eisenstein(p - 1, ZZ, gs.prec), FiniteField(p))
    for i in range(gs.dim):
        if gs.row_weight[i] + p - 1 <= gs.kmax:
            assert gs.member(qexp_mul(E, gs.row(i))) is not None


def test_qexp_ring_of_rows():
    S = build_level1(12, QQ, 6, cuspidal=True)
    assert isinstance(S.row(0), QExp) and S.ring is QQ
