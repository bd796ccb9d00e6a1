import pytest

from newmodp import linalg as la
from newmodp.errors import BadCongruence, PairingDegenerate
from newmodp.heckealg import (
    component_ops, decompose, duality_basis, k_space, level_pair, local_algebra,
    monsky_filtration, monskyfiltruth_check, nilpotency_index, pairing, prefix_rows,
    quotient_annihilators, splitting_degree, standard_filtration, surj_nzdiv,
)
from newmodp.operators import op_T, op_U
from newmodp.qexp import eta_delta, qexp_mul
from newmodp.rings import FiniteField

F2 = FiniteField(2)


def _support(q, top):
    return [n for n in range(top) if q[n]]


# ---------------------------------------------------------------- K = ker U_p

def test_kspace_level1_mod2_to_weight36():
    ks = k_space(1, 2, 0, 36)
    gs = ks.graded
    assert ks.dim == 2 and gs.row_weight == [0, 12, 24, 36]
    D = eta_delta(F2, gs.prec)
    D2, D3 = qexp_mul(D, D), qexp_mul(qexp_mul(D, D), D)
    K = ks.basis
    assert la.span_equal(K, [gs.member(D), gs.member(D3)], F2)
    assert not la.span_contains(K, [gs.member(D2)], F2)


def test_kspace_weight24_holds_only_delta():
    # Delta^3 has weight 36, so a truncation at 24 sees Delta alone
    ks = k_space(1, 2, 0, 24)
    assert ks.dim == 1 and ks.basis == [[0, 1, 0]]


@pytest.mark.parametrize("level,p,kappa,kmax", [(1, 2, 0, 60), (3, 2, 0, 24), (1, 5, 0, 40), (5, 7, 4, 16)])
def test_kspace_is_killed_by_U_and_hecke_stable(pack, level, p, kappa, kmax):
    ks = k_space(level, p, kappa, kmax, fixtures=pack)
    gs, F = ks.graded, ks.graded.ring
    U = op_U(gs, p)
    for v in ks.basis:
        assert not any(la.vecmat(v, U.matrix, F))
    for r in (11, 13):
        T = op_T(gs, r)
        assert la.span_contains(ks.basis, [T.apply(v) for v in ks.basis], F)


def test_slices_are_prefixes():
    ks = k_space(1, 2, 0, 60)
    counts = [ks.slice_count(k) for k in ks.slice_weights()]
    assert counts == sorted(counts) and counts[-1] == ks.graded.dim
    dims = [len(prefix_rows(ks.basis, n, F2)) for n in counts]
    assert dims == sorted(dims) and dims[-1] == ks.dim


# ---------------------------------------------------------------- components

def test_decompose_level1_mod2_is_one_component():
    ks = k_space(1, 2, 0, 36)
    comps = decompose(ks)
    assert len(comps) == 1
    c = comps[0]
    assert c.dim == 2 and set(c.system.fmt().replace(":", " ").split()[1::2]) == {"0"}


def test_decompose_dimensions_add_up(pair_15_7):
    for ks, comps in ((pair_15_7.up, pair_15_7.comps_up), (pair_15_7.low, pair_15_7.comps_low)):
        assert sum(c.dim for c in comps) == ks.dim
        keys = [c.system.key() for c in comps]
        assert len(set(keys)) == len(keys)


def test_pair_15_7_components(pair_15_7):
    P = pair_15_7
    assert P.field.m == 2       # two conjugate systems need F_49
    got = sorted((c.system.fmt(), c.dim, c.system.origin) for c in P.comps_up)
    old = [g for g in got if g[2] == "old"]
    assert [(s.split()[0], d) for s, d, _ in old] == [("2:1", 2), ("2:6", 4)]
    assert sum(d for _, d, o in got if o == "new-only") == 6
    for c in P.comps_up:
        assert (P.low_for(c) is not None) == (c.system.origin == "old")


def test_fixture_system_shows_up_at_weight28(pack):
    # the reduction of the level 5 newform of weight 4 sits in K(5) through f - V U f, of weight 28
    f = next(fx for fx in pack if fx.label == "5.4.5+")
    want = {r: f.a(r) % 7 for r in (2, 3, 11, 13, 17, 19)}
    assert want == {2: 3, 3: 2, 11: 4, 13: 4, 17: 5, 19: 2}
    comps = decompose(k_space(5, 7, 4, 28, fixtures=pack))
    hits = [c for c in comps if all(c.system.field.fmt(c.system.values[r]) == str(v) for r, v in want.items())]
    assert len(hits) == 1 and hits[0].dim == 1
    short = decompose(k_space(5, 7, 4, 16, fixtures=pack))
    assert not [c for c in short if c.system.field.fmt(c.system.values[2]) == "3"
                and c.system.field.fmt(c.system.values[3]) == "2"]


def test_splitting_degree():
    assert splitting_degree([[[0, 1], [1, 1]]], 2) == 2     # x^2 + x + 1 is irreducible mod 2
    assert splitting_degree([[[1, 0], [0, 0]]], 2) == 1
    assert nilpotency_index([[0, 1], [0, 0]], F2) == 2
    assert nilpotency_index([[1]], F2) is None


# ---------------------------------------------------------------- local algebras

def test_local_algebra_p2_level3(pair_l3):
    A = local_algebra(pair_l3.comps_up[0])
    assert A.commutative and A.dim == 4
    assert A.nilpotency == {5: 2, 7: 2, 11: 2, 13: 1, 17: 1, 19: 2}


def test_local_algebra_dim1_is_scalars(pair_15_7):
    for c in pair_15_7.comps_up:
        A = local_algebra(c)
        assert A.commutative
        if c.dim == 1:
            assert A.dim == 1 and set(A.nilpotency.values()) == {1}
    big = next(c for c in pair_15_7.comps_up if c.dim == 4)
    assert local_algebra(big).dim == 2


def test_local_algebra_level1_acts_faithfully_and_cyclically(k972):
    ks, comp = k972
    A = local_algebra(comp, [3, 5, 7])
    assert A.commutative and A.dim == comp.dim == 41
    assert A.nilpotency == {3: 8, 5: 7, 7: 4}


# ---------------------------------------------------------------- filtrations

def test_standard_filtration_mod7(pair_15_7):
    P = pair_15_7
    for c in P.comps_up:
        f = standard_filtration(P, c)
        assert f.nested and f.stable and f.passed
        assert f.data["equivariant_Tr"] and f.data["equivariant_TrW"]
        if c.system.origin == "new-only":
            assert f.data["dim_low"] == 0
            assert len(f.chain[0][1]) == len(f.chain[2][1]) == c.dim
    dims = {c.system.fmt().split()[0]: [len(r) for _, r in standard_filtration(P, c).chain]
            for c in P.comps_up if c.system.origin == "old"}
    assert dims == {"2:1": [0, 1, 2], "2:6": [2, 3, 4]}
    for c in P.comps_up:
        if c.system.origin == "old":
            f = standard_filtration(P, c)
            assert f.data["surjective_all"]
            assert f.data["check_iso_Tr"] and f.data["check_iso_TrW"]
            assert f.data["dim_quotient"] == f.data["dim_middle"] == f.data["dim_low"]


@pytest.mark.parametrize("which,chain", [("pair_l3", [4, 5, 6]), ("pair_l5", [7, 8, 9])])
def test_standard_filtration_mod2(request, which, chain):
    P = request.getfixturevalue(which)
    f = standard_filtration(P, P.comps_up[0])
    assert [len(r) for _, r in f.chain] == chain
    assert f.nested and f.stable and f.passed
    # Tr cannot reach Delta from weights <= 12 at level 3 l: the certificate fails at a cut slice
    assert not f.data["surjective_all"] and "check_iso_Tr" not in f.data
    assert any(not s["Tr_onto"] for s in f.slices)
    for s in f.slices:
        assert s["new"] <= s["kerTr"] <= s["K"]


def test_quotient_annihilators(pair_15_7, pair_l3):
    for c in pair_15_7.comps_up:
        if c.system.origin == "old":
            q = quotient_annihilators(pair_15_7, c)
            assert q["low_in_quotient"] and q["equal"]
    q = quotient_annihilators(pair_l3, pair_l3.comps_up[0])
    # the top of the quotient is cut: every relation on K(N)_t holds, not conversely
    assert q["low_in_quotient"] and not q["equal"] and q["ranks"] == (1, 2, 2)


@pytest.mark.parametrize("which,chain", [("pair_l3", [2, 5, 6]), ("pair_l5", [2, 8, 9])])
def test_monsky_filtration(request, which, chain):
    P = request.getfixturevalue(which)
    f = monsky_filtration(P, P.comps_up[0])
    assert f.style == "Monsky" and f.nested and f.stable
    assert [len(r) for _, r in f.chain] == chain


def test_monsky_needs_l_minus_one(pair_15_7):
    c = pair_15_7.comps_up[0]
    with pytest.raises(BadCongruence):
        monsky_filtration(pair_15_7, c)
    with pytest.raises(BadCongruence):
        monskyfiltruth_check(pair_15_7, c)


def test_monsky_sequence_l3(pair_l3):
    m = monskyfiltruth_check(pair_l3, pair_l3.comps_up[0])
    assert m["passed"] and m["exact"] and m["equivariant"] and m["annihilators"]
    assert (m["dim_new"], m["dim_kerTr"], m["dim_K_low"], m["dim_kerTl"]) == (4, 5, 2, 1)
    assert [s["k"] for s in m["slices"] if s["coker"]] == [24, 28, 30, 34]
    assert m["short_exact_top"] and m["annihilators_same_truncation"]


def test_monsky_sequence_l5(pair_l5):
    m = monskyfiltruth_check(pair_l5, pair_l5.comps_up[0])
    assert m["passed"] and m["exact"] and m["equivariant"] and m["annihilators"]
    assert all(s["kerTl"] - s["new"] + s["monsky"] - s["coker"] == 0 for s in m["slices"])
    # the same truncation does not carry equal relation spaces: the Monsky piece sees more
    assert not m["annihilators_same_truncation"] and m["annihilator_ranks"] == (5, 6, 6)
    assert not m["short_exact_top"] and m["reached_slice"] == 20


# ---------------------------------------------------------------- surjectivity, duality

@pytest.mark.parametrize("r,order", [(3, 1), (5, 1), (7, 2)])
def test_surj_nzdiv_generators(k972, r, order):
    ks, comp = k972
    T = component_ops(comp, [3, 5, 7])[r]
    s = surj_nzdiv(ks, comp, T, degree=5, primes=[3, 5, 7])
    assert s["surj"] and s["nzdiv"] and s["order"] == order and s["depth"] == 5
    assert s["layer_dims"][:7] == [1, 3, 6, 10, 15, 21, 28]
    assert s["surjPerWeight"][ks.slice_weights()[-1]] is None


def test_surj_nzdiv_zero_and_identity(k972):
    ks, comp = k972
    F = comp.field
    n = comp.dim
    zero = surj_nzdiv(ks, comp, [[F.zero] * n for _ in range(n)], degree=5, primes=[3, 5, 7])
    assert zero["surj"] is False and zero["nzdiv"] is False
    one = surj_nzdiv(ks, comp, la.identity(n, F), degree=5, primes=[3, 5, 7])
    assert one["surj"] and one["nzdiv"] and one["order"] == 0
    assert all(v in (True, None) for v in one["surjPerWeight"].values())


def test_surj_nzdiv_too_deep_for_truncation(k972):
    # at degree 8 the layers V_7, V_8 are cut by the truncation (34, 38 instead of 36, 45)
    ks, comp = k972
    T = component_ops(comp, [3])[3]
    s = surj_nzdiv(ks, comp, T, degree=8, primes=[3, 5, 7])
    assert s["layer_dims"][7:9] == [34, 38]
    assert s["surj"] is False


def test_surj_nzdiv_undecided_on_a_tiny_truncation():
    ks = k_space(1, 2, 0, 24)
    comp = decompose(ks)[0]
    T = component_ops(comp, [3])[3]
    s = surj_nzdiv(ks, comp, T, primes=[3])
    assert s["surj"] is None and s["nzdiv"] is None and s["depth"] == 0


def test_duality_basis(k972, dual972):
    ks, comp = k972
    db = dual972
    assert len(db.forms) == 28 == db.pairing_rank == db.space_dim and db.shifts_ok
    gs = ks.graded
    assert _support(gs.form(db.ambient_rows[(0, 0)]), 40) == [1, 9, 25]    # Delta mod 2
    assert _support(gs.form(db.ambient_rows[(1, 0)]), 40) == [3, 11, 19]   # Delta^3
    assert _support(gs.form(db.ambient_rows[(0, 1)]), 40) == [5, 13, 29, 37]  # Delta^5
    D = eta_delta(F2, gs.prec)
    assert gs.coords(D) == db.ambient_rows[(0, 0)]
    g = component_ops(comp, [3, 5])
    F = comp.field
    assert pairing(ks, comp, g[3], db.forms[(1, 0)]) == F.one
    assert pairing(ks, comp, g[5], db.forms[(1, 0)]) == F.zero
    for b in range(1, 6):
        assert not any(la.vecmat(db.forms[(0, b)], g[3], F))


def test_duality_needs_a_perfect_pairing():
    ks = k_space(1, 2, 0, 60)
    comp = decompose(ks, [3, 5])[0]
    with pytest.raises(PairingDegenerate):
        duality_basis(ks, comp, 3)
