import pytest
from hypothesis import given, settings, strategies as st

from newmodp import linalg as la
from newmodp.errors import NotApplicable, Unsupported
from newmodp.newold import (
    _closed_rows, _ker_shift, check_newformthm, epsilon, intersect_old_new, kernel_trace,
    keyker_check, lambda_k, lambda_set_stable, new_subspace_Tr, new_subspace_U, old_subspace,
    oldint_check, span_conditions,
)
from newmodp.operators import lower_space, op_T, op_W
from newmodp.qexp import eisenstein, reduce_mod
from newmodp.rings import QQ, ZZ, FiniteField
from newmodp.spaces import SpaceParams, auto_prec, build_space, graded_space

F7 = FiniteField(7)
P15 = auto_prec(4, 15, [3, 5, 7, 11, 13])


@pytest.fixture(scope="module")
def s15(pack):
    return {R: build_space(SpaceParams(15, 4, R, P15), pack) for R in (QQ, ZZ, F7)}


def _coords(space, pack, label):
    fx = next(f for f in pack if f.label == label)
    return space.coords(fx.qexp(space.ring, space.prec))


def test_old_subspace_dims(s15, pack):
    assert old_subspace(s15[QQ], 3).dim == 2
    S = build_space(SpaceParams(3, 12, QQ, auto_prec(12, 3)), pack)
    assert old_subspace(S, 3).dim == 2


@pytest.mark.parametrize("R", [QQ, ZZ, F7])
def test_new_level15(s15, pack, R):
    S = s15[R]
    U, T = new_subspace_U(S, 3), new_subspace_Tr(S, 3)
    # frozen: dimension 2 over every ring, including F_7
    assert U.dim == T.dim == 2 and U.equals(T)
    if R is not ZZ:
        both = [_coords(S, pack, "15.4.3+5+"), _coords(S, pack, "15.4.3-5-")]
        assert la.span_equal(U.rows(), both, U.field())


def test_newformthm_reports(s15, pack):
    assert check_newformthm(s15[F7], 3) == {"dim_U": 2, "dim_Tr": 2, "equal": True,
                                           "witness": None, "passed": True}
    S = build_space(SpaceParams(3, 12, QQ, auto_prec(12, 3)), pack)
    rep = check_newformthm(S, 3)
    assert rep["passed"] and rep["dim_U"] == 1


@pytest.mark.parametrize("level,ell", [(3, 3), (5, 5)])
def test_newformthm_graded_mod2(pack, level, ell):
    gs = graded_space(level, 2, 0, 24, fixtures=pack, cuspidal=True)
    assert check_newformthm(gs, ell)["passed"]


def test_new_U_is_cuspidal_only(pack):
    M = build_space(SpaceParams(15, 4, QQ, P15, cuspidal=False), pack)
    with pytest.raises(Unsupported):
        new_subspace_U(M, 3)
    assert new_subspace_Tr(M, 3).dim == 2


def test_new_part_is_W_stable(s15):
    S = s15[F7]
    W = op_W(S, 3)
    new = new_subspace_U(S, 3)
    imgs = [W.apply(r) for r in new.rows()]
    assert la.span_contains(new.rows(), imgs, F7)


def test_kernel_trace_contains_new(s15):
    S = s15[QQ]
    assert kernel_trace(S, 3).contains(new_subspace_Tr(S, 3))
    assert kernel_trace(S, 3).dim == 3


def test_keyker_cases(s15):
    S = s15[F7]
    zero = keyker_check(S, [0], [0], 3)
    assert zero["inKerS"] and zero["inKerTrTr"] and zero["lambdaConds"]
    # g = eps f with eps = +1 in the w normalization
    plus = keyker_check(S, [1], [1], 3, "w")
    assert plus["inKerS"] and plus["inKerTrTr"] and plus["lambdaConds"]
    minus = keyker_check(S, [1], [6], 3, "w")
    assert minus["agree"] and not minus["inKerS"]
    with pytest.raises(Unsupported):
        keyker_check(S, [1], [1], 3, "x")


def test_keyker_M_space_discrepancy():
    # f = 1 (the reduction of E_4) in M_4 at p = 5, l = 11 = 1 mod 5
    F5 = FiniteField(5)
    M = build_space(SpaceParams(11, 4, F5, auto_prec(4, 11, [11]), cuspidal=False))
    low = lower_space(M, 11)
    f = reduce_mod(eisenstein(4, ZZ, M.prec), F5)
    rep = keyker_check(M, f, [0] * low.dim, 11)
    assert rep["inKerS"] and not rep["inKerTrTr"]
    assert not rep["cuspidal"] and not rep["agree"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.sampled_from(["w", "W"]))
def test_keyker_agrees_on_cuspforms(s15, a, b, norm):
    assert keyker_check(s15[F7], [a], [b], 3, norm)["agree"]


def test_lambda_and_epsilon():
    assert lambda_k(3, 4, 7) == 2
    assert all(lambda_k(3, k, 2) == 0 for k in range(2, 40, 2))
    assert lambda_k(3, 12, 5) == 3
    assert epsilon(-243, 3, 12, 5) == -1
    assert epsilon(2, 3, 4, 7) == 1
    with pytest.raises(NotApplicable):
        epsilon(1, 3, 4, 7)
    with pytest.raises(NotApplicable):
        epsilon(0, 3, 12, 2)
    with pytest.raises(Unsupported):
        lambda_k(7, 4, 7)


@pytest.mark.parametrize("ell,p", [(3, 5), (3, 7), (5, 7), (5, 3), (7, 5)])
def test_lambda_set_depends_on_class_only(ell, p):
    for kappa in range(0, max(p - 1, 2), 2):
        assert lambda_set_stable(ell, kappa, p, 60)


def test_intersection_level15(s15, pack):
    rep = intersect_old_new(s15[F7], 3)
    assert rep.dim == 1 and rep.lam == 2 and rep.matches
    cb = _coords(s15[F7], pack, "15.4.3+5+")
    assert la.span_equal(rep.subspace, [cb], F7)
    cases = sorted(c["case"] for c in rep.components)
    assert cases == ["lambda!=0, eps=+1", "new at l"]
    assert rep.passed


def test_closed_form_sign(s15):
    # the intersection is {f + eps w f : T f = eps lambda f}; the opposite sign misses it
    S = s15[F7]
    low = lower_space(S, 3)
    K = _ker_shift(low, 3, 2, F7)
    plus = _closed_rows(S, low, 3, K, 1, F7)
    minus = _closed_rows(S, low, 3, K, -1, F7)
    inter = intersect_old_new(S, 3, by_component=False).subspace
    assert la.span_equal(inter, plus, F7)
    assert not la.span_equal(inter, minus, F7)


def test_level_raising_fails_component(pack):
    # Delta mod 7 has tau(3) = 252 = 0, while lambda_12 = 1 at l = 3
    S = build_space(SpaceParams(3, 12, F7, auto_prec(12, 3, [3, 5, 7, 11, 13, 17, 19])), pack)
    rep = intersect_old_new(S, 3)
    fails = [c for c in rep.components if c["case"] == "level raising fails"]
    assert len(fails) == 1
    c = fails[0]
    assert c["t_ell"] == "0" and c["dim_new"] == 0 and c["dim_inter"] == 0 and c["passed"]


@pytest.mark.parametrize("k", [12, 16])
def test_no_failing_component_mod5(pack, k):
    # every level 1 system mod 5 meets the level raising condition at l = 3
    S = build_space(SpaceParams(3, k, FiniteField(5), auto_prec(k, 3, [3, 7, 11, 13, 17, 19])), pack)
    rep = intersect_old_new(S, 3)
    assert rep.passed
    assert all(c["case"] != "level raising fails" for c in rep.components)
    assert any(c["case"].startswith("lambda!=0") for c in rep.components)


def test_intersection_lambda_zero_graded(pack):
    gs = graded_space(3, 2, 0, 24, fixtures=pack, cuspidal=True)
    rep = intersect_old_new(gs, 3)
    assert rep.case == "lambda=0" and rep.matches and rep.dim == 4


def test_intersection_is_zero_in_char0(s15):
    S = s15[QQ]
    assert not la.span_intersection(old_subspace(S, 3).basis, new_subspace_U(S, 3).basis, QQ)
    with pytest.raises(Unsupported):
        intersect_old_new(S, 3)


def test_span_conditions_level15(pack):
    reps = {c["dim"]: c for c in span_conditions(5, 3, 7, 4, 2, pack)}
    f_comp = reps[3]
    assert f_comp["conditions"] == {"1": False, "2": False, "3": False, "4": False, "5": False}
    assert f_comp["index_vp"] == 1 and f_comp["witness"] is not None
    assert reps[1]["conditions"] == dict.fromkeys("12345", True) and reps[1]["dim_old"] == 0
    assert all(c["passed"] for c in reps.values())


def test_span_conditions_level_raising_fails(pack):
    reps = span_conditions(1, 3, 7, 12, 2, pack)
    old = next(c for c in reps if c["dim_old"])
    assert old["t_ell"] == 0 and old["conditions"] == dict.fromkeys("12345", True)
    assert all(c["passed"] for c in reps)


def test_oldint(pack):
    S = build_space(SpaceParams(15, 4, QQ, P15), pack)
    assert oldint_check(S, 3) == {"dim": 0, "constants_present": False, "passed": True}
    gs = graded_space(3, 2, 0, 24, fixtures=pack)
    rep = oldint_check(gs, 3)
    assert rep["dim"] == 1 and rep["constants_present"] and rep["passed"]
    M0 = build_space(SpaceParams(15, 0, QQ, 10, cuspidal=False))
    assert oldint_check(M0, 3)["dim"] == 1


def test_subspaces_hecke_stable(s15):
    S = s15[F7]
    for sub in (old_subspace(S, 3), new_subspace_U(S, 3), kernel_trace(S, 3)):
        for r in (2, 11, 13):
            T = op_T(S, r)
            assert la.span_contains(sub.rows(), [T.apply(v) for v in sub.rows()], F7)
